#pragma once

#include <string>

#include "codkit/tensor.hpp"

namespace codkit {

/// Load a PNG or PGM (by extension) as [1,H,W] grayscale in [0,1].
/// RGB inputs are reduced with the BT.601 luma weights.
Tensor load_image_gray(const std::string& path);

/// Load a PNG as [3,H,W] RGB in [0,1]; grayscale inputs are replicated.
Tensor load_image_rgb(const std::string& path);

/// Write [1,H,W] values in [0,1] as 8-bit grayscale (values clamped, then
/// rounded to the nearest of 256 levels). Format chosen by extension
/// (.png or .pgm).
void save_image_gray(const std::string& path, const Tensor& img);

/// Write [3,H,W] values in [0,1] as 8-bit RGB PNG.
void save_image_rgb(const std::string& path, const Tensor& img);

}  // namespace codkit
