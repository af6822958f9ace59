#pragma once

#include "codkit/tensor.hpp"

namespace codkit {

struct CannyConfig {
    float sigma = 1.0f;  // Gaussian blur width
    float low = 0.1f;    // hysteresis thresholds on max-normalized magnitude
    float high = 0.3f;
};

/// Ground-truth bundle: object mask, its edge map, and the dilated edge map.
struct MaskPair {
    Tensor mask;          // G_m, binary [1,H,W]
    Tensor edge;          // G_e
    Tensor dilated_edge;  // G_e^d
    int kernel_size = 1;
};

/// Full Canny pipeline on a binary mask: Gaussian blur, Sobel gradients,
/// non-maximum suppression, double threshold and hysteresis. Magnitude is
/// max-normalized before thresholding. Ties in the suppression step resolve
/// to the brighter (foreground) side, so edges land on the inner boundary
/// ring of the mask. An all-zero or all-one mask yields an all-zero edge map.
Tensor canny_edges(const Tensor& mask, const CannyConfig& cfg = {});

/// Binary dilation with a k x k all-ones structuring element; k = 1 is the
/// identity. Throws EvenKernel for even k.
Tensor dilate(const Tensor& edge, int k);

MaskPair build_supervision(const Tensor& mask, int k, const CannyConfig& cfg = {});

}  // namespace codkit
