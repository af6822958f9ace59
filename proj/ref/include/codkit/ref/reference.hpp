#pragma once

// Serial reference implementations. Everything here is written as direct,
// single-threaded loops straight from the defining formulas and is kept
// deliberately independent of the kernels in src/. Tests compare the two;
// the benchmark tool times them against each other.

#include <optional>
#include <utility>
#include <vector>

#include "codkit/ops.hpp"
#include "codkit/tensor.hpp"

namespace codkit::ref {

/// O((HW)^2) direct DFT summation per channel, unnormalized forward.
ComplexPlane dft2_direct(const Tensor& x);

/// Direct inverse DFT with 1/(H*W) normalization; returns the real plane and
/// writes the max |imag| residue if requested.
Tensor idft2_direct(const ComplexPlane& c, double* max_imag = nullptr);

/// Quadruple-loop cross-correlation with the same contract as codkit::conv2d.
Tensor conv2d_naive(const Tensor& x, const ConvWeight& kernel, const std::vector<float>& bias,
                    int stride = 1, int padding = 0, int dilation = 1, int groups = 1);

Tensor avg_pool2d_naive(const Tensor& x, int k, int stride, int padding);

Tensor batch_norm_naive(const Tensor& x, const std::vector<float>& scale,
                        const std::vector<float>& shift, const std::vector<float>& mean,
                        const std::vector<float>& var, float eps);

/// Binary dilation as a brute-force max over the k x k window.
Tensor dilate_window_max(const Tensor& edge, int k);

/// Binary erosion with a k x k all-ones structuring element (out-of-bounds
/// counts as background).
Tensor erode_naive(const Tensor& mask, int k);

/// mask AND NOT eroded(mask): the inner one-pixel boundary ring.
Tensor boundary_ring(const Tensor& mask);

// -- scalar-loop loss oracles (double precision throughout) --

std::vector<double> pixel_weights_loop(const Tensor& g, int pool_k, double weight_amp);
double weighted_bce_loop(const Tensor& p, const Tensor& g, int pool_k, double weight_amp,
                         double eps);
double weighted_iou_loop(const Tensor& p, const Tensor& g, int pool_k, double weight_amp);

/// Same losses over double buffers; used by the finite-difference oracle so
/// the perturbation is not quantized to float.
double weighted_bce_loop_d(const std::vector<double>& p, const std::vector<double>& g,
                           const std::vector<double>& w, double eps);
double weighted_iou_loop_d(const std::vector<double>& p, const std::vector<double>& g,
                           const std::vector<double>& w);

// -- literal metric re-implementations --

double mae_loop(const Tensor& p, const Tensor& g);
double s_measure_literal(const Tensor& p, const Tensor& g, double alpha = 0.5);
double e_measure_mean_literal(const Tensor& p, const Tensor& g);
/// Empty ground truth yields nullopt (the caller treats it as a skip).
std::optional<double> weighted_f_literal(const Tensor& p, const Tensor& g, double beta2 = 1.0);

}  // namespace codkit::ref
