#pragma once

#include "codkit/ops.hpp"
#include "codkit/tensor.hpp"

namespace codkit {

/// Parameters of the frequency-enhanced edge block: amplitude enhancement,
/// amplitude attention, residual-driven phase gating, phase refinement, and
/// the single-channel edge head.
struct FeemParams {
    Conv2d hf_conv;          // 3x3, C -> C
    BatchNorm hf_bn;
    Conv2d amp_attention;    // 1x1, C -> C, sigmoid-gated
    Conv2d residual_weight;  // 1x1, C -> C, sigmoid-gated
    Conv2d phase_conv;       // 3x3, C -> C
    BatchNorm phase_bn;
    Conv2d edge_head;        // 1x1, C -> 1
};

/// Per-channel FFT + polar split of a feature map.
Spectrum decompose(const Tensor& f);

/// A' = H(a) * sigmoid(Att(H(a))), H = conv3x3 + BN.
Tensor enhance_amplitude(const Tensor& a, const FeemParams& p);

/// P' = Refine(phase * sigmoid(W(A' - A))), wrapped back into (-pi, pi].
Tensor refine_phase(const Tensor& phase, const Tensor& amp_enhanced, const Tensor& amp_orig,
                    const FeemParams& p);

/// Full block: decompose, enhance amplitude, refine phase, reconstruct, add
/// the residual input. The modified spectrum is hermitian-symmetrized before
/// inversion so the reconstruction is real for any parameter values.
Tensor feem_forward(const Tensor& f, const FeemParams& p);

/// Inverse FFT of a unit-amplitude spectrum carrying only the input's phase.
/// `normalize` min-max rescales the result onto [0,1] (the raw values are
/// needed by the unit-amplitude self-check).
Tensor phase_only_reconstruct(const Tensor& image, bool normalize = true);

/// 1x1 conv to one channel + sigmoid; values in (0,1).
Tensor edge_head(const Tensor& f_fre, const FeemParams& p);

}  // namespace codkit
