#include "codkit/frequency_edge.hpp"

#include "codkit/fft.hpp"

namespace codkit {

Spectrum decompose(const Tensor& f) { return to_polar(fft2(f)); }

Tensor enhance_amplitude(const Tensor& a, const FeemParams& p) {
    const Tensor h = p.hf_bn.apply(p.hf_conv.apply(a));
    return mul(h, sigmoid(p.amp_attention.apply(h)));
}

Tensor refine_phase(const Tensor& phase, const Tensor& amp_enhanced, const Tensor& amp_orig,
                    const FeemParams& p) {
    require_same_shape(phase, amp_enhanced, "refine_phase: phase vs enhanced amplitude");
    require_same_shape(amp_enhanced, amp_orig, "refine_phase: enhanced vs original amplitude");
    const Tensor gate = sigmoid(p.residual_weight.apply(sub(amp_enhanced, amp_orig)));
    Tensor refined = p.phase_bn.apply(p.phase_conv.apply(mul(phase, gate)));
    for (std::size_t i = 0; i < refined.size(); ++i) refined[i] = wrap_angle(refined[i]);
    return refined;
}

Tensor feem_forward(const Tensor& f, const FeemParams& p) {
    const Spectrum s = decompose(f);
    const Tensor amp_enhanced = enhance_amplitude(s.amplitude, p);
    const Tensor phase_refined = refine_phase(s.phase, amp_enhanced, s.amplitude, p);
    const Tensor rec = ifft2(hermitian_symmetrize(from_polar(amp_enhanced, phase_refined)));
    return add(rec, f);
}

Tensor phase_only_reconstruct(const Tensor& image, bool normalize) {
    const Spectrum s = decompose(image);
    const Tensor unit(image.channels(), image.height(), image.width(), 1.0f);
    Tensor rec = ifft2(hermitian_symmetrize(from_polar(unit, s.phase)));
    return normalize ? min_max_normalize(rec) : rec;
}

Tensor edge_head(const Tensor& f_fre, const FeemParams& p) {
    return sigmoid(p.edge_head.apply(f_fre));
}

}  // namespace codkit
