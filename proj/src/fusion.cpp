#include "codkit/fusion.hpp"

namespace codkit {

Tensor effb(const Tensor& f_branch, const Tensor& f_fuse_prev, const EffbParams& p) {
    require_same_shape(f_branch, f_fuse_prev, "effb: branch vs previous fusion");
    const Tensor att = sigmoid(p.att_bn.apply(p.att_conv.apply(concat_channels(f_branch, f_fuse_prev))));
    return add(add(mul(att, f_branch), f_branch), f_fuse_prev);
}

Tensor local_fusion(const Tensor& x, const SffimParams& p) {
    const Tensor gate = sigmoid(p.lf_pw.apply(p.lf_dw.apply(x)));
    return add(mul(x, gate), x);
}

Tensor global_fusion(const Tensor& x, const SffimParams& p) {
    std::vector<float> gate = p.gf_mlp.apply(global_avg(x));
    for (float& v : gate) v = sigmoid_scalar(v);
    return add(mul_broadcast_channel(x, gate), x);
}

namespace {
Tensor cbr(const Tensor& x, const Conv2d& conv, const BatchNorm& bn) {
    return relu(bn.apply(conv.apply(x)));
}
}  // namespace

Tensor sffim_forward(const Tensor& f_spa, const Tensor& f_fre, const Tensor& fuse_prev,
                     const SffimParams& p, const EffbParams& effb_s, const EffbParams& effb_f) {
    require_same_shape(f_spa, f_fre, "sffim_forward: spatial vs frequency");
    require_same_shape(f_spa, fuse_prev, "sffim_forward: inputs vs previous fusion");
    const Tensor fuse1_f = effb(f_fre, fuse_prev, effb_f);
    const Tensor fuse1_s = effb(f_spa, fuse_prev, effb_s);
    const Tensor stem_s = cbr(f_spa, p.cbr_spa_conv, p.cbr_spa_bn);
    const Tensor stem_f = cbr(f_fre, p.cbr_fre_conv, p.cbr_fre_bn);
    const Tensor fuse2_s = local_fusion(add(stem_s, p.cross_pairing ? fuse1_f : fuse1_s), p);
    const Tensor fuse2_f = global_fusion(add(stem_f, p.cross_pairing ? fuse1_s : fuse1_f), p);
    return p.refine_bn.apply(p.refine_conv.apply(add(fuse2_s, fuse2_f)));
}

}  // namespace codkit
