#pragma once

#include "codkit/ops.hpp"
#include "codkit/tensor.hpp"

namespace codkit {

/// Attention-gated aggregation of a branch feature with the previous decoder
/// output: conv3x3 on the concatenation, BN, sigmoid.
struct EffbParams {
    Conv2d att_conv;  // 3x3, 2C -> C
    BatchNorm att_bn;
};

/// att = sigmoid(BN(conv(cat(f_branch, f_fuse_prev))));
/// output = att * f_branch + f_branch + f_fuse_prev.
Tensor effb(const Tensor& f_branch, const Tensor& f_fuse_prev, const EffbParams& p);

/// Dual-branch fusion block: per-branch CBR stems, a spatially varying local
/// gate, a pooled per-channel global gate, and a refinement tail.
struct SffimParams {
    Conv2d cbr_spa_conv;  // 3x3, C -> C
    BatchNorm cbr_spa_bn;
    Conv2d cbr_fre_conv;
    BatchNorm cbr_fre_bn;
    Conv2d lf_dw;  // depthwise 3x3
    Conv2d lf_pw;  // pointwise 1x1
    BottleneckMlp gf_mlp;
    Conv2d refine_conv;  // 3x3, C -> C
    BatchNorm refine_bn;
    /// The literal equations route each branch through the other side's
    /// aggregated feature; false selects the straight pairing instead.
    bool cross_pairing = true;
};

/// x * sigmoid(pointwise(depthwise(x))) + x; the gate varies per pixel.
Tensor local_fusion(const Tensor& x, const SffimParams& p);

/// x * sigmoid(mlp(global_avg(x))) + x; the gate is constant per channel.
Tensor global_fusion(const Tensor& x, const SffimParams& p);

/// Full fusion step. With cross pairing:
///   fuse1_f = effb(f_fre, fuse_prev); fuse1_s = effb(f_spa, fuse_prev);
///   fuse2_s = LF(CBR(f_spa) + fuse1_f); fuse2_f = GF(CBR(f_fre) + fuse1_s);
///   output  = Refine(fuse2_s + fuse2_f).
Tensor sffim_forward(const Tensor& f_spa, const Tensor& f_fre, const Tensor& fuse_prev,
                     const SffimParams& p, const EffbParams& effb_s, const EffbParams& effb_f);

}  // namespace codkit
