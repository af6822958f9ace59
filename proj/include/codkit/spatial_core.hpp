#pragma once

#include <array>

#include "codkit/ops.hpp"
#include "codkit/tensor.hpp"

namespace codkit {

/// Parameters of the spatial segmentation block: CBAM-style dual attention,
/// gated channel-doubling projection, and dilated pyramid pooling.
struct ScsmParams {
    Conv2d sa_conv;                      // 7x7, 2 -> 1 (mean/max planes)
    BottleneckMlp ca_mlp;                // shared avg/max bottleneck
    Conv2d spa_in;                       // 1x1, C -> 2C
    Conv2d dw_conv;                      // depthwise 3x3 over 2C
    Conv2d spa_out;                      // 1x1, C -> C
    std::array<Conv2d, 3> aspp_branch;   // 3x3 at dilation 1, 2, 4
    Conv2d aspp_merge;                   // 1x1, 3C -> C
};

/// f * sigmoid(conv7x7(cat(channel_mean, channel_max))), gate shared by all
/// channels.
Tensor spatial_attention(const Tensor& f, const ScsmParams& p);

/// f * sigmoid(mlp(global_avg) + mlp(global_max)), one gate per channel.
Tensor channel_attention(const Tensor& f, const ScsmParams& p);

/// Three parallel dilated 3x3 branches (rates 1, 2, 4, padding = rate)
/// concatenated and merged back to C channels.
Tensor aspp(const Tensor& f, const ScsmParams& p);

/// u = SA(f) + CA(f); v = DWConv(SpaIn(u)); split v into halves;
/// f4 = SpaOut(GELU(first) * second) + f; output ASPP(f4).
Tensor scsm_forward(const Tensor& f, const ScsmParams& p);

}  // namespace codkit
