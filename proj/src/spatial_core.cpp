#include "codkit/spatial_core.hpp"

namespace codkit {

Tensor spatial_attention(const Tensor& f, const ScsmParams& p) {
    const Tensor stat = concat_channels(channel_mean(f), channel_max(f));
    const Tensor gate = sigmoid(p.sa_conv.apply(stat));
    return mul_broadcast_spatial(f, gate);
}

Tensor channel_attention(const Tensor& f, const ScsmParams& p) {
    const std::vector<float> a = p.ca_mlp.apply(global_avg(f));
    const std::vector<float> m = p.ca_mlp.apply(global_max(f));
    std::vector<float> gate(a.size());
    for (std::size_t i = 0; i < gate.size(); ++i) gate[i] = sigmoid_scalar(a[i] + m[i]);
    return mul_broadcast_channel(f, gate);
}

Tensor aspp(const Tensor& f, const ScsmParams& p) {
    const Tensor b0 = p.aspp_branch[0].apply(f);
    const Tensor b1 = p.aspp_branch[1].apply(f);
    const Tensor b2 = p.aspp_branch[2].apply(f);
    return p.aspp_merge.apply(concat_channels(concat_channels(b0, b1), b2));
}

Tensor scsm_forward(const Tensor& f, const ScsmParams& p) {
    const Tensor u = add(spatial_attention(f, p), channel_attention(f, p));
    const Tensor v = p.dw_conv.apply(p.spa_in.apply(u));
    if (v.channels() % 2 != 0) throw OddChannelCount("scsm_forward: projected channels");
    auto [half_a, half_b] = split_channels(v, v.channels() / 2);
    const Tensor f4 = add(p.spa_out.apply(mul(gelu(half_a), half_b)), f);
    return aspp(f4, p);
}

}  // namespace codkit
