#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "codkit/fft.hpp"
#include "codkit/frequency_edge.hpp"
#include "codkit/fusion.hpp"
#include "codkit/model.hpp"
#include "codkit/ref/reference.hpp"
#include "codkit/spatial_core.hpp"
#include "test_util.hpp"

using namespace codkit;
using testutil::max_abs;
using testutil::max_abs_diff;
using testutil::random_tensor;

namespace {

ConvWeight identity_weight(int c, int k) {
    ConvWeight w(c, c, k, k);
    for (int i = 0; i < c; ++i) w.at(i, i, k / 2, k / 2) = 1.0f;
    return w;
}

Conv2d identity_conv(int c, int k) {
    Conv2d conv;
    conv.w = identity_weight(c, k);
    conv.bias.assign(c, 0.0f);
    conv.padding = k / 2;
    return conv;
}

/// 1x1 conv with zero weights and a fixed bias: a constant pre-activation,
/// so sigmoid gates can be pinned fully open (+40) or shut (-40).
Conv2d const_gate_conv(int cout, int cin, float bias) {
    Conv2d conv;
    conv.w = ConvWeight(cout, cin, 1, 1);
    conv.bias.assign(cout, bias);
    return conv;
}

void randomize_bn(BatchNorm& bn, Rng& rng) {
    for (std::size_t i = 0; i < bn.scale.size(); ++i) {
        bn.scale[i] = static_cast<float>(rng.uniform(0.5, 1.5));
        bn.shift[i] = static_cast<float>(rng.uniform(-0.3, 0.3));
        bn.running_mean[i] = static_cast<float>(rng.uniform(-0.3, 0.3));
        bn.running_var[i] = static_cast<float>(rng.uniform(0.5, 2.0));
    }
    bn.eps = 1e-5f;
}

/// Random parameter bundles of matching shapes come from the model
/// initializer; batch-norm statistics get scattered on top.
ModelParams random_params(std::uint64_t seed, int channels = 4) {
    ModelConfig cfg;
    cfg.channels = channels;
    cfg.levels = 2;
    cfg.input_h = 32;
    cfg.input_w = 32;
    cfg.seed = seed;
    ModelParams p = init_params(cfg);
    Rng rng(seed * 31 + 5);
    for (FeemParams& f : p.feem) {
        randomize_bn(f.hf_bn, rng);
        randomize_bn(f.phase_bn, rng);
    }
    for (SffimParams& s : p.sffim) {
        randomize_bn(s.cbr_spa_bn, rng);
        randomize_bn(s.cbr_fre_bn, rng);
        randomize_bn(s.refine_bn, rng);
    }
    for (EffbParams* e : {&p.sffim_effb_s[0], &p.sffim_effb_f[0]}) randomize_bn(e->att_bn, rng);
    return p;
}

FeemParams identity_feem(int c) {
    FeemParams p;
    p.hf_conv = identity_conv(c, 3);
    p.hf_bn = BatchNorm::identity(c);
    p.amp_attention = const_gate_conv(c, c, 40.0f);   // gate pinned to 1
    p.residual_weight = const_gate_conv(c, c, 40.0f); // gate pinned to 1
    p.phase_conv = identity_conv(c, 3);
    p.phase_bn = BatchNorm::identity(c);
    p.edge_head = const_gate_conv(1, c, 0.0f);
    return p;
}

}  // namespace

// ---- frequency edge ----

TEST_CASE("decompose of a constant input is amplitude-pure DC") {
    Tensor f(2, 8, 8, 3.0f);
    Spectrum s = decompose(f);
    for (int c = 0; c < 2; ++c) {
        CHECK(s.amplitude.at(c, 0, 0) == doctest::Approx(3.0 * 64).epsilon(1e-6));
        CHECK(s.phase.at(c, 0, 0) == 0.0f);
        for (int y = 0; y < 8; ++y)
            for (int x = 0; x < 8; ++x) {
                if (y == 0 && x == 0) continue;
                CHECK(s.amplitude.at(c, y, x) == 0.0f);
                CHECK(s.phase.at(c, y, x) == 0.0f);
            }
    }
}

TEST_CASE("decompose of an impulse is phase-free and flat") {
    Tensor f(1, 8, 8);
    f.at(0, 0, 0) = 1.0f;
    Spectrum s = decompose(f);
    for (std::size_t i = 0; i < s.amplitude.size(); ++i) {
        CHECK(s.amplitude[i] == doctest::Approx(1.0).epsilon(1e-6));
        CHECK(std::abs(s.phase[i]) < 1e-6);
    }
}

TEST_CASE("decompose round-trips through from_polar and ifft2") {
    Rng rng(21);
    Tensor f = random_tensor(rng, 2, 16, 16);
    Tensor back = ifft2(from_polar(decompose(f)));
    CHECK(max_abs_diff(f, back) < 1e-5);
}

TEST_CASE("open attention gate with identity enhancement returns the amplitude") {
    Rng rng(22);
    Tensor a = random_tensor(rng, 4, 8, 8, 0.0, 2.0);
    FeemParams p = identity_feem(4);
    CHECK(max_abs_diff(enhance_amplitude(a, p), a) < 1e-6);
}

TEST_CASE("closed attention gate collapses the amplitude to zero") {
    Rng rng(23);
    Tensor a = random_tensor(rng, 4, 8, 8, 0.0, 2.0);
    FeemParams p = identity_feem(4);
    p.amp_attention = const_gate_conv(4, 4, -40.0f);
    CHECK(max_abs(enhance_amplitude(a, p)) < 1e-6);
}

TEST_CASE("enhance_amplitude equals its primitive recomposition") {
    for (int trial = 0; trial < 10; ++trial) {
        ModelParams mp = random_params(trial + 1);
        const FeemParams& p = mp.feem[0];
        Rng rng(trial + 100);
        Tensor a = random_tensor(rng, 4, 8, 8, 0.0, 2.0);
        Tensor h = batch_norm_infer(conv2d(a, p.hf_conv.w, p.hf_conv.bias, 1, 1), p.hf_bn.scale,
                                    p.hf_bn.shift, p.hf_bn.running_mean, p.hf_bn.running_var,
                                    p.hf_bn.eps);
        Tensor want = mul(h, sigmoid(conv2d(h, p.amp_attention.w, p.amp_attention.bias)));
        CHECK(max_abs_diff(enhance_amplitude(a, p), want) < 1e-6);
    }
}

TEST_CASE("zero amplitude residual halves the phase before refinement") {
    Rng rng(24);
    Tensor phase = random_tensor(rng, 4, 8, 8, -1.5, 1.5);
    Tensor amp = random_tensor(rng, 4, 8, 8, 0.0, 2.0);
    FeemParams p = identity_feem(4);
    p.residual_weight = const_gate_conv(4, 4, 0.0f);  // sigmoid(0) = 0.5
    Tensor got = refine_phase(phase, amp, amp, p);
    CHECK(max_abs_diff(got, scale(phase, 0.5f)) < 1e-6);
}

TEST_CASE("identity refinement with an open gate returns the phase") {
    Rng rng(25);
    Tensor phase = random_tensor(rng, 4, 8, 8, -3.0, 3.0);
    Tensor a1 = random_tensor(rng, 4, 8, 8, 0.0, 2.0);
    Tensor a2 = random_tensor(rng, 4, 8, 8, 0.0, 2.0);
    FeemParams p = identity_feem(4);
    CHECK(max_abs_diff(refine_phase(phase, a1, a2, p), phase) < 1e-6);
}

TEST_CASE("refine_phase equals its primitive recomposition and stays wrapped") {
    for (int trial = 0; trial < 10; ++trial) {
        ModelParams mp = random_params(trial + 7);
        const FeemParams& p = mp.feem[0];
        Rng rng(trial + 200);
        Tensor phase = random_tensor(rng, 4, 8, 8, -3.0, 3.0);
        Tensor a1 = random_tensor(rng, 4, 8, 8, 0.0, 2.0);
        Tensor a2 = random_tensor(rng, 4, 8, 8, 0.0, 2.0);
        Tensor gate = sigmoid(conv2d(sub(a1, a2), p.residual_weight.w, p.residual_weight.bias));
        Tensor want = batch_norm_infer(conv2d(mul(phase, gate), p.phase_conv.w, p.phase_conv.bias,
                                              1, 1),
                                       p.phase_bn.scale, p.phase_bn.shift, p.phase_bn.running_mean,
                                       p.phase_bn.running_var, p.phase_bn.eps);
        for (std::size_t i = 0; i < want.size(); ++i) want[i] = wrap_angle(want[i]);
        Tensor got = refine_phase(phase, a1, a2, p);
        CHECK(max_abs_diff(got, want) < 1e-6);
        for (std::size_t i = 0; i < got.size(); ++i) {
            CHECK(got[i] > -3.14159274f);
            CHECK(got[i] <= 3.14159274f);
        }
    }
}

TEST_CASE("identity-configured feem doubles its input") {
    Rng rng(26);
    Tensor f = random_tensor(rng, 4, 16, 16);
    FeemParams p = identity_feem(4);
    Tensor out = feem_forward(f, p);
    CHECK(max_abs_diff(out, scale(f, 2.0f)) < 1e-4);
}

TEST_CASE("bias-free feem maps zero to zero") {
    FeemParams p = identity_feem(4);
    for (Conv2d* c : {&p.hf_conv, &p.amp_attention, &p.residual_weight, &p.phase_conv})
        c->bias.assign(c->bias.size(), 0.0f);
    Tensor zero(4, 8, 8);
    CHECK(max_abs(feem_forward(zero, p)) < 1e-6);
}

TEST_CASE("feem_forward preserves shape and stays finite on random parameters") {
    for (int trial = 0; trial < 10; ++trial) {
        ModelParams mp = random_params(trial + 11);
        Rng rng(trial + 300);
        Tensor f = random_tensor(rng, 4, 16, 16);
        Tensor out = feem_forward(f, mp.feem[0]);
        CHECK(out.channels() == 4);
        CHECK(out.height() == 16);
        CHECK(out.width() == 16);
        CHECK(all_finite(out));
    }
}

TEST_CASE("feem_forward equals its primitive recomposition") {
    for (int trial = 0; trial < 10; ++trial) {
        ModelParams mp = random_params(trial + 13);
        const FeemParams& p = mp.feem[0];
        Rng rng(trial + 400);
        Tensor f = random_tensor(rng, 4, 16, 16);
        Spectrum s = decompose(f);
        Tensor amp2 = enhance_amplitude(s.amplitude, p);
        Tensor ph2 = refine_phase(s.phase, amp2, s.amplitude, p);
        Tensor want = add(ifft2(hermitian_symmetrize(from_polar(amp2, ph2))), f);
        CHECK(max_abs_diff(feem_forward(f, p), want) < 1e-5);
    }
}

TEST_CASE("edge head saturates into (0,1) and matches conv+sigmoid") {
    ModelParams mp = random_params(3);
    const FeemParams& p = mp.feem[0];
    Rng rng(27);
    Tensor f = random_tensor(rng, 4, 8, 8, -3.0, 3.0);
    Tensor got = edge_head(f, p);
    CHECK(got.channels() == 1);
    for (std::size_t i = 0; i < got.size(); ++i) {
        CHECK(got[i] > 0.0f);
        CHECK(got[i] < 1.0f);
    }
    Tensor want = sigmoid(conv2d(f, p.edge_head.w, p.edge_head.bias));
    CHECK(max_abs_diff(got, want) < 1e-6);

    FeemParams zero = identity_feem(4);
    Tensor flat = edge_head(f, zero);
    for (std::size_t i = 0; i < flat.size(); ++i) CHECK(flat[i] == doctest::Approx(0.5));
}

// ---- phase-only reconstruction ----

TEST_CASE("raw phase-only reconstruction has unit amplitude spectrum") {
    Rng rng(28);
    Tensor img = random_tensor(rng, 1, 32, 32, 0.0, 1.0);
    Tensor psr = phase_only_reconstruct(img, /*normalize=*/false);
    Spectrum s = to_polar(fft2(psr));
    for (std::size_t i = 0; i < s.amplitude.size(); ++i)
        CHECK(s.amplitude[i] == doctest::Approx(1.0).epsilon(1e-4));
}

TEST_CASE("constant image reconstructs to a DC-dominated impulse") {
    Tensor img(1, 16, 16, 0.62f);
    Tensor psr = phase_only_reconstruct(img, /*normalize=*/false);
    CHECK(psr.at(0, 0, 0) == doctest::Approx(1.0).epsilon(1e-4));
    for (int y = 0; y < 16; ++y)
        for (int x = 0; x < 16; ++x)
            if (y || x) CHECK(std::abs(psr.at(0, y, x)) < 1e-4);
}

TEST_CASE("phase-only reconstruction ignores uniform amplitude scaling") {
    Rng rng(29);
    Tensor img = random_tensor(rng, 1, 32, 32, 0.1, 1.0);
    Tensor a = phase_only_reconstruct(img);
    Tensor b = phase_only_reconstruct(scale(img, 3.7f));
    CHECK(max_abs_diff(a, b) < 1e-5);
}

TEST_CASE("edge energy concentrates on shape boundaries, against the DFT oracle") {
    // filled square on a flat background; both routes agree and both put more
    // energy on the boundary ring than in the interior
    Tensor img(1, 32, 32, 0.2f);
    for (int y = 10; y < 24; ++y)
        for (int x = 8; x < 22; ++x) img.at(0, y, x) = 0.85f;
    Tensor psr = phase_only_reconstruct(img, /*normalize=*/false);

    Tensor mask(1, 32, 32);
    for (int y = 10; y < 24; ++y)
        for (int x = 8; x < 22; ++x) mask.at(0, y, x) = 1.0f;
    Tensor ring = ref::boundary_ring(mask);
    Tensor interior = ref::erode_naive(mask, 5);

    // oracle route: direct DFT decomposition and inversion
    ComplexPlane spec = ref::dft2_direct(img);
    Tensor amp(1, 32, 32, 1.0f), phase(1, 32, 32);
    for (std::size_t i = 0; i < phase.size(); ++i)
        phase[i] = static_cast<float>(std::atan2(spec.imag[i], spec.real[i]));
    Tensor psr_oracle = ref::idft2_direct(from_polar(amp, phase));

    // bins whose amplitude is exactly zero carry an arbitrary phase, so the
    // two routes are compared on their band statistics, not per pixel
    double ring_mean[2], interior_mean[2];
    int route = 0;
    for (const Tensor& rec : {psr, psr_oracle}) {
        double ring_sum = 0.0, int_sum = 0.0;
        int ring_n = 0, int_n = 0;
        for (std::size_t i = 0; i < rec.size(); ++i) {
            if (ring[i] > 0.5f) {
                ring_sum += std::abs(rec[i]);
                ++ring_n;
            } else if (interior[i] > 0.5f) {
                int_sum += std::abs(rec[i]);
                ++int_n;
            }
        }
        ring_mean[route] = ring_sum / ring_n;
        interior_mean[route] = int_sum / int_n;
        CHECK(ring_mean[route] > interior_mean[route]);
        ++route;
    }
    CHECK(ring_mean[0] == doctest::Approx(ring_mean[1]).epsilon(0.05));
}

// ---- spatial core ----

TEST_CASE("zeroed spatial attention halves the feature map") {
    Rng rng(31);
    ModelParams mp = random_params(5);
    ScsmParams p = mp.scsm[0];
    p.sa_conv = const_gate_conv(1, 2, 0.0f);
    p.sa_conv.w = ConvWeight(1, 2, 7, 7);
    p.sa_conv.padding = 3;
    p.sa_conv.bias.assign(1, 0.0f);
    Tensor f = random_tensor(rng, 4, 8, 8);
    CHECK(max_abs_diff(spatial_attention(f, p), scale(f, 0.5f)) < 1e-6);
    p.sa_conv.bias.assign(1, 40.0f);  // gate pinned open
    CHECK(max_abs_diff(spatial_attention(f, p), f) < 1e-6);
}

TEST_CASE("spatial attention equals its primitive recomposition") {
    for (int trial = 0; trial < 10; ++trial) {
        ModelParams mp = random_params(trial + 17);
        const ScsmParams& p = mp.scsm[0];
        Rng rng(trial + 500);
        Tensor f = random_tensor(rng, 4, 8, 8);
        Tensor gate = sigmoid(conv2d(concat_channels(channel_mean(f), channel_max(f)), p.sa_conv.w,
                                     p.sa_conv.bias, 1, 3));
        CHECK(max_abs_diff(spatial_attention(f, p), mul_broadcast_spatial(f, gate)) < 1e-6);
    }
}

TEST_CASE("zeroed channel attention halves the feature map") {
    Rng rng(32);
    ModelParams mp = random_params(6);
    ScsmParams p = mp.scsm[0];
    p.ca_mlp = BottleneckMlp(4, 4);  // all-zero parameters
    Tensor f = random_tensor(rng, 4, 8, 8);
    CHECK(max_abs_diff(channel_attention(f, p), scale(f, 0.5f)) < 1e-6);
}

TEST_CASE("channel gates follow channel means on a constant-per-channel input") {
    // identity-like bottleneck: hidden passes the sum through; the gate must
    // order the channels the way their means do
    ScsmParams p;
    p.ca_mlp = BottleneckMlp(2, 1);  // full-width hidden layer, identity maps
    p.ca_mlp.w1.assign({1.0f, 0.0f, 0.0f, 1.0f});
    p.ca_mlp.w2.assign({1.0f, 0.0f, 0.0f, 1.0f});
    Tensor f(2, 4, 4);
    for (std::size_t i = 0; i < 16; ++i) f.channel(0)[i] = 0.2f;
    for (std::size_t i = 0; i < 16; ++i) f.channel(1)[i] = 0.9f;
    Tensor out = channel_attention(f, p);
    const double gate0 = out.at(0, 0, 0) / f.at(0, 0, 0);
    const double gate1 = out.at(1, 0, 0) / f.at(1, 0, 0);
    // hand check: gate_c = sigmoid(2 * mean_c) since avg == max per channel
    CHECK(gate0 == doctest::Approx(1.0 / (1.0 + std::exp(-0.4))).epsilon(1e-5));
    CHECK(gate1 == doctest::Approx(1.0 / (1.0 + std::exp(-1.8))).epsilon(1e-5));
    CHECK(gate1 > gate0);
}

TEST_CASE("channel attention equals its primitive recomposition") {
    for (int trial = 0; trial < 10; ++trial) {
        ModelParams mp = random_params(trial + 19);
        const ScsmParams& p = mp.scsm[0];
        Rng rng(trial + 600);
        Tensor f = random_tensor(rng, 4, 8, 8);
        std::vector<float> pre_a = p.ca_mlp.apply(global_avg(f));
        std::vector<float> pre_m = p.ca_mlp.apply(global_max(f));
        std::vector<float> gate(pre_a.size());
        for (std::size_t i = 0; i < gate.size(); ++i) gate[i] = sigmoid_scalar(pre_a[i] + pre_m[i]);
        CHECK(max_abs_diff(channel_attention(f, p), mul_broadcast_channel(f, gate)) < 1e-6);
    }
}

TEST_CASE("identity-configured aspp reproduces its input") {
    const int c = 4;
    ScsmParams p;
    for (int i = 0; i < 3; ++i) {
        const int rate = 1 << i;
        p.aspp_branch[i].w = identity_weight(c, 3);
        p.aspp_branch[i].bias.assign(c, 0.0f);
        p.aspp_branch[i].padding = rate;
        p.aspp_branch[i].dilation = rate;
    }
    p.aspp_merge.w = ConvWeight(c, 3 * c, 1, 1);
    for (int co = 0; co < c; ++co)
        for (int b = 0; b < 3; ++b) p.aspp_merge.w.at(co, b * c + co, 0, 0) = 1.0f / 3.0f;
    p.aspp_merge.bias.assign(c, 0.0f);

    Rng rng(33);
    Tensor f = random_tensor(rng, c, 8, 8);
    CHECK(max_abs_diff(aspp(f, p), f) < 1e-6);

    Tensor constant(c, 8, 8, 0.37f);
    Tensor out = aspp(constant, p);
    for (std::size_t i = 0; i < out.size(); ++i) CHECK(out[i] == doctest::Approx(0.37).epsilon(1e-6));
}

TEST_CASE("aspp equals its primitive recomposition") {
    for (int trial = 0; trial < 10; ++trial) {
        ModelParams mp = random_params(trial + 23);
        const ScsmParams& p = mp.scsm[0];
        Rng rng(trial + 700);
        Tensor f = random_tensor(rng, 4, 8, 8);
        Tensor b0 = conv2d(f, p.aspp_branch[0].w, p.aspp_branch[0].bias, 1, 1, 1);
        Tensor b1 = conv2d(f, p.aspp_branch[1].w, p.aspp_branch[1].bias, 1, 2, 2);
        Tensor b2 = conv2d(f, p.aspp_branch[2].w, p.aspp_branch[2].bias, 1, 4, 4);
        Tensor want = conv2d(concat_channels(concat_channels(b0, b1), b2), p.aspp_merge.w,
                             p.aspp_merge.bias);
        CHECK(max_abs_diff(aspp(f, p), want) < 1e-6);
    }
}

TEST_CASE("bias-free scsm maps zero to zero and keeps shapes") {
    ModelConfig cfg;
    cfg.channels = 8;
    cfg.levels = 2;
    cfg.input_h = 32;
    cfg.input_w = 32;
    ModelParams mp = init_params(cfg);
    ScsmParams p = mp.scsm[0];
    for (Conv2d* c : {&p.sa_conv, &p.spa_in, &p.dw_conv, &p.spa_out, &p.aspp_branch[0],
                      &p.aspp_branch[1], &p.aspp_branch[2], &p.aspp_merge})
        c->bias.assign(c->bias.size(), 0.0f);
    p.ca_mlp.b1.assign(p.ca_mlp.b1.size(), 0.0f);
    p.ca_mlp.b2.assign(p.ca_mlp.b2.size(), 0.0f);
    Tensor zero(8, 32, 32);
    Tensor out = scsm_forward(zero, p);
    CHECK(max_abs(out) < 1e-6);
    CHECK(out.channels() == 8);
    CHECK(out.height() == 32);
    CHECK(out.width() == 32);
}

TEST_CASE("scsm_forward equals its step-by-step composition") {
    for (int trial = 0; trial < 10; ++trial) {
        ModelParams mp = random_params(trial + 29);
        const ScsmParams& p = mp.scsm[0];
        Rng rng(trial + 800);
        Tensor f = random_tensor(rng, 4, 8, 8);
        Tensor u = add(spatial_attention(f, p), channel_attention(f, p));
        Tensor v = p.dw_conv.apply(p.spa_in.apply(u));
        auto [ha, hb] = split_channels(v, 4);
        Tensor f4 = add(p.spa_out.apply(mul(gelu(ha), hb)), f);
        Tensor want = aspp(f4, p);
        CHECK(max_abs_diff(scsm_forward(f, p), want) < 1e-5);
    }
}

TEST_CASE("all-open gates reduce scsm to its gated algebraic core") {
    const int c = 2;
    ScsmParams p;
    p.sa_conv.w = ConvWeight(1, 2, 7, 7);
    p.sa_conv.bias.assign(1, 40.0f);
    p.sa_conv.padding = 3;
    p.ca_mlp = BottleneckMlp(c, 2);
    p.ca_mlp.b2.assign({20.0f, 20.0f});  // both gates saturate at 1
    p.spa_in.w = ConvWeight(2 * c, c, 1, 1);
    for (int i = 0; i < c; ++i) {
        p.spa_in.w.at(i, i, 0, 0) = 1.0f;      // first half copies
        p.spa_in.w.at(c + i, i, 0, 0) = 1.0f;  // second half copies
    }
    p.spa_in.bias.assign(2 * c, 0.0f);
    p.dw_conv.w = ConvWeight(2 * c, 1, 3, 3);
    for (int i = 0; i < 2 * c; ++i) p.dw_conv.w.at(i, 0, 1, 1) = 1.0f;
    p.dw_conv.bias.assign(2 * c, 0.0f);
    p.dw_conv.groups = 2 * c;
    p.dw_conv.padding = 1;
    p.spa_out = identity_conv(c, 1);
    for (int i = 0; i < 3; ++i) {
        const int rate = 1 << i;
        p.aspp_branch[i].w = identity_weight(c, 3);
        p.aspp_branch[i].bias.assign(c, 0.0f);
        p.aspp_branch[i].padding = rate;
        p.aspp_branch[i].dilation = rate;
    }
    p.aspp_merge.w = ConvWeight(c, 3 * c, 1, 1);
    for (int co = 0; co < c; ++co)
        for (int b = 0; b < 3; ++b) p.aspp_merge.w.at(co, b * c + co, 0, 0) = 1.0f / 3.0f;
    p.aspp_merge.bias.assign(c, 0.0f);

    Rng rng(34);
    Tensor f = random_tensor(rng, c, 8, 8);
    // SA(f) + CA(f) = 2f; both split halves are 2f; the residual adds f
    Tensor doubled = scale(f, 2.0f);
    Tensor want = add(mul(gelu(doubled), doubled), f);
    CHECK(max_abs_diff(scsm_forward(f, p), want) < 1e-4);
}

// ---- fusion ----

TEST_CASE("effb gate limits") {
    Rng rng(35);
    ModelParams mp = random_params(9);
    EffbParams p = mp.sffim_effb_s[0];
    Tensor f = random_tensor(rng, 4, 8, 8);
    Tensor prev = random_tensor(rng, 4, 8, 8);

    p.att_conv.bias.assign(4, -40.0f);  // gate shut
    p.att_bn = BatchNorm::identity(4);
    Tensor zero(4, 8, 8);
    CHECK(max_abs_diff(effb(f, zero, p), f) < 1e-5);

    p.att_conv.bias.assign(4, 40.0f);  // gate open
    CHECK(max_abs_diff(effb(f, prev, p), add(scale(f, 2.0f), prev)) < 1e-4);
}

TEST_CASE("effb equals its primitive recomposition") {
    for (int trial = 0; trial < 10; ++trial) {
        ModelParams mp = random_params(trial + 37);
        const EffbParams& p = mp.sffim_effb_f[0];
        Rng rng(trial + 900);
        Tensor f = random_tensor(rng, 4, 8, 8);
        Tensor prev = random_tensor(rng, 4, 8, 8);
        Tensor att = sigmoid(p.att_bn.apply(
            conv2d(concat_channels(f, prev), p.att_conv.w, p.att_conv.bias, 1, 1)));
        Tensor want = add(add(mul(att, f), f), prev);
        CHECK(max_abs_diff(effb(f, prev, p), want) < 1e-6);
        CHECK(effb(f, prev, p).channels() == f.channels());
    }
}

TEST_CASE("local fusion gate limits") {
    Rng rng(36);
    ModelParams mp = random_params(10);
    SffimParams p = mp.sffim[0];
    Tensor x = random_tensor(rng, 4, 8, 8);
    p.lf_pw.bias.assign(4, -40.0f);
    CHECK(max_abs_diff(local_fusion(x, p), x) < 1e-5);
    p.lf_pw.bias.assign(4, 40.0f);
    CHECK(max_abs_diff(local_fusion(x, p), scale(x, 2.0f)) < 1e-4);
}

TEST_CASE("global fusion gate limits") {
    Rng rng(37);
    ModelParams mp = random_params(11);
    SffimParams p = mp.sffim[0];
    Tensor x = random_tensor(rng, 4, 8, 8);
    p.gf_mlp = BottleneckMlp(4, 4);  // zero mlp: gate 0.5
    CHECK(max_abs_diff(global_fusion(x, p), scale(x, 1.5f)) < 1e-6);
    p.gf_mlp.b2.assign(4, -40.0f);  // gate 0
    CHECK(max_abs_diff(global_fusion(x, p), x) < 1e-5);
}

TEST_CASE("LF gates vary per pixel while GF gates are spatially constant") {
    ModelParams mp = random_params(12);
    SffimParams p = mp.sffim[0];
    Rng rng(38);
    Tensor x = random_tensor(rng, 4, 8, 8, 0.5, 1.5);  // bounded away from zero

    Tensor lf = local_fusion(x, p);
    Tensor gf = global_fusion(x, p);
    // implied gates: out/x - 1
    bool lf_varies = false;
    for (int y = 0; y < 8 && !lf_varies; ++y)
        for (int xx = 0; xx < 8 && !lf_varies; ++xx) {
            const double g00 = lf.at(0, 0, 0) / x.at(0, 0, 0) - 1.0;
            const double gyx = lf.at(0, y, xx) / x.at(0, y, xx) - 1.0;
            if (std::abs(g00 - gyx) > 1e-4) lf_varies = true;
        }
    CHECK(lf_varies);
    for (int c = 0; c < 4; ++c) {
        const double g0 = gf.at(c, 0, 0) / x.at(c, 0, 0) - 1.0;
        for (int y = 0; y < 8; ++y)
            for (int xx = 0; xx < 8; ++xx)
                CHECK(gf.at(c, y, xx) / x.at(c, y, xx) - 1.0 ==
                      doctest::Approx(g0).epsilon(1e-4));
    }
}

TEST_CASE("local and global fusion match their recompositions") {
    for (int trial = 0; trial < 10; ++trial) {
        ModelParams mp = random_params(trial + 41);
        const SffimParams& p = mp.sffim[0];
        Rng rng(trial + 1000);
        Tensor x = random_tensor(rng, 4, 8, 8);
        Tensor lf_gate = sigmoid(p.lf_pw.apply(p.lf_dw.apply(x)));
        CHECK(max_abs_diff(local_fusion(x, p), add(mul(x, lf_gate), x)) < 1e-6);
        std::vector<float> gf_gate = p.gf_mlp.apply(global_avg(x));
        for (float& v : gf_gate) v = sigmoid_scalar(v);
        CHECK(max_abs_diff(global_fusion(x, p), add(mul_broadcast_channel(x, gf_gate), x)) < 1e-6);
    }
}

TEST_CASE("bias-free sffim maps zeros to zero and keeps shape") {
    ModelConfig cfg;
    cfg.channels = 8;
    cfg.levels = 2;
    cfg.input_h = 32;
    cfg.input_w = 32;
    ModelParams mp = init_params(cfg);
    SffimParams p = mp.sffim[0];
    EffbParams es = mp.sffim_effb_s[0], ef = mp.sffim_effb_f[0];
    for (Conv2d* c : {&p.cbr_spa_conv, &p.cbr_fre_conv, &p.lf_dw, &p.lf_pw, &p.refine_conv,
                      &es.att_conv, &ef.att_conv})
        c->bias.assign(c->bias.size(), 0.0f);
    p.gf_mlp.b1.assign(p.gf_mlp.b1.size(), 0.0f);
    p.gf_mlp.b2.assign(p.gf_mlp.b2.size(), 0.0f);
    Tensor zero(8, 16, 16);
    Tensor out = sffim_forward(zero, zero, zero, p, es, ef);
    CHECK(max_abs(out) < 1e-6);
    CHECK(out.channels() == 8);
    CHECK(out.height() == 16);
    CHECK(out.width() == 16);
}

TEST_CASE("sffim_forward equals its documented composition, both pairings") {
    for (int trial = 0; trial < 10; ++trial) {
        ModelParams mp = random_params(trial + 43);
        SffimParams p = mp.sffim[0];
        const EffbParams& es = mp.sffim_effb_s[0];
        const EffbParams& ef = mp.sffim_effb_f[0];
        Rng rng(trial + 1100);
        Tensor f_spa = random_tensor(rng, 4, 8, 8);
        Tensor f_fre = random_tensor(rng, 4, 8, 8);
        Tensor prev = random_tensor(rng, 4, 8, 8);

        for (bool cross : {true, false}) {
            p.cross_pairing = cross;
            Tensor fuse1_f = effb(f_fre, prev, ef);
            Tensor fuse1_s = effb(f_spa, prev, es);
            Tensor stem_s = relu(p.cbr_spa_bn.apply(p.cbr_spa_conv.apply(f_spa)));
            Tensor stem_f = relu(p.cbr_fre_bn.apply(p.cbr_fre_conv.apply(f_fre)));
            Tensor fuse2_s = local_fusion(add(stem_s, cross ? fuse1_f : fuse1_s), p);
            Tensor fuse2_f = global_fusion(add(stem_f, cross ? fuse1_s : fuse1_f), p);
            Tensor want = p.refine_bn.apply(p.refine_conv.apply(add(fuse2_s, fuse2_f)));
            Tensor got = sffim_forward(f_spa, f_fre, prev, p, es, ef);
            CHECK(max_abs_diff(got, want) < 1e-5);
            CHECK(got.channels() == 4);
            CHECK(got.height() == 8);
            CHECK(got.width() == 8);
        }
    }
}

TEST_CASE("sffim_forward is bitwise deterministic") {
    ModelParams mp = random_params(99);
    Rng rng(39);
    Tensor f_spa = random_tensor(rng, 4, 16, 16);
    Tensor f_fre = random_tensor(rng, 4, 16, 16);
    Tensor prev = random_tensor(rng, 4, 16, 16);
    Tensor a = sffim_forward(f_spa, f_fre, prev, mp.sffim[0], mp.sffim_effb_s[0],
                             mp.sffim_effb_f[0]);
    Tensor b = sffim_forward(f_spa, f_fre, prev, mp.sffim[0], mp.sffim_effb_s[0],
                             mp.sffim_effb_f[0]);
    for (std::size_t i = 0; i < a.size(); ++i) CHECK(a[i] == b[i]);
}
