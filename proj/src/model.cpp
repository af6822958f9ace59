#include "codkit/model.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>

#include "codkit/fft.hpp"
#include "codkit/rng.hpp"

namespace codkit {

void ModelConfig::validate() const {
    if (channels < 2 || channels % 2 != 0) throw DomainError("ModelConfig: channels must be even");
    if (channels % ca_reduction != 0)
        throw DomainError("ModelConfig: ca_reduction must divide channels");
    if (levels < 1) throw DomainError("ModelConfig: levels must be >= 1");
    if (!is_power_of_two(input_h) || !is_power_of_two(input_w))
        throw DomainError("ModelConfig: input dims must be powers of two");
    if (input_h % (1 << levels) != 0 || input_w % (1 << levels) != 0)
        throw DomainError("ModelConfig: input dims must be divisible by 2^levels");
    if (edge_kernel < 1 || edge_kernel % 2 == 0)
        throw DomainError("ModelConfig: edge_kernel must be odd");
}

// ---- initialization ----

namespace {

void init_conv(Conv2d& conv, int cout, int cin_per_group, int k, Rng& rng, int stride = 1,
               int padding = 0, int dilation = 1, int groups = 1) {
    conv.w = ConvWeight(cout, cin_per_group, k, k);
    conv.bias.assign(cout, 0.0f);
    conv.stride = stride;
    conv.padding = padding;
    conv.dilation = dilation;
    conv.groups = groups;
    const double bound = std::sqrt(1.0 / (static_cast<double>(cin_per_group) * k * k));
    for (float& v : conv.w.data) v = static_cast<float>(rng.uniform(-bound, bound));
    for (float& v : conv.bias) v = static_cast<float>(rng.uniform(-bound, bound));
}

void init_mlp(BottleneckMlp& mlp, int c, int reduction, Rng& rng) {
    mlp = BottleneckMlp(c, reduction);
    const double b1 = std::sqrt(1.0 / c);
    const double b2 = std::sqrt(1.0 / mlp.hidden);
    for (float& v : mlp.w1) v = static_cast<float>(rng.uniform(-b1, b1));
    for (float& v : mlp.b1) v = static_cast<float>(rng.uniform(-b1, b1));
    for (float& v : mlp.w2) v = static_cast<float>(rng.uniform(-b2, b2));
    for (float& v : mlp.b2) v = static_cast<float>(rng.uniform(-b2, b2));
}

FeemParams init_feem(int c, Rng& rng) {
    FeemParams p;
    init_conv(p.hf_conv, c, c, 3, rng, 1, 1);
    p.hf_bn = BatchNorm::identity(c);
    p.hf_bn.eps = 1e-5f;
    init_conv(p.amp_attention, c, c, 1, rng);
    init_conv(p.residual_weight, c, c, 1, rng);
    init_conv(p.phase_conv, c, c, 3, rng, 1, 1);
    p.phase_bn = BatchNorm::identity(c);
    p.phase_bn.eps = 1e-5f;
    init_conv(p.edge_head, 1, c, 1, rng);
    return p;
}

ScsmParams init_scsm(int c, int reduction, Rng& rng) {
    ScsmParams p;
    init_conv(p.sa_conv, 1, 2, 7, rng, 1, 3);
    init_mlp(p.ca_mlp, c, reduction, rng);
    init_conv(p.spa_in, 2 * c, c, 1, rng);
    init_conv(p.dw_conv, 2 * c, 1, 3, rng, 1, 1, 1, 2 * c);
    init_conv(p.spa_out, c, c, 1, rng);
    for (int i = 0; i < 3; ++i) {
        const int rate = 1 << i;
        init_conv(p.aspp_branch[i], c, c, 3, rng, 1, rate, rate);
    }
    init_conv(p.aspp_merge, c, 3 * c, 1, rng);
    return p;
}

EffbParams init_effb(int c, Rng& rng) {
    EffbParams p;
    init_conv(p.att_conv, c, 2 * c, 3, rng, 1, 1);
    p.att_bn = BatchNorm::identity(c);
    p.att_bn.eps = 1e-5f;
    return p;
}

SffimParams init_sffim(int c, int reduction, bool cross, Rng& rng) {
    SffimParams p;
    init_conv(p.cbr_spa_conv, c, c, 3, rng, 1, 1);
    p.cbr_spa_bn = BatchNorm::identity(c);
    p.cbr_spa_bn.eps = 1e-5f;
    init_conv(p.cbr_fre_conv, c, c, 3, rng, 1, 1);
    p.cbr_fre_bn = BatchNorm::identity(c);
    p.cbr_fre_bn.eps = 1e-5f;
    init_conv(p.lf_dw, c, 1, 3, rng, 1, 1, 1, c);
    init_conv(p.lf_pw, c, c, 1, rng);
    init_mlp(p.gf_mlp, c, reduction, rng);
    init_conv(p.refine_conv, c, c, 3, rng, 1, 1);
    p.refine_bn = BatchNorm::identity(c);
    p.refine_bn.eps = 1e-5f;
    p.cross_pairing = cross;
    return p;
}

}  // namespace

ModelParams init_params(const ModelConfig& cfg) {
    cfg.validate();
    Rng rng = Rng::derive(cfg.seed, 0xC0DE);
    const int c = cfg.channels;
    ModelParams p;
    for (int i = 0; i < cfg.levels; ++i) {
        Conv2d enc;
        init_conv(enc, c, i == 0 ? 3 : c, 3, rng, 2, 1);
        p.encoder.push_back(std::move(enc));
        Conv2d proj;
        init_conv(proj, c, c, 1, rng);
        p.channel_proj.push_back(std::move(proj));
    }
    for (int i = 0; i + 1 < cfg.levels; ++i) {
        p.agg_fre.push_back(init_effb(c, rng));
        p.agg_spa.push_back(init_effb(c, rng));
    }
    for (int i = 0; i < cfg.levels; ++i) {
        p.feem.push_back(init_feem(c, rng));
        p.scsm.push_back(init_scsm(c, cfg.ca_reduction, rng));
        p.sffim.push_back(init_sffim(c, cfg.ca_reduction, cfg.cross_pairing, rng));
        p.sffim_effb_s.push_back(init_effb(c, rng));
        p.sffim_effb_f.push_back(init_effb(c, rng));
    }
    init_conv(p.head_init, 1, c, 1, rng);
    init_conv(p.head_final, 1, c, 1, rng);
    return p;
}

// ---- parameter enumeration ----

namespace {

struct Visitor {
    std::vector<ParamEntry>* out;

    void array(const std::string& name, std::vector<float>& v, bool trainable = true) {
        out->push_back({name, v.data(), v.size(), trainable});
    }
    void conv(const std::string& name, Conv2d& c) {
        out->push_back({name + ".w", c.w.data.data(), c.w.data.size(), true});
        array(name + ".b", c.bias);
    }
    void bn(const std::string& name, BatchNorm& b) {
        array(name + ".scale", b.scale);
        array(name + ".shift", b.shift);
        array(name + ".mean", b.running_mean, false);
        array(name + ".var", b.running_var, false);
    }
    void mlp(const std::string& name, BottleneckMlp& m) {
        array(name + ".w1", m.w1);
        array(name + ".b1", m.b1);
        array(name + ".w2", m.w2);
        array(name + ".b2", m.b2);
    }
    void effb(const std::string& name, EffbParams& e) {
        conv(name + ".att", e.att_conv);
        bn(name + ".att_bn", e.att_bn);
    }
    void feem(const std::string& name, FeemParams& f) {
        conv(name + ".hf", f.hf_conv);
        bn(name + ".hf_bn", f.hf_bn);
        conv(name + ".att", f.amp_attention);
        conv(name + ".resw", f.residual_weight);
        conv(name + ".phase", f.phase_conv);
        bn(name + ".phase_bn", f.phase_bn);
        conv(name + ".edge", f.edge_head);
    }
    void scsm(const std::string& name, ScsmParams& s) {
        conv(name + ".sa", s.sa_conv);
        mlp(name + ".ca", s.ca_mlp);
        conv(name + ".spa_in", s.spa_in);
        conv(name + ".dw", s.dw_conv);
        conv(name + ".spa_out", s.spa_out);
        for (int i = 0; i < 3; ++i) conv(name + ".aspp" + std::to_string(i), s.aspp_branch[i]);
        conv(name + ".aspp_merge", s.aspp_merge);
    }
    void sffim(const std::string& name, SffimParams& s) {
        conv(name + ".cbr_spa", s.cbr_spa_conv);
        bn(name + ".cbr_spa_bn", s.cbr_spa_bn);
        conv(name + ".cbr_fre", s.cbr_fre_conv);
        bn(name + ".cbr_fre_bn", s.cbr_fre_bn);
        conv(name + ".lf_dw", s.lf_dw);
        conv(name + ".lf_pw", s.lf_pw);
        mlp(name + ".gf", s.gf_mlp);
        conv(name + ".refine", s.refine_conv);
        bn(name + ".refine_bn", s.refine_bn);
    }
};

}  // namespace

std::vector<ParamEntry> enumerate_params(ModelParams& p) {
    std::vector<ParamEntry> out;
    Visitor v{&out};
    for (std::size_t i = 0; i < p.encoder.size(); ++i) {
        v.conv("enc" + std::to_string(i), p.encoder[i]);
        v.conv("proj" + std::to_string(i), p.channel_proj[i]);
    }
    for (std::size_t i = 0; i < p.agg_fre.size(); ++i) {
        v.effb("l" + std::to_string(i) + ".agg_fre", p.agg_fre[i]);
        v.effb("l" + std::to_string(i) + ".agg_spa", p.agg_spa[i]);
    }
    for (std::size_t i = 0; i < p.feem.size(); ++i) {
        const std::string lv = "l" + std::to_string(i);
        v.feem(lv + ".feem", p.feem[i]);
        v.scsm(lv + ".scsm", p.scsm[i]);
        v.sffim(lv + ".sffim", p.sffim[i]);
        v.effb(lv + ".sffim_effb_s", p.sffim_effb_s[i]);
        v.effb(lv + ".sffim_effb_f", p.sffim_effb_f[i]);
    }
    v.conv("head_init", p.head_init);
    v.conv("head_final", p.head_final);
    return out;
}

std::vector<float> flatten_trainable(ModelParams& params) {
    std::vector<float> flat;
    for (const ParamEntry& e : enumerate_params(params))
        if (e.trainable) flat.insert(flat.end(), e.data, e.data + e.size);
    return flat;
}

void unflatten_trainable(ModelParams& params, const std::vector<float>& flat) {
    std::size_t off = 0;
    for (const ParamEntry& e : enumerate_params(params)) {
        if (!e.trainable) continue;
        if (off + e.size > flat.size()) throw ShapeMismatch("unflatten_trainable: vector too short");
        std::copy(flat.begin() + off, flat.begin() + off + e.size, e.data);
        off += e.size;
    }
    if (off != flat.size()) throw ShapeMismatch("unflatten_trainable: vector too long");
}

// ---- checkpoint io ----

namespace {
constexpr char kCheckpointMagic[4] = {'C', 'K', 'P', '1'};

void write_u32(std::ofstream& out, std::uint32_t v) {
    out.write(reinterpret_cast<const char*>(&v), 4);
}
std::uint32_t read_u32(std::ifstream& in) {
    std::uint32_t v = 0;
    in.read(reinterpret_cast<char*>(&v), 4);
    return v;
}
}  // namespace

void save_checkpoint(const std::string& path, ModelParams& params) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw UnreadableImage("cannot open checkpoint for writing: " + path);
    const std::vector<ParamEntry> entries = enumerate_params(params);
    out.write(kCheckpointMagic, 4);
    write_u32(out, static_cast<std::uint32_t>(entries.size()));
    for (const ParamEntry& e : entries) {
        write_u32(out, static_cast<std::uint32_t>(e.name.size()));
        out.write(e.name.data(), static_cast<std::streamsize>(e.name.size()));
        write_u32(out, static_cast<std::uint32_t>(e.size));
        out.write(reinterpret_cast<const char*>(e.data),
                  static_cast<std::streamsize>(e.size * sizeof(float)));
    }
}

void load_checkpoint(const std::string& path, ModelParams& params) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw UnreadableImage("cannot open checkpoint: " + path);
    char magic[4];
    in.read(magic, 4);
    if (!in || std::memcmp(magic, kCheckpointMagic, 4) != 0)
        throw UnreadableImage(path + ": bad checkpoint header");
    const std::uint32_t count = read_u32(in);
    std::vector<ParamEntry> entries = enumerate_params(params);
    if (count != entries.size()) throw ShapeMismatch(path + ": checkpoint entry count differs");
    for (ParamEntry& e : entries) {
        const std::uint32_t name_len = read_u32(in);
        std::string name(name_len, '\0');
        in.read(name.data(), name_len);
        if (name != e.name) throw ShapeMismatch(path + ": expected " + e.name + ", found " + name);
        const std::uint32_t n = read_u32(in);
        if (n != e.size) throw ShapeMismatch(path + ": size mismatch for " + e.name);
        in.read(reinterpret_cast<char*>(e.data), static_cast<std::streamsize>(n * sizeof(float)));
        if (!in) throw UnreadableImage(path + ": truncated checkpoint");
    }
}

// ---- forward ----

std::vector<Tensor> encode(const Tensor& image, const ModelParams& params,
                           const ModelConfig& cfg) {
    if (image.channels() != 3 || image.height() != cfg.input_h || image.width() != cfg.input_w)
        throw ShapeMismatch("encode: image must be [3,input_h,input_w]");
    std::vector<Tensor> features;
    Tensor cur = image;
    for (int i = 0; i < cfg.levels; ++i) {
        cur = params.encoder[i].apply(cur);
        features.push_back(params.channel_proj[i].apply(cur));
    }
    return features;
}

ForwardResult forward(const Tensor& image, const ModelParams& params, const ModelConfig& cfg) {
    ForwardResult r;
    r.x = encode(image, params, cfg);
    const int L = cfg.levels;
    r.f_fre.resize(L);
    r.f_spa.resize(L);
    r.fuse.resize(L);

    for (int i = L - 1; i >= 0; --i) {
        const Tensor& xi = r.x[i];
        Tensor fuse_prev = (i == L - 1)
                               ? Tensor(xi.channels(), xi.height(), xi.width())
                               : resize_bilinear(r.fuse[i + 1], xi.height(), xi.width());
        // the deepest level has no decoder context yet; its branches read the
        // encoder feature directly
        const Tensor fe = (i == L - 1) ? xi : effb(xi, fuse_prev, params.agg_fre[i]);
        const Tensor fs = (i == L - 1) ? xi : effb(xi, fuse_prev, params.agg_spa[i]);
        r.f_fre[i] = feem_forward(fe, params.feem[i]);
        r.f_spa[i] = scsm_forward(fs, params.scsm[i]);
        r.fuse[i] = sffim_forward(r.f_spa[i], r.f_fre[i], fuse_prev, params.sffim[i],
                                  params.sffim_effb_s[i], params.sffim_effb_f[i]);
    }

    r.pred.p_init =
        resize_bilinear(sigmoid(params.head_init.apply(r.fuse[L - 1])), cfg.input_h, cfg.input_w);
    r.pred.p_final =
        resize_bilinear(sigmoid(params.head_final.apply(r.fuse[0])), cfg.input_h, cfg.input_w);
    r.pred.p_e = resize_bilinear(edge_head(r.f_fre[0], params.feem[0]), cfg.input_h, cfg.input_w);
    return r;
}

// ---- SPSA ----

namespace {

// the two perturbed evaluations and the rank-one update; the unperturbed
// logging value is the caller's business
void spsa_update_flat(std::vector<float>& theta,
                      const std::function<double(const std::vector<float>&)>& objective,
                      const SpsaConfig& cfg, int step_index) {
    if (cfg.c <= 0.0) throw DomainError("SpsaConfig: c must be positive");
    if (cfg.a < 0.0) throw DomainError("SpsaConfig: a must be non-negative");
    const double ak = cfg.a / std::pow(step_index + 1.0 + cfg.stability, cfg.alpha);
    const double ck = cfg.c / std::pow(step_index + 1.0, cfg.gamma_decay);

    Rng rng = Rng::derive(cfg.seed, static_cast<std::uint64_t>(step_index));
    std::vector<float> delta(theta.size());
    for (float& d : delta) d = rng.rademacher();

    std::vector<float> plus(theta.size()), minus(theta.size());
    for (std::size_t i = 0; i < theta.size(); ++i) {
        plus[i] = static_cast<float>(theta[i] + ck * delta[i]);
        minus[i] = static_cast<float>(theta[i] - ck * delta[i]);
    }
    const double lp = objective(plus);
    const double lm = objective(minus);
    if (!std::isfinite(lp) || !std::isfinite(lm)) throw NonFiniteLoss("perturbed objective");

    const double ghat = (lp - lm) / (2.0 * ck);
    std::vector<float> updated(theta.size());
    for (std::size_t i = 0; i < theta.size(); ++i) {
        updated[i] = static_cast<float>(theta[i] - ak * ghat * delta[i]);
        if (!std::isfinite(updated[i])) throw NonFiniteLoss("parameter update");
    }
    theta = std::move(updated);
}

}  // namespace

double spsa_step_flat(std::vector<float>& theta,
                      const std::function<double(const std::vector<float>&)>& objective,
                      const SpsaConfig& cfg, int step_index) {
    const double loss = objective(theta);
    if (!std::isfinite(loss)) throw NonFiniteLoss("unperturbed objective");
    spsa_update_flat(theta, objective, cfg, step_index);
    return loss;
}

// ---- synthetic data ----

namespace {

// smooth value noise: coarse seeded grid upsampled bilinearly plus fine grain
Tensor textured_noise(int h, int w, Rng& rng, double base, double amp) {
    const int gh = std::max(2, h / 8), gw = std::max(2, w / 8);
    Tensor coarse(1, gh, gw);
    for (std::size_t i = 0; i < coarse.size(); ++i)
        coarse[i] = static_cast<float>(base + amp * (rng.uniform() - 0.5) * 2.0);
    Tensor up = resize_bilinear(coarse, h, w);
    for (std::size_t i = 0; i < up.size(); ++i)
        up[i] = static_cast<float>(
            std::clamp(static_cast<double>(up[i]) + 0.05 * (rng.uniform() - 0.5), 0.0, 1.0));
    return up;
}

}  // namespace

std::vector<Sample> make_synthetic_dataset(int n, int h, int w, std::uint64_t seed) {
    std::vector<Sample> out;
    out.reserve(n);
    for (int s = 0; s < n; ++s) {
        Rng rng = Rng::derive(seed, static_cast<std::uint64_t>(s) + 101);
        Sample sample;
        sample.image = Tensor(3, h, w);
        sample.mask = Tensor(1, h, w);

        const bool ellipse = rng.next_u64() & 1;
        const int margin = std::max(6, h / 8);
        const int cy = margin + static_cast<int>(rng.below(static_cast<std::uint64_t>(h - 2 * margin)));
        const int cx = margin + static_cast<int>(rng.below(static_cast<std::uint64_t>(w - 2 * margin)));
        const int ry = h / 8 + static_cast<int>(rng.below(static_cast<std::uint64_t>(h / 8)));
        const int rx = w / 8 + static_cast<int>(rng.below(static_cast<std::uint64_t>(w / 8)));

        for (int y = 0; y < h; ++y) {
            for (int x = 0; x < w; ++x) {
                bool inside;
                if (ellipse) {
                    const double dy = static_cast<double>(y - cy) / ry;
                    const double dx = static_cast<double>(x - cx) / rx;
                    inside = dy * dy + dx * dx <= 1.0;
                } else {
                    inside = std::abs(y - cy) <= ry && std::abs(x - cx) <= rx;
                }
                // clip to the margin band so objects never touch the border
                inside = inside && y >= margin / 2 && y < h - margin / 2 && x >= margin / 2 &&
                         x < w - margin / 2;
                sample.mask.at(0, y, x) = inside ? 1.0f : 0.0f;
            }
        }

        for (int ch = 0; ch < 3; ++ch) {
            const double bg_base = rng.uniform(0.25, 0.55);
            const double fg_base =
                std::clamp(bg_base + (rng.next_u64() & 1 ? 0.3 : -0.2), 0.05, 0.95);
            Tensor bg = textured_noise(h, w, rng, bg_base, 0.12);
            Tensor fg = textured_noise(h, w, rng, fg_base, 0.12);
            for (int y = 0; y < h; ++y)
                for (int x = 0; x < w; ++x)
                    sample.image.at(ch, y, x) =
                        sample.mask.at(0, y, x) > 0.5f ? fg.at(0, y, x) : bg.at(0, y, x);
        }
        out.push_back(std::move(sample));
    }
    return out;
}

// ---- training ----

TrainBatch make_batch(const std::vector<Sample>& samples, const ModelConfig& mc,
                      const LossConfig& lc) {
    TrainBatch batch;
    batch.samples = &samples;
    batch.model_cfg = mc;
    batch.loss_cfg = lc;
    for (const Sample& s : samples)
        batch.supervision.push_back(build_supervision(s.mask, mc.edge_kernel));
    return batch;
}

LossBreakdown batch_loss(ModelParams& params, const TrainBatch& batch) {
    LossBreakdown acc;
    const std::vector<Sample>& samples = *batch.samples;
    for (std::size_t i = 0; i < samples.size(); ++i) {
        const ForwardResult fr = forward(samples[i].image, params, batch.model_cfg);
        const LossBreakdown b =
            total_loss(fr.pred.p_init, fr.pred.p_final, fr.pred.p_e, samples[i].mask,
                       batch.supervision[i].dilated_edge, batch.loss_cfg);
        acc.total += b.total;
        acc.seg_init += b.seg_init;
        acc.seg_final += b.seg_final;
        acc.edge += b.edge;
    }
    const double inv = 1.0 / static_cast<double>(samples.size());
    acc.total *= inv;
    acc.seg_init *= inv;
    acc.seg_final *= inv;
    acc.edge *= inv;
    return acc;
}

double spsa_step(ModelParams& params, const TrainBatch& batch, const SpsaConfig& cfg,
                 int step_index, LossBreakdown* breakdown_out) {
    const LossBreakdown b = batch_loss(params, batch);
    if (!std::isfinite(b.total)) throw NonFiniteLoss("unperturbed batch loss");
    if (breakdown_out) *breakdown_out = b;

    std::vector<float> theta = flatten_trainable(params);
    ModelParams scratch = params;
    const auto objective = [&scratch, &batch](const std::vector<float>& t) {
        unflatten_trainable(scratch, t);
        return batch_loss(scratch, batch).total;
    };
    spsa_update_flat(theta, objective, cfg, step_index);
    unflatten_trainable(params, theta);
    return b.total;
}

TrainResult train_toy(ModelParams& params, const TrainBatch& batch, const SpsaConfig& cfg,
                      int steps) {
    TrainResult result;
    for (int step = 0; step < steps; ++step) {
        LossBreakdown b;
        const double loss = spsa_step(params, batch, cfg, step, &b);
        result.loss_curve.push_back(loss);
        result.breakdowns.push_back(b);
    }
    return result;
}

}  // namespace codkit
