#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "codkit/frequency_edge.hpp"
#include "codkit/fusion.hpp"
#include "codkit/losses.hpp"
#include "codkit/spatial_core.hpp"
#include "codkit/supervision.hpp"
#include "codkit/tensor.hpp"

namespace codkit {

struct ModelConfig {
    int channels = 8;       // feature width C
    int levels = 4;         // pyramid depth L
    int input_h = 64;       // power of two, divisible by 2^levels
    int input_w = 64;
    int edge_kernel = 5;    // dilation kernel for edge supervision
    int ca_reduction = 4;   // bottleneck ratio of the channel gates
    bool cross_pairing = true;
    std::uint64_t seed = 7;

    void validate() const;
};

/// All per-level block parameters plus the encoder and prediction heads.
/// Aggregation blocks exist only for levels below the deepest one, which
/// passes the encoder feature through unchanged.
struct ModelParams {
    std::vector<Conv2d> encoder;       // L strided 3x3 convs
    std::vector<Conv2d> channel_proj;  // L 1x1 convs onto C channels
    std::vector<EffbParams> agg_fre;   // L-1, feeds the frequency branch
    std::vector<EffbParams> agg_spa;   // L-1, feeds the spatial branch
    std::vector<FeemParams> feem;      // L
    std::vector<ScsmParams> scsm;      // L
    std::vector<SffimParams> sffim;    // L
    std::vector<EffbParams> sffim_effb_s, sffim_effb_f;  // L each
    Conv2d head_init, head_final;      // 1x1, C -> 1
};

/// Seeded initialization: weights and biases uniform in +-sqrt(1/fan_in),
/// batch-norm statistics at identity.
ModelParams init_params(const ModelConfig& cfg);

struct ParamEntry {
    std::string name;
    float* data;
    std::size_t size;
    bool trainable;  // batch-norm running statistics are kept fixed
};

/// Stable, complete enumeration of every parameter array.
std::vector<ParamEntry> enumerate_params(ModelParams& params);

std::vector<float> flatten_trainable(ModelParams& params);
void unflatten_trainable(ModelParams& params, const std::vector<float>& flat);

/// Named-array checkpoint container, versioned, little-endian float32.
void save_checkpoint(const std::string& path, ModelParams& params);
void load_checkpoint(const std::string& path, ModelParams& params);

struct Prediction {
    Tensor p_init, p_final, p_e;  // [1,H,W], values in (0,1)
};

struct ForwardResult {
    Prediction pred;
    std::vector<Tensor> x;      // encoder features, finest first
    std::vector<Tensor> f_fre;  // frequency-branch outputs
    std::vector<Tensor> f_spa;  // spatial-branch outputs
    std::vector<Tensor> fuse;   // decoder outputs per level
};

/// Multi-scale features at strides 2, 4, ..., 2^L, all projected onto C
/// channels.
std::vector<Tensor> encode(const Tensor& image, const ModelParams& params,
                           const ModelConfig& cfg);

/// Full top-down pass. The deepest level starts the decoder chain from a
/// zero fusion map; every shallower level consumes the upsampled previous
/// fusion output through its aggregation blocks.
ForwardResult forward(const Tensor& image, const ModelParams& params, const ModelConfig& cfg);

struct SpsaConfig {
    double a = 0.05;          // base step size
    double c = 0.02;          // base perturbation scale
    double alpha = 0.602;     // step decay exponent
    double gamma_decay = 0.101;  // perturbation decay exponent
    double stability = 20.0;  // offset in the step-size schedule
    std::uint64_t seed = 1;
};

/// One simultaneous-perturbation step over a flat parameter vector: two
/// objective evaluations at theta +- c_k * delta, a rank-one update, and the
/// unperturbed objective value returned for logging. Throws NonFiniteLoss
/// and leaves theta unchanged if any evaluation or update is non-finite.
double spsa_step_flat(std::vector<float>& theta,
                      const std::function<double(const std::vector<float>&)>& objective,
                      const SpsaConfig& cfg, int step_index);

struct Sample {
    Tensor image;  // [3,H,W]
    Tensor mask;   // [1,H,W] binary
};

/// Random ellipses / rectangles over textured noise backgrounds.
std::vector<Sample> make_synthetic_dataset(int n, int h, int w, std::uint64_t seed);

struct TrainBatch {
    const std::vector<Sample>* samples = nullptr;
    std::vector<MaskPair> supervision;  // one per sample, built once
    ModelConfig model_cfg;
    LossConfig loss_cfg;
};

TrainBatch make_batch(const std::vector<Sample>& samples, const ModelConfig& mc,
                      const LossConfig& lc);

/// Mean total loss over the batch at the given parameters.
LossBreakdown batch_loss(ModelParams& params, const TrainBatch& batch);

/// One SPSA step on the model's trainable parameters; returns the
/// unperturbed batch loss (and optionally its per-term breakdown).
double spsa_step(ModelParams& params, const TrainBatch& batch, const SpsaConfig& cfg,
                 int step_index, LossBreakdown* breakdown_out = nullptr);

struct TrainResult {
    std::vector<double> loss_curve;          // one entry per step
    std::vector<LossBreakdown> breakdowns;   // per-term values per step
};

TrainResult train_toy(ModelParams& params, const TrainBatch& batch, const SpsaConfig& cfg,
                      int steps);

}  // namespace codkit
