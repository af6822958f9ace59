#pragma once

#include "codkit/tensor.hpp"

namespace codkit {

struct LossConfig {
    double gamma = 1.0;      // weight on the edge term
    int pool_k = 15;         // window of the boundary-weighting average pool
    double weight_amp = 5.0; // amplification of the pooled deviation
    double eps = 1e-8;       // log stabilizer

    void validate() const;
};

/// w = 1 + weight_amp * |avg_pool(g, pool_k, stride 1) - g|; >= 1 everywhere,
/// largest near mask boundaries.
Tensor pixel_weights(const Tensor& g, const LossConfig& cfg);

/// sum(w * bce) / sum(w), natural log, eps-stabilized.
double weighted_bce(const Tensor& p, const Tensor& g, const LossConfig& cfg);

/// 1 - (sum(w*p*g) + 1) / (sum(w*(p + g - p*g)) + 1).
double weighted_iou(const Tensor& p, const Tensor& g, const LossConfig& cfg);

/// weighted_bce + weighted_iou.
double seg_loss(const Tensor& p, const Tensor& g, const LossConfig& cfg);

struct LossBreakdown {
    double total = 0.0;
    double seg_init = 0.0;
    double seg_final = 0.0;
    double edge = 0.0;  // unweighted edge BCE; total applies gamma
};

/// seg(p_init) + seg(p_final) + gamma * wbce(p_edge, g_edge_dilated).
LossBreakdown total_loss(const Tensor& p_init, const Tensor& p_final, const Tensor& p_edge,
                         const Tensor& g_mask, const Tensor& g_edge_dilated,
                         const LossConfig& cfg);

enum class LossKind { bce, iou };

/// Closed-form d(loss)/dp, elementwise. p must lie strictly inside (0, 1).
Tensor loss_grad(const Tensor& p, const Tensor& g, const LossConfig& cfg, LossKind which);

}  // namespace codkit
