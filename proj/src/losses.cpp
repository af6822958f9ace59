#include "codkit/losses.hpp"

#include <cmath>

#include "codkit/ops.hpp"

namespace codkit {

void LossConfig::validate() const {
    if (gamma <= 0.0) throw DomainError("LossConfig: gamma must be positive");
    if (pool_k < 1 || pool_k % 2 == 0) throw DomainError("LossConfig: pool_k must be odd");
    if (eps <= 0.0) throw DomainError("LossConfig: eps must be positive");
}

namespace {

void check_prediction(const Tensor& p, const Tensor& g) {
    require_same_shape(p, g, "loss: prediction vs ground truth");
    for (std::size_t i = 0; i < p.size(); ++i)
        if (!(p[i] >= 0.0f && p[i] <= 1.0f))
            throw DomainError("loss: prediction outside [0,1]");
}

}  // namespace

Tensor pixel_weights(const Tensor& g, const LossConfig& cfg) {
    Tensor pooled = avg_pool2d(g, cfg.pool_k, 1, (cfg.pool_k - 1) / 2);
    Tensor w(g.channels(), g.height(), g.width());
    for (std::size_t i = 0; i < g.size(); ++i)
        w[i] = static_cast<float>(1.0 + cfg.weight_amp * std::abs(static_cast<double>(pooled[i]) - g[i]));
    return w;
}

double weighted_bce(const Tensor& p, const Tensor& g, const LossConfig& cfg) {
    check_prediction(p, g);
    const Tensor w = pixel_weights(g, cfg);
    double num = 0.0, den = 0.0;
    for (std::size_t i = 0; i < p.size(); ++i) {
        const double pi = p[i], gi = g[i], wi = w[i];
        num += wi * (-gi * std::log(pi + cfg.eps) - (1.0 - gi) * std::log(1.0 - pi + cfg.eps));
        den += wi;
    }
    return num / den;
}

double weighted_iou(const Tensor& p, const Tensor& g, const LossConfig& cfg) {
    check_prediction(p, g);
    const Tensor w = pixel_weights(g, cfg);
    double inter = 0.0, uni = 0.0;
    for (std::size_t i = 0; i < p.size(); ++i) {
        const double pi = p[i], gi = g[i], wi = w[i];
        inter += wi * pi * gi;
        uni += wi * (pi + gi - pi * gi);
    }
    return 1.0 - (inter + 1.0) / (uni + 1.0);
}

double seg_loss(const Tensor& p, const Tensor& g, const LossConfig& cfg) {
    return weighted_bce(p, g, cfg) + weighted_iou(p, g, cfg);
}

LossBreakdown total_loss(const Tensor& p_init, const Tensor& p_final, const Tensor& p_edge,
                         const Tensor& g_mask, const Tensor& g_edge_dilated,
                         const LossConfig& cfg) {
    LossBreakdown b;
    b.seg_init = seg_loss(p_init, g_mask, cfg);
    b.seg_final = seg_loss(p_final, g_mask, cfg);
    b.edge = weighted_bce(p_edge, g_edge_dilated, cfg);
    b.total = b.seg_init + b.seg_final + cfg.gamma * b.edge;
    return b;
}

Tensor loss_grad(const Tensor& p, const Tensor& g, const LossConfig& cfg, LossKind which) {
    require_same_shape(p, g, "loss_grad: prediction vs ground truth");
    for (std::size_t i = 0; i < p.size(); ++i)
        if (!(p[i] > 0.0f && p[i] < 1.0f))
            throw DomainError("loss_grad: prediction must lie strictly inside (0,1)");
    const Tensor w = pixel_weights(g, cfg);
    Tensor grad(p.channels(), p.height(), p.width());
    if (which == LossKind::bce) {
        double den = 0.0;
        for (std::size_t i = 0; i < w.size(); ++i) den += w[i];
        for (std::size_t i = 0; i < p.size(); ++i) {
            const double pi = p[i], gi = g[i];
            grad[i] = static_cast<float>(
                w[i] * (-gi / (pi + cfg.eps) + (1.0 - gi) / (1.0 - pi + cfg.eps)) / den);
        }
    } else {
        double inter = 0.0, uni = 0.0;
        for (std::size_t i = 0; i < p.size(); ++i) {
            const double pi = p[i], gi = g[i], wi = w[i];
            inter += wi * pi * gi;
            uni += wi * (pi + gi - pi * gi);
        }
        const double u1 = uni + 1.0, i1 = inter + 1.0;
        for (std::size_t i = 0; i < p.size(); ++i) {
            const double gi = g[i], wi = w[i];
            // d/dp[1 - (I+1)/(U+1)] with dI/dp = w*g, dU/dp = w*(1-g)
            grad[i] = static_cast<float>(-(wi * gi * u1 - i1 * wi * (1.0 - gi)) / (u1 * u1));
        }
    }
    return grad;
}

}  // namespace codkit
