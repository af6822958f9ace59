#pragma once

#include <vector>

#include "codkit/tensor.hpp"

namespace codkit {

/// [Cout, Cin/groups, Kh, Kw] convolution weights, row-major.
struct ConvWeight {
    int cout = 0, cin = 0, kh = 0, kw = 0;  // cin is per-group
    std::vector<float> data;

    ConvWeight() = default;
    ConvWeight(int co, int ci, int khh, int kww, float fill = 0.0f)
        : cout(co), cin(ci), kh(khh), kw(kww),
          data(static_cast<std::size_t>(co) * ci * khh * kww, fill) {}

    float& at(int co, int ci, int y, int x) {
        return data[((static_cast<std::size_t>(co) * cin + ci) * kh + y) * kw + x];
    }
    float at(int co, int ci, int y, int x) const {
        return data[((static_cast<std::size_t>(co) * cin + ci) * kh + y) * kw + x];
    }
};

/// Cross-correlation (no kernel flip), zero padding, standard output size
/// floor((in + 2*pad - dilation*(k-1) - 1)/stride) + 1.
Tensor conv2d(const Tensor& x, const ConvWeight& kernel, const std::vector<float>& bias,
              int stride = 1, int padding = 0, int dilation = 1, int groups = 1);

/// Convolution layer bundle; `apply` forwards to conv2d.
struct Conv2d {
    ConvWeight w;
    std::vector<float> bias;
    int stride = 1, padding = 0, dilation = 1, groups = 1;

    Tensor apply(const Tensor& x) const { return conv2d(x, w, bias, stride, padding, dilation, groups); }
};

/// Inference-mode batch norm: (x - mean)/sqrt(var + eps) * scale + shift.
struct BatchNorm {
    std::vector<float> scale, shift, running_mean, running_var;
    float eps = 1e-5f;

    static BatchNorm identity(int channels);
    Tensor apply(const Tensor& x) const;
};

Tensor batch_norm_infer(const Tensor& x, const std::vector<float>& scale,
                        const std::vector<float>& shift, const std::vector<float>& running_mean,
                        const std::vector<float>& running_var, float eps);

Tensor sigmoid(const Tensor& x);
Tensor gelu(const Tensor& x);  // tanh approximation
Tensor relu(const Tensor& x);
float sigmoid_scalar(float x);
float gelu_scalar(float x);

/// Per-channel means / maxima over the spatial grid.
std::vector<float> global_avg(const Tensor& x);
std::vector<float> global_max(const Tensor& x);

/// Spatial [1,H,W] reductions across channels.
Tensor channel_mean(const Tensor& x);
Tensor channel_max(const Tensor& x);

/// Average pooling. The divisor counts only in-bounds pixels, so constant
/// inputs stay constant under padding.
Tensor avg_pool2d(const Tensor& x, int k, int stride, int padding);

/// align-corners=false bilinear resampling.
Tensor resize_bilinear(const Tensor& x, int out_h, int out_w);

// elementwise helpers
Tensor add(const Tensor& a, const Tensor& b);
Tensor sub(const Tensor& a, const Tensor& b);
Tensor mul(const Tensor& a, const Tensor& b);
Tensor scale(const Tensor& a, float s);
/// Multiply every channel of x by a [1,H,W] gate.
Tensor mul_broadcast_spatial(const Tensor& x, const Tensor& gate);
/// Multiply channel c of x by per_channel[c].
Tensor mul_broadcast_channel(const Tensor& x, const std::vector<float>& per_channel);

Tensor concat_channels(const Tensor& a, const Tensor& b);
/// Split into channels [0,at) and [at,C).
std::pair<Tensor, Tensor> split_channels(const Tensor& x, int at);

/// Reflect-pad (edge pixels not repeated) on the spatial dims.
Tensor pad_reflect(const Tensor& x, int top, int bottom, int left, int right);
Tensor crop(const Tensor& x, int y0, int x0, int out_h, int out_w);

/// Map values linearly onto [0,1]; constant input maps to 0.
Tensor min_max_normalize(const Tensor& x);

bool all_finite(const Tensor& x);

/// Two-layer bottleneck over a per-channel vector: fc1 (C -> C/r), ReLU,
/// fc2 (C/r -> C). Used by channel attention and the global fusion branch.
struct BottleneckMlp {
    int channels = 0, hidden = 0;
    std::vector<float> w1, b1;  // [hidden, channels], [hidden]
    std::vector<float> w2, b2;  // [channels, hidden], [channels]

    BottleneckMlp() = default;
    BottleneckMlp(int c, int reduction);
    std::vector<float> apply(const std::vector<float>& v) const;
};

}  // namespace codkit
