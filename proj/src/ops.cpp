#include "codkit/ops.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

namespace codkit {

Tensor conv2d(const Tensor& x, const ConvWeight& kernel, const std::vector<float>& bias,
              int stride, int padding, int dilation, int groups) {
    const int cin_total = x.channels(), h = x.height(), w = x.width();
    if (groups < 1 || cin_total % groups != 0)
        throw ShapeMismatch("conv2d: input channels not divisible by groups");
    if (kernel.cin != cin_total / groups)
        throw ShapeMismatch("conv2d: kernel cin " + std::to_string(kernel.cin) + " vs input " +
                            std::to_string(cin_total) + "/" + std::to_string(groups));
    if (kernel.cout % groups != 0) throw ShapeMismatch("conv2d: cout not divisible by groups");
    if (!bias.empty() && static_cast<int>(bias.size()) != kernel.cout)
        throw ShapeMismatch("conv2d: bias length");
    const int oh = (h + 2 * padding - dilation * (kernel.kh - 1) - 1) / stride + 1;
    const int ow = (w + 2 * padding - dilation * (kernel.kw - 1) - 1) / stride + 1;
    if (oh <= 0 || ow <= 0) throw ShapeMismatch("conv2d: empty output");

    Tensor out(kernel.cout, oh, ow);
    const int cin_g = kernel.cin;
    const int cout_g = kernel.cout / groups;

#pragma omp parallel for collapse(2) schedule(static)
    for (int co = 0; co < kernel.cout; ++co) {
        for (int oy = 0; oy < oh; ++oy) {
            const int g = co / cout_g;
            const int ci0 = g * cin_g;
            float* dst = out.channel(co) + static_cast<std::size_t>(oy) * ow;
            for (int ox = 0; ox < ow; ++ox) {
                double acc = bias.empty() ? 0.0 : bias[co];
                for (int ci = 0; ci < cin_g; ++ci) {
                    const float* src = x.channel(ci0 + ci);
                    for (int ky = 0; ky < kernel.kh; ++ky) {
                        const int iy = oy * stride - padding + ky * dilation;
                        if (iy < 0 || iy >= h) continue;
                        const float* row = src + static_cast<std::size_t>(iy) * w;
                        for (int kx = 0; kx < kernel.kw; ++kx) {
                            const int ix = ox * stride - padding + kx * dilation;
                            if (ix < 0 || ix >= w) continue;
                            acc += static_cast<double>(row[ix]) * kernel.at(co, ci, ky, kx);
                        }
                    }
                }
                dst[ox] = static_cast<float>(acc);
            }
        }
    }
    return out;
}

BatchNorm BatchNorm::identity(int channels) {
    BatchNorm bn;
    bn.scale.assign(channels, 1.0f);
    bn.shift.assign(channels, 0.0f);
    bn.running_mean.assign(channels, 0.0f);
    bn.running_var.assign(channels, 1.0f);
    bn.eps = 0.0f;
    return bn;
}

Tensor BatchNorm::apply(const Tensor& x) const {
    return batch_norm_infer(x, scale, shift, running_mean, running_var, eps);
}

Tensor batch_norm_infer(const Tensor& x, const std::vector<float>& scale,
                        const std::vector<float>& shift, const std::vector<float>& running_mean,
                        const std::vector<float>& running_var, float eps) {
    const int c = x.channels();
    if (static_cast<int>(scale.size()) != c || static_cast<int>(shift.size()) != c ||
        static_cast<int>(running_mean.size()) != c || static_cast<int>(running_var.size()) != c)
        throw ShapeMismatch("batch_norm_infer: parameter vectors must have length C");
    for (int ch = 0; ch < c; ++ch)
        if (running_var[ch] + eps <= 0.0f)
            throw NonPositiveVariance("channel " + std::to_string(ch));

    Tensor out(c, x.height(), x.width());
    const std::size_t plane = static_cast<std::size_t>(x.height()) * x.width();
#pragma omp parallel for schedule(static)
    for (int ch = 0; ch < c; ++ch) {
        const double inv = 1.0 / std::sqrt(static_cast<double>(running_var[ch]) + eps);
        const double sc = scale[ch], sh = shift[ch], mu = running_mean[ch];
        const float* src = x.channel(ch);
        float* dst = out.channel(ch);
        for (std::size_t i = 0; i < plane; ++i)
            dst[i] = static_cast<float>((src[i] - mu) * inv * sc + sh);
    }
    return out;
}

float sigmoid_scalar(float x) { return static_cast<float>(1.0 / (1.0 + std::exp(-static_cast<double>(x)))); }

float gelu_scalar(float x) {
    const double xd = x;
    const double inner = 0.7978845608028654 * (xd + 0.044715 * xd * xd * xd);  // sqrt(2/pi)
    return static_cast<float>(0.5 * xd * (1.0 + std::tanh(inner)));
}

namespace {
template <typename F>
Tensor elementwise(const Tensor& x, F f) {
    Tensor out(x.channels(), x.height(), x.width());
    const std::size_t n = x.size();
#pragma omp parallel for schedule(static)
    for (long long i = 0; i < static_cast<long long>(n); ++i) out[i] = f(x[i]);
    return out;
}
}  // namespace

Tensor sigmoid(const Tensor& x) { return elementwise(x, sigmoid_scalar); }
Tensor gelu(const Tensor& x) { return elementwise(x, gelu_scalar); }
Tensor relu(const Tensor& x) {
    return elementwise(x, [](float v) { return v > 0.0f ? v : 0.0f; });
}

std::vector<float> global_avg(const Tensor& x) {
    std::vector<float> out(x.channels());
    const std::size_t plane = static_cast<std::size_t>(x.height()) * x.width();
    for (int c = 0; c < x.channels(); ++c) {
        double acc = 0.0;
        const float* src = x.channel(c);
        for (std::size_t i = 0; i < plane; ++i) acc += src[i];
        out[c] = static_cast<float>(acc / static_cast<double>(plane));
    }
    return out;
}

std::vector<float> global_max(const Tensor& x) {
    std::vector<float> out(x.channels());
    const std::size_t plane = static_cast<std::size_t>(x.height()) * x.width();
    for (int c = 0; c < x.channels(); ++c) {
        const float* src = x.channel(c);
        float m = src[0];
        for (std::size_t i = 1; i < plane; ++i) m = std::max(m, src[i]);
        out[c] = m;
    }
    return out;
}

Tensor channel_mean(const Tensor& x) {
    Tensor out(1, x.height(), x.width());
    const std::size_t plane = static_cast<std::size_t>(x.height()) * x.width();
    for (std::size_t i = 0; i < plane; ++i) {
        double acc = 0.0;
        for (int c = 0; c < x.channels(); ++c) acc += x.channel(c)[i];
        out[i] = static_cast<float>(acc / x.channels());
    }
    return out;
}

Tensor channel_max(const Tensor& x) {
    Tensor out(1, x.height(), x.width());
    const std::size_t plane = static_cast<std::size_t>(x.height()) * x.width();
    for (std::size_t i = 0; i < plane; ++i) {
        float m = x.channel(0)[i];
        for (int c = 1; c < x.channels(); ++c) m = std::max(m, x.channel(c)[i]);
        out[i] = m;
    }
    return out;
}

Tensor avg_pool2d(const Tensor& x, int k, int stride, int padding) {
    if (k < 1 || stride < 1 || padding < 0) throw ShapeMismatch("avg_pool2d: bad window");
    const int h = x.height(), w = x.width();
    const int oh = (h + 2 * padding - k) / stride + 1;
    const int ow = (w + 2 * padding - k) / stride + 1;
    if (oh <= 0 || ow <= 0) throw ShapeMismatch("avg_pool2d: empty output");
    Tensor out(x.channels(), oh, ow);
#pragma omp parallel for collapse(2) schedule(static)
    for (int c = 0; c < x.channels(); ++c) {
        for (int oy = 0; oy < oh; ++oy) {
            const float* src = x.channel(c);
            float* dst = out.channel(c) + static_cast<std::size_t>(oy) * ow;
            for (int ox = 0; ox < ow; ++ox) {
                double acc = 0.0;
                int count = 0;
                for (int ky = 0; ky < k; ++ky) {
                    const int iy = oy * stride - padding + ky;
                    if (iy < 0 || iy >= h) continue;
                    for (int kx = 0; kx < k; ++kx) {
                        const int ix = ox * stride - padding + kx;
                        if (ix < 0 || ix >= w) continue;
                        acc += src[static_cast<std::size_t>(iy) * w + ix];
                        ++count;
                    }
                }
                dst[ox] = count > 0 ? static_cast<float>(acc / count) : 0.0f;
            }
        }
    }
    return out;
}

Tensor resize_bilinear(const Tensor& x, int out_h, int out_w) {
    if (out_h < 1 || out_w < 1) throw ShapeMismatch("resize_bilinear: output dims must be >= 1");
    const int h = x.height(), w = x.width();
    if (out_h == h && out_w == w) return x;
    Tensor out(x.channels(), out_h, out_w);
    const double sy = static_cast<double>(h) / out_h;
    const double sx = static_cast<double>(w) / out_w;
#pragma omp parallel for collapse(2) schedule(static)
    for (int c = 0; c < x.channels(); ++c) {
        for (int oy = 0; oy < out_h; ++oy) {
            const float* src = x.channel(c);
            float* dst = out.channel(c) + static_cast<std::size_t>(oy) * out_w;
            const double fy = std::max(0.0, (oy + 0.5) * sy - 0.5);
            const int y0 = std::min(static_cast<int>(fy), h - 1);
            const int y1 = std::min(y0 + 1, h - 1);
            const double wy = fy - y0;
            for (int ox = 0; ox < out_w; ++ox) {
                const double fx = std::max(0.0, (ox + 0.5) * sx - 0.5);
                const int x0 = std::min(static_cast<int>(fx), w - 1);
                const int x1 = std::min(x0 + 1, w - 1);
                const double wx = fx - x0;
                const double top = src[static_cast<std::size_t>(y0) * w + x0] * (1.0 - wx) +
                                   src[static_cast<std::size_t>(y0) * w + x1] * wx;
                const double bot = src[static_cast<std::size_t>(y1) * w + x0] * (1.0 - wx) +
                                   src[static_cast<std::size_t>(y1) * w + x1] * wx;
                dst[ox] = static_cast<float>(top * (1.0 - wy) + bot * wy);
            }
        }
    }
    return out;
}

namespace {
template <typename F>
Tensor zip(const Tensor& a, const Tensor& b, F f, const char* what) {
    require_same_shape(a, b, what);
    Tensor out(a.channels(), a.height(), a.width());
    const std::size_t n = a.size();
#pragma omp parallel for schedule(static)
    for (long long i = 0; i < static_cast<long long>(n); ++i) out[i] = f(a[i], b[i]);
    return out;
}
}  // namespace

Tensor add(const Tensor& a, const Tensor& b) {
    return zip(a, b, [](float x, float y) { return x + y; }, "add");
}
Tensor sub(const Tensor& a, const Tensor& b) {
    return zip(a, b, [](float x, float y) { return x - y; }, "sub");
}
Tensor mul(const Tensor& a, const Tensor& b) {
    return zip(a, b, [](float x, float y) { return x * y; }, "mul");
}
Tensor scale(const Tensor& a, float s) {
    return elementwise(a, [s](float x) { return x * s; });
}

Tensor mul_broadcast_spatial(const Tensor& x, const Tensor& gate) {
    if (gate.channels() != 1 || gate.height() != x.height() || gate.width() != x.width())
        throw ShapeMismatch("mul_broadcast_spatial: gate must be [1,H,W]");
    Tensor out(x.channels(), x.height(), x.width());
    const std::size_t plane = static_cast<std::size_t>(x.height()) * x.width();
#pragma omp parallel for schedule(static)
    for (int c = 0; c < x.channels(); ++c) {
        const float* src = x.channel(c);
        float* dst = out.channel(c);
        for (std::size_t i = 0; i < plane; ++i) dst[i] = src[i] * gate[i];
    }
    return out;
}

Tensor mul_broadcast_channel(const Tensor& x, const std::vector<float>& per_channel) {
    if (static_cast<int>(per_channel.size()) != x.channels())
        throw ShapeMismatch("mul_broadcast_channel: vector length must equal C");
    Tensor out(x.channels(), x.height(), x.width());
    const std::size_t plane = static_cast<std::size_t>(x.height()) * x.width();
    for (int c = 0; c < x.channels(); ++c) {
        const float* src = x.channel(c);
        float* dst = out.channel(c);
        const float s = per_channel[c];
        for (std::size_t i = 0; i < plane; ++i) dst[i] = src[i] * s;
    }
    return out;
}

Tensor concat_channels(const Tensor& a, const Tensor& b) {
    if (a.height() != b.height() || a.width() != b.width())
        throw ShapeMismatch("concat_channels: spatial dims differ");
    Tensor out(a.channels() + b.channels(), a.height(), a.width());
    std::copy(a.data(), a.data() + a.size(), out.data());
    std::copy(b.data(), b.data() + b.size(), out.data() + a.size());
    return out;
}

std::pair<Tensor, Tensor> split_channels(const Tensor& x, int at) {
    if (at <= 0 || at >= x.channels()) throw ShapeMismatch("split_channels: bad split point");
    Tensor a(at, x.height(), x.width());
    Tensor b(x.channels() - at, x.height(), x.width());
    std::copy(x.data(), x.data() + a.size(), a.data());
    std::copy(x.data() + a.size(), x.data() + x.size(), b.data());
    return {std::move(a), std::move(b)};
}

Tensor pad_reflect(const Tensor& x, int top, int bottom, int left, int right) {
    const int h = x.height(), w = x.width();
    if (top >= h || bottom >= h || left >= w || right >= w)
        throw ShapeMismatch("pad_reflect: pad must be smaller than the source dim");
    Tensor out(x.channels(), h + top + bottom, w + left + right);
    for (int c = 0; c < x.channels(); ++c) {
        for (int y = 0; y < out.height(); ++y) {
            int sy = y - top;
            if (sy < 0) sy = -sy;
            if (sy >= h) sy = 2 * (h - 1) - sy;
            for (int xx = 0; xx < out.width(); ++xx) {
                int sx = xx - left;
                if (sx < 0) sx = -sx;
                if (sx >= w) sx = 2 * (w - 1) - sx;
                out.at(c, y, xx) = x.at(c, sy, sx);
            }
        }
    }
    return out;
}

Tensor crop(const Tensor& x, int y0, int x0, int out_h, int out_w) {
    if (y0 < 0 || x0 < 0 || y0 + out_h > x.height() || x0 + out_w > x.width())
        throw ShapeMismatch("crop: window out of bounds");
    Tensor out(x.channels(), out_h, out_w);
    for (int c = 0; c < x.channels(); ++c)
        for (int y = 0; y < out_h; ++y)
            for (int xx = 0; xx < out_w; ++xx) out.at(c, y, xx) = x.at(c, y0 + y, x0 + xx);
    return out;
}

Tensor min_max_normalize(const Tensor& x) {
    float lo = x[0], hi = x[0];
    for (std::size_t i = 1; i < x.size(); ++i) {
        lo = std::min(lo, x[i]);
        hi = std::max(hi, x[i]);
    }
    Tensor out(x.channels(), x.height(), x.width());
    if (hi > lo) {
        const double inv = 1.0 / (static_cast<double>(hi) - lo);
        for (std::size_t i = 0; i < x.size(); ++i)
            out[i] = static_cast<float>((x[i] - lo) * inv);
    }
    return out;
}

bool all_finite(const Tensor& x) {
    for (std::size_t i = 0; i < x.size(); ++i)
        if (!std::isfinite(x[i])) return false;
    return true;
}

BottleneckMlp::BottleneckMlp(int c, int reduction) : channels(c), hidden(c / reduction) {
    if (hidden < 1 || c % reduction != 0)
        throw ShapeMismatch("BottleneckMlp: reduction must divide C");
    w1.assign(static_cast<std::size_t>(hidden) * c, 0.0f);
    b1.assign(hidden, 0.0f);
    w2.assign(static_cast<std::size_t>(c) * hidden, 0.0f);
    b2.assign(c, 0.0f);
}

std::vector<float> BottleneckMlp::apply(const std::vector<float>& v) const {
    if (static_cast<int>(v.size()) != channels) throw ShapeMismatch("BottleneckMlp: input length");
    std::vector<float> mid(hidden);
    for (int i = 0; i < hidden; ++i) {
        double acc = b1[i];
        for (int j = 0; j < channels; ++j) acc += static_cast<double>(w1[static_cast<std::size_t>(i) * channels + j]) * v[j];
        mid[i] = acc > 0.0 ? static_cast<float>(acc) : 0.0f;
    }
    std::vector<float> out(channels);
    for (int i = 0; i < channels; ++i) {
        double acc = b2[i];
        for (int j = 0; j < hidden; ++j) acc += static_cast<double>(w2[static_cast<std::size_t>(i) * hidden + j]) * mid[j];
        out[i] = static_cast<float>(acc);
    }
    return out;
}

}  // namespace codkit
