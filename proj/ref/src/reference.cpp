#include "codkit/ref/reference.hpp"

#include <algorithm>
#include <cmath>
#include <complex>

namespace codkit::ref {

namespace {
constexpr double kPi = 3.14159265358979323846;
constexpr double kEps = 2.220446049250313e-16;  // double machine epsilon
}  // namespace

ComplexPlane dft2_direct(const Tensor& x) {
    const int c = x.channels(), h = x.height(), w = x.width();
    Tensor re(c, h, w), im(c, h, w);
    for (int ch = 0; ch < c; ++ch) {
        for (int u = 0; u < h; ++u) {
            for (int v = 0; v < w; ++v) {
                double sr = 0.0, si = 0.0;
                for (int y = 0; y < h; ++y) {
                    for (int xx = 0; xx < w; ++xx) {
                        const double ang = -2.0 * kPi * (static_cast<double>(u) * y / h +
                                                         static_cast<double>(v) * xx / w);
                        const double val = x.at(ch, y, xx);
                        sr += val * std::cos(ang);
                        si += val * std::sin(ang);
                    }
                }
                re.at(ch, u, v) = static_cast<float>(sr);
                im.at(ch, u, v) = static_cast<float>(si);
            }
        }
    }
    return ComplexPlane(std::move(re), std::move(im));
}

Tensor idft2_direct(const ComplexPlane& c, double* max_imag) {
    const int cn = c.real.channels(), h = c.real.height(), w = c.real.width();
    Tensor out(cn, h, w);
    double resid = 0.0;
    const double norm = 1.0 / (static_cast<double>(h) * w);
    for (int ch = 0; ch < cn; ++ch) {
        for (int y = 0; y < h; ++y) {
            for (int xx = 0; xx < w; ++xx) {
                double sr = 0.0, si = 0.0;
                for (int u = 0; u < h; ++u) {
                    for (int v = 0; v < w; ++v) {
                        const double ang = 2.0 * kPi * (static_cast<double>(u) * y / h +
                                                        static_cast<double>(v) * xx / w);
                        const double cr = c.real.at(ch, u, v), ci = c.imag.at(ch, u, v);
                        sr += cr * std::cos(ang) - ci * std::sin(ang);
                        si += cr * std::sin(ang) + ci * std::cos(ang);
                    }
                }
                out.at(ch, y, xx) = static_cast<float>(sr * norm);
                resid = std::max(resid, std::abs(si * norm));
            }
        }
    }
    if (max_imag) *max_imag = resid;
    return out;
}

Tensor conv2d_naive(const Tensor& x, const ConvWeight& kernel, const std::vector<float>& bias,
                    int stride, int padding, int dilation, int groups) {
    const int h = x.height(), w = x.width();
    const int oh = (h + 2 * padding - dilation * (kernel.kh - 1) - 1) / stride + 1;
    const int ow = (w + 2 * padding - dilation * (kernel.kw - 1) - 1) / stride + 1;
    const int cin_g = kernel.cin;
    const int cout_g = kernel.cout / groups;
    Tensor out(kernel.cout, oh, ow);
    for (int co = 0; co < kernel.cout; ++co) {
        const int g = co / cout_g;
        for (int oy = 0; oy < oh; ++oy) {
            for (int ox = 0; ox < ow; ++ox) {
                double acc = bias.empty() ? 0.0 : bias[co];
                for (int ci = 0; ci < cin_g; ++ci) {
                    for (int ky = 0; ky < kernel.kh; ++ky) {
                        for (int kx = 0; kx < kernel.kw; ++kx) {
                            const int iy = oy * stride - padding + ky * dilation;
                            const int ix = ox * stride - padding + kx * dilation;
                            if (iy < 0 || iy >= h || ix < 0 || ix >= w) continue;
                            acc += static_cast<double>(x.at(g * cin_g + ci, iy, ix)) *
                                   kernel.at(co, ci, ky, kx);
                        }
                    }
                }
                out.at(co, oy, ox) = static_cast<float>(acc);
            }
        }
    }
    return out;
}

Tensor avg_pool2d_naive(const Tensor& x, int k, int stride, int padding) {
    const int h = x.height(), w = x.width();
    const int oh = (h + 2 * padding - k) / stride + 1;
    const int ow = (w + 2 * padding - k) / stride + 1;
    Tensor out(x.channels(), oh, ow);
    for (int c = 0; c < x.channels(); ++c) {
        for (int oy = 0; oy < oh; ++oy) {
            for (int ox = 0; ox < ow; ++ox) {
                double acc = 0.0;
                int n = 0;
                for (int ky = 0; ky < k; ++ky) {
                    for (int kx = 0; kx < k; ++kx) {
                        const int iy = oy * stride - padding + ky;
                        const int ix = ox * stride - padding + kx;
                        if (iy < 0 || iy >= h || ix < 0 || ix >= w) continue;
                        acc += x.at(c, iy, ix);
                        ++n;
                    }
                }
                out.at(c, oy, ox) = n > 0 ? static_cast<float>(acc / n) : 0.0f;
            }
        }
    }
    return out;
}

Tensor batch_norm_naive(const Tensor& x, const std::vector<float>& scale,
                        const std::vector<float>& shift, const std::vector<float>& mean,
                        const std::vector<float>& var, float eps) {
    Tensor out(x.channels(), x.height(), x.width());
    for (int c = 0; c < x.channels(); ++c)
        for (int y = 0; y < x.height(); ++y)
            for (int xx = 0; xx < x.width(); ++xx)
                out.at(c, y, xx) = static_cast<float>(
                    (static_cast<double>(x.at(c, y, xx)) - mean[c]) /
                        std::sqrt(static_cast<double>(var[c]) + eps) * scale[c] +
                    shift[c]);
    return out;
}

Tensor dilate_window_max(const Tensor& edge, int k) {
    const int h = edge.height(), w = edge.width(), r = k / 2;
    Tensor out(1, h, w);
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
            float m = 0.0f;
            for (int dy = -r; dy <= r; ++dy) {
                for (int dx = -r; dx <= r; ++dx) {
                    const int iy = y + dy, ix = x + dx;
                    if (iy < 0 || iy >= h || ix < 0 || ix >= w) continue;
                    m = std::max(m, edge.at(0, iy, ix));
                }
            }
            out.at(0, y, x) = m;
        }
    }
    return out;
}

Tensor erode_naive(const Tensor& mask, int k) {
    const int h = mask.height(), w = mask.width(), r = k / 2;
    Tensor out(1, h, w);
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
            float m = 1.0f;
            for (int dy = -r; dy <= r; ++dy) {
                for (int dx = -r; dx <= r; ++dx) {
                    const int iy = y + dy, ix = x + dx;
                    if (iy < 0 || iy >= h || ix < 0 || ix >= w) {
                        m = 0.0f;
                        continue;
                    }
                    m = std::min(m, mask.at(0, iy, ix));
                }
            }
            out.at(0, y, x) = m;
        }
    }
    return out;
}

Tensor boundary_ring(const Tensor& mask) {
    Tensor eroded = erode_naive(mask, 3);
    Tensor out(1, mask.height(), mask.width());
    for (std::size_t i = 0; i < mask.size(); ++i)
        out[i] = (mask[i] > 0.5f && eroded[i] < 0.5f) ? 1.0f : 0.0f;
    return out;
}

std::vector<double> pixel_weights_loop(const Tensor& g, int pool_k, double weight_amp) {
    Tensor pooled = avg_pool2d_naive(g, pool_k, 1, (pool_k - 1) / 2);
    std::vector<double> w(g.size());
    for (std::size_t i = 0; i < g.size(); ++i)
        w[i] = 1.0 + weight_amp * std::abs(static_cast<double>(pooled[i]) - g[i]);
    return w;
}

double weighted_bce_loop(const Tensor& p, const Tensor& g, int pool_k, double weight_amp,
                         double eps) {
    const std::vector<double> w = pixel_weights_loop(g, pool_k, weight_amp);
    std::vector<double> pd(p.size()), gd(g.size());
    for (std::size_t i = 0; i < p.size(); ++i) {
        pd[i] = p[i];
        gd[i] = g[i];
    }
    return weighted_bce_loop_d(pd, gd, w, eps);
}

double weighted_iou_loop(const Tensor& p, const Tensor& g, int pool_k, double weight_amp) {
    const std::vector<double> w = pixel_weights_loop(g, pool_k, weight_amp);
    std::vector<double> pd(p.size()), gd(g.size());
    for (std::size_t i = 0; i < p.size(); ++i) {
        pd[i] = p[i];
        gd[i] = g[i];
    }
    return weighted_iou_loop_d(pd, gd, w);
}

double weighted_bce_loop_d(const std::vector<double>& p, const std::vector<double>& g,
                           const std::vector<double>& w, double eps) {
    double num = 0.0, den = 0.0;
    for (std::size_t i = 0; i < p.size(); ++i) {
        num += w[i] * (-g[i] * std::log(p[i] + eps) - (1.0 - g[i]) * std::log(1.0 - p[i] + eps));
        den += w[i];
    }
    return num / den;
}

double weighted_iou_loop_d(const std::vector<double>& p, const std::vector<double>& g,
                           const std::vector<double>& w) {
    double inter = 0.0, uni = 0.0;
    for (std::size_t i = 0; i < p.size(); ++i) {
        inter += w[i] * p[i] * g[i];
        uni += w[i] * (p[i] + g[i] - p[i] * g[i]);
    }
    return 1.0 - (inter + 1.0) / (uni + 1.0);
}

double mae_loop(const Tensor& p, const Tensor& g) {
    double acc = 0.0;
    for (std::size_t i = 0; i < p.size(); ++i) acc += std::abs(static_cast<double>(p[i]) - g[i]);
    return acc / static_cast<double>(p.size());
}

// ---- S-measure, literal form ----

namespace {

// mean of prediction restricted to a region, and the population std there
void region_stats(const Tensor& p, const Tensor& g, bool fg, double* mean_out, double* std_out) {
    double sum = 0.0;
    long long n = 0;
    for (std::size_t i = 0; i < p.size(); ++i) {
        if ((g[i] > 0.5f) == fg) {
            sum += p[i];
            ++n;
        }
    }
    const double mu = n > 0 ? sum / n : 0.0;
    double var = 0.0;
    for (std::size_t i = 0; i < p.size(); ++i)
        if ((g[i] > 0.5f) == fg) var += (p[i] - mu) * (p[i] - mu);
    *mean_out = mu;
    *std_out = n > 0 ? std::sqrt(var / n) : 0.0;
}

double object_score(const Tensor& p, const Tensor& g, bool fg) {
    // dissimilarity score of the masked prediction against the constant 1
    Tensor masked(1, p.height(), p.width());
    for (std::size_t i = 0; i < p.size(); ++i) {
        const bool in = (g[i] > 0.5f) == fg;
        masked[i] = in ? (fg ? p[i] : 1.0f - p[i]) : 0.0f;
    }
    double x, sigma;
    region_stats(masked, g, fg, &x, &sigma);
    return 2.0 * x / (x * x + 1.0 + sigma + kEps);
}

double s_object(const Tensor& p, const Tensor& g) {
    double u = 0.0;
    for (std::size_t i = 0; i < g.size(); ++i) u += (g[i] > 0.5f) ? 1.0 : 0.0;
    u /= static_cast<double>(g.size());
    return u * object_score(p, g, true) + (1.0 - u) * object_score(p, g, false);
}

// ssim-style block comparison used by the region term
double region_ssim(const Tensor& p, const Tensor& g, int y0, int y1, int x0, int x1) {
    const long long n = static_cast<long long>(y1 - y0) * (x1 - x0);
    if (n <= 0) return 0.0;
    double sx = 0.0, sy = 0.0;
    for (int y = y0; y < y1; ++y)
        for (int x = x0; x < x1; ++x) {
            sx += p.at(0, y, x);
            sy += (g.at(0, y, x) > 0.5f) ? 1.0 : 0.0;
        }
    const double mx = sx / n, my = sy / n;
    double vx = 0.0, vy = 0.0, vxy = 0.0;
    for (int y = y0; y < y1; ++y)
        for (int x = x0; x < x1; ++x) {
            const double dx = p.at(0, y, x) - mx;
            const double dy = ((g.at(0, y, x) > 0.5f) ? 1.0 : 0.0) - my;
            vx += dx * dx;
            vy += dy * dy;
            vxy += dx * dy;
        }
    vx /= n - 1 + kEps;
    vy /= n - 1 + kEps;
    vxy /= n - 1 + kEps;
    const double alpha = 4.0 * mx * my * vxy;
    const double beta = (mx * mx + my * my) * (vx + vy);
    if (alpha != 0.0) return alpha / (beta + kEps);
    if (beta == 0.0) return 1.0;
    return 0.0;
}

double s_region(const Tensor& p, const Tensor& g) {
    const int rows = g.height(), cols = g.width();
    double total = 0.0, cx = 0.0, cy = 0.0;
    for (int y = 0; y < rows; ++y)
        for (int x = 0; x < cols; ++x)
            if (g.at(0, y, x) > 0.5f) {
                total += 1.0;
                cx += x + 1;  // 1-based, matching the published formulation
                cy += y + 1;
            }
    int X, Y;
    if (total == 0.0) {
        X = static_cast<int>(std::lround(cols / 2.0));
        Y = static_cast<int>(std::lround(rows / 2.0));
    } else {
        X = static_cast<int>(std::lround(cx / total));
        Y = static_cast<int>(std::lround(cy / total));
    }
    const double area = static_cast<double>(rows) * cols;
    const double w1 = (static_cast<double>(X) * Y) / area;
    const double w2 = (static_cast<double>(cols - X) * Y) / area;
    const double w3 = (static_cast<double>(X) * (rows - Y)) / area;
    const double w4 = 1.0 - w1 - w2 - w3;
    const double q1 = region_ssim(p, g, 0, Y, 0, X);
    const double q2 = region_ssim(p, g, 0, Y, X, cols);
    const double q3 = region_ssim(p, g, Y, rows, 0, X);
    const double q4 = region_ssim(p, g, Y, rows, X, cols);
    return w1 * q1 + w2 * q2 + w3 * q3 + w4 * q4;
}

}  // namespace

double s_measure_literal(const Tensor& p, const Tensor& g, double alpha) {
    double gmean = 0.0;
    for (std::size_t i = 0; i < g.size(); ++i) gmean += (g[i] > 0.5f) ? 1.0 : 0.0;
    gmean /= static_cast<double>(g.size());
    double pmean = 0.0;
    for (std::size_t i = 0; i < p.size(); ++i) pmean += p[i];
    pmean /= static_cast<double>(p.size());
    if (gmean == 0.0) return 1.0 - pmean;
    if (gmean == 1.0) return pmean;
    const double q = alpha * s_object(p, g) + (1.0 - alpha) * s_region(p, g);
    return std::max(q, 0.0);
}

// ---- mean E-measure, literal form ----

namespace {

double e_measure_binary(const std::vector<char>& fm, const std::vector<char>& gt) {
    const std::size_t n = fm.size();
    long long gt_sum = 0;
    for (char v : gt) gt_sum += v;
    double acc = 0.0;
    if (gt_sum == 0) {
        for (char v : fm) acc += 1.0 - v;
    } else if (gt_sum == static_cast<long long>(n)) {
        for (char v : fm) acc += v;
    } else {
        double mu_fm = 0.0, mu_gt = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            mu_fm += fm[i];
            mu_gt += gt[i];
        }
        mu_fm /= static_cast<double>(n);
        mu_gt /= static_cast<double>(n);
        for (std::size_t i = 0; i < n; ++i) {
            const double af = fm[i] - mu_fm;
            const double ag = gt[i] - mu_gt;
            const double align = 2.0 * ag * af / (ag * ag + af * af + kEps);
            acc += (align + 1.0) * (align + 1.0) / 4.0;
        }
    }
    return acc / static_cast<double>(n);
}

}  // namespace

double e_measure_mean_literal(const Tensor& p, const Tensor& g) {
    const std::size_t n = p.size();
    std::vector<char> gt(n);
    for (std::size_t i = 0; i < n; ++i) gt[i] = g[i] > 0.5f ? 1 : 0;
    double acc = 0.0;
    std::vector<char> fm(n);
    // 256 bin-centered thresholds of [0,1]
    for (int t = 0; t < 256; ++t) {
        const double thr = (static_cast<double>(t) + 0.5) / 256.0;
        for (std::size_t i = 0; i < n; ++i) fm[i] = (p[i] >= thr) ? 1 : 0;
        acc += e_measure_binary(fm, gt);
    }
    return acc / 256.0;
}

// ---- weighted F-measure, literal form ----

std::optional<double> weighted_f_literal(const Tensor& p, const Tensor& g, double beta2) {
    const int h = p.height(), w = p.width();
    const std::size_t n = p.size();
    std::vector<char> gt(n);
    long long fg_count = 0;
    for (std::size_t i = 0; i < n; ++i) {
        gt[i] = g[i] > 0.5f ? 1 : 0;
        fg_count += gt[i];
    }
    if (fg_count == 0) return std::nullopt;

    // nearest foreground pixel per background pixel: smallest squared
    // Euclidean distance, ties broken by smallest row-major index
    std::vector<double> dist(n, 0.0);
    std::vector<std::size_t> idx(n);
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
            const std::size_t i = static_cast<std::size_t>(y) * w + x;
            if (gt[i]) {
                idx[i] = i;
                continue;
            }
            long long best = -1;
            std::size_t best_i = 0;
            for (int yy = 0; yy < h; ++yy) {
                for (int xx = 0; xx < w; ++xx) {
                    const std::size_t j = static_cast<std::size_t>(yy) * w + xx;
                    if (!gt[j]) continue;
                    const long long d2 = static_cast<long long>(yy - y) * (yy - y) +
                                         static_cast<long long>(xx - x) * (xx - x);
                    if (best < 0 || d2 < best) {
                        best = d2;
                        best_i = j;
                    }
                }
            }
            dist[i] = std::sqrt(static_cast<double>(best));
            idx[i] = best_i;
        }
    }

    std::vector<double> E(n), Et(n);
    for (std::size_t i = 0; i < n; ++i) E[i] = std::abs(static_cast<double>(p[i]) - gt[i]);
    for (std::size_t i = 0; i < n; ++i) Et[i] = gt[i] ? E[i] : E[idx[i]];

    // 7x7 Gaussian, sigma 5, normalized; correlation with zero padding
    double kern[7][7];
    double ksum = 0.0;
    for (int a = 0; a < 7; ++a)
        for (int b = 0; b < 7; ++b) {
            kern[a][b] = std::exp(-((a - 3.0) * (a - 3.0) + (b - 3.0) * (b - 3.0)) / (2.0 * 25.0));
            ksum += kern[a][b];
        }
    for (int a = 0; a < 7; ++a)
        for (int b = 0; b < 7; ++b) kern[a][b] /= ksum;

    std::vector<double> EA(n, 0.0);
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
            double acc = 0.0;
            for (int a = 0; a < 7; ++a) {
                for (int b = 0; b < 7; ++b) {
                    const int iy = y + a - 3, ix = x + b - 3;
                    if (iy < 0 || iy >= h || ix < 0 || ix >= w) continue;
                    acc += kern[a][b] * Et[static_cast<std::size_t>(iy) * w + ix];
                }
            }
            EA[static_cast<std::size_t>(y) * w + x] = acc;
        }
    }

    std::vector<double> min_e_ea(n);
    for (std::size_t i = 0; i < n; ++i)
        min_e_ea[i] = (gt[i] && EA[i] < E[i]) ? EA[i] : E[i];

    std::vector<double> B(n);
    const double decay = std::log(0.5) / 5.0;
    for (std::size_t i = 0; i < n; ++i)
        B[i] = gt[i] ? 1.0 : 2.0 - std::exp(decay * dist[i]);

    double tp_loss = 0.0, fpw = 0.0, ew_fg_sum = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double ew = min_e_ea[i] * B[i];
        if (gt[i]) {
            tp_loss += ew;
            ew_fg_sum += ew;
        } else {
            fpw += ew;
        }
    }
    const double tpw = static_cast<double>(fg_count) - tp_loss;
    const double recall = 1.0 - ew_fg_sum / static_cast<double>(fg_count);
    const double precision = tpw / (kEps + tpw + fpw);
    return (1.0 + beta2) * precision * recall / (kEps + recall + beta2 * precision);
}

}  // namespace codkit::ref
