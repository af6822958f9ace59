#include "codkit/supervision.hpp"

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

namespace codkit {

namespace {

int reflect_index(int i, int n) {
    if (i < 0) i = -i;
    if (i >= n) i = 2 * (n - 1) - i;
    return std::clamp(i, 0, n - 1);
}

std::vector<double> gaussian_taps(double sigma, int radius) {
    std::vector<double> k(2 * radius + 1);
    double sum = 0.0;
    for (int i = -radius; i <= radius; ++i) {
        k[i + radius] = std::exp(-(static_cast<double>(i) * i) / (2.0 * sigma * sigma));
        sum += k[i + radius];
    }
    for (double& v : k) v /= sum;
    return k;
}

std::vector<double> gaussian_blur(const std::vector<double>& img, int h, int w, double sigma) {
    const int radius = std::max(1, static_cast<int>(std::ceil(3.0 * sigma)));
    const std::vector<double> taps = gaussian_taps(sigma, radius);
    std::vector<double> tmp(img.size()), out(img.size());
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x) {
            double acc = 0.0;
            for (int t = -radius; t <= radius; ++t)
                acc += taps[t + radius] * img[static_cast<std::size_t>(y) * w + reflect_index(x + t, w)];
            tmp[static_cast<std::size_t>(y) * w + x] = acc;
        }
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x) {
            double acc = 0.0;
            for (int t = -radius; t <= radius; ++t)
                acc += taps[t + radius] * tmp[static_cast<std::size_t>(reflect_index(y + t, h)) * w + x];
            out[static_cast<std::size_t>(y) * w + x] = acc;
        }
    return out;
}

}  // namespace

Tensor canny_edges(const Tensor& mask, const CannyConfig& cfg) {
    if (mask.channels() != 1) throw ShapeMismatch("canny_edges: mask must be [1,H,W]");
    const int h = mask.height(), w = mask.width();
    const std::size_t n = mask.size();

    bool any0 = false, any1 = false;
    for (std::size_t i = 0; i < n; ++i) (mask[i] > 0.5f ? any1 : any0) = true;
    Tensor out(1, h, w);
    if (!any0 || !any1) return out;  // degenerate mask, nothing to trace

    std::vector<double> img(n);
    for (std::size_t i = 0; i < n; ++i) img[i] = mask[i] > 0.5f ? 1.0 : 0.0;
    const std::vector<double> blurred = gaussian_blur(img, h, w, cfg.sigma);

    // Sobel gradients, reflect borders
    std::vector<double> gx(n), gy(n), mag(n);
    double max_mag = 0.0;
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
            auto b = [&](int yy, int xx) {
                return blurred[static_cast<std::size_t>(reflect_index(yy, h)) * w + reflect_index(xx, w)];
            };
            const double sx = (b(y - 1, x + 1) + 2.0 * b(y, x + 1) + b(y + 1, x + 1)) -
                              (b(y - 1, x - 1) + 2.0 * b(y, x - 1) + b(y + 1, x - 1));
            const double sy = (b(y + 1, x - 1) + 2.0 * b(y + 1, x) + b(y + 1, x + 1)) -
                              (b(y - 1, x - 1) + 2.0 * b(y - 1, x) + b(y - 1, x + 1));
            const std::size_t i = static_cast<std::size_t>(y) * w + x;
            gx[i] = sx;
            gy[i] = sy;
            mag[i] = std::sqrt(sx * sx + sy * sy);
            max_mag = std::max(max_mag, mag[i]);
        }
    }
    if (max_mag <= 0.0) return out;
    for (double& m : mag) m /= max_mag;

    // Non-maximum suppression along the quantized gradient axis. A binary
    // step yields two pixels of equal ridge magnitude (up to rounding), so
    // near-ties resolve by blurred intensity: the brighter side wins, which
    // places edges on the mask's inner boundary ring.
    const double tie_tol = 1e-6;
    std::vector<char> keep(n, 0);
    std::vector<double> mag_kept(n, 0.0);
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
            const std::size_t i = static_cast<std::size_t>(y) * w + x;
            if (mag[i] < cfg.low) continue;
            const double ax = gx[i], ay = gy[i];
            // sector axis: 0 deg, 45, 90, 135
            int dx, dy;
            const double angle = std::atan2(ay, ax);
            const double a = std::fmod(angle + 3.14159265358979323846, 3.14159265358979323846);
            if (a < 3.14159265358979323846 / 8 || a >= 7 * 3.14159265358979323846 / 8) {
                dx = 1, dy = 0;
            } else if (a < 3 * 3.14159265358979323846 / 8) {
                dx = 1, dy = 1;
            } else if (a < 5 * 3.14159265358979323846 / 8) {
                dx = 0, dy = 1;
            } else {
                dx = -1, dy = 1;
            }
            auto survives = [&](int ny, int nx) {
                double nm = 0.0, nb = 0.0;
                if (ny >= 0 && ny < h && nx >= 0 && nx < w) {
                    nm = mag[static_cast<std::size_t>(ny) * w + nx];
                    nb = blurred[static_cast<std::size_t>(ny) * w + nx];
                }
                if (mag[i] > nm + tie_tol) return true;
                if (mag[i] < nm - tie_tol) return false;
                return blurred[i] >= nb;
            };
            if (!survives(y + dy, x + dx) || !survives(y - dy, x - dx)) continue;
            // Staircase corners put the ridge maximum on the dark side of the
            // boundary; those survivors shift one pixel uphill so the edge
            // stays on the object's inner ring.
            int ky = y, kx = x;
            if (blurred[i] < 0.5) {
                const int sy = (ax * dx + ay * dy < 0.0) ? -dy : dy;
                const int sx = (ax * dx + ay * dy < 0.0) ? -dx : dx;
                if (y + sy >= 0 && y + sy < h && x + sx >= 0 && x + sx < w &&
                    blurred[static_cast<std::size_t>(y + sy) * w + x + sx] >= 0.5) {
                    ky = y + sy;
                    kx = x + sx;
                }
            }
            const std::size_t k = static_cast<std::size_t>(ky) * w + kx;
            keep[k] = 1;
            mag_kept[k] = std::max(mag_kept[k], mag[i]);
        }
    }

    // double threshold + hysteresis (8-connected)
    std::vector<char> state(n, 0);  // 0 none, 1 weak, 2 strong
    std::vector<std::size_t> stack;
    for (std::size_t i = 0; i < n; ++i) {
        if (!keep[i]) continue;
        if (mag_kept[i] >= cfg.high) {
            state[i] = 2;
            stack.push_back(i);
        } else if (mag_kept[i] >= cfg.low) {
            state[i] = 1;
        }
    }
    while (!stack.empty()) {
        const std::size_t i = stack.back();
        stack.pop_back();
        const int y = static_cast<int>(i / w), x = static_cast<int>(i % w);
        for (int dy = -1; dy <= 1; ++dy) {
            for (int dx = -1; dx <= 1; ++dx) {
                const int yy = y + dy, xx = x + dx;
                if (yy < 0 || yy >= h || xx < 0 || xx >= w) continue;
                const std::size_t j = static_cast<std::size_t>(yy) * w + xx;
                if (state[j] == 1) {
                    state[j] = 2;
                    stack.push_back(j);
                }
            }
        }
    }
    for (std::size_t i = 0; i < n; ++i) out[i] = state[i] == 2 ? 1.0f : 0.0f;
    return out;
}

Tensor dilate(const Tensor& edge, int k) {
    if (k < 1 || k % 2 == 0) throw EvenKernel("k = " + std::to_string(k));
    if (edge.channels() != 1) throw ShapeMismatch("dilate: edge must be [1,H,W]");
    if (k == 1) return edge;
    const int h = edge.height(), w = edge.width(), r = k / 2;
    // square structuring element separates into a horizontal and vertical run
    Tensor tmp(1, h, w), out(1, h, w);
#pragma omp parallel for schedule(static)
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
            float m = 0.0f;
            for (int d = -r; d <= r; ++d) {
                const int ix = x + d;
                if (ix < 0 || ix >= w) continue;
                m = std::max(m, edge.at(0, y, ix));
            }
            tmp.at(0, y, x) = m;
        }
    }
#pragma omp parallel for schedule(static)
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
            float m = 0.0f;
            for (int d = -r; d <= r; ++d) {
                const int iy = y + d;
                if (iy < 0 || iy >= h) continue;
                m = std::max(m, tmp.at(0, iy, x));
            }
            out.at(0, y, x) = m > 0.5f ? 1.0f : 0.0f;
        }
    }
    return out;
}

MaskPair build_supervision(const Tensor& mask, int k, const CannyConfig& cfg) {
    if (mask.channels() != 1) throw ShapeMismatch("build_supervision: mask must be [1,H,W]");
    for (std::size_t i = 0; i < mask.size(); ++i)
        if (mask[i] != 0.0f && mask[i] != 1.0f)
            throw DomainError("build_supervision: mask must be strictly binary");
    MaskPair pair;
    pair.mask = mask;
    pair.edge = canny_edges(mask, cfg);
    pair.dilated_edge = dilate(pair.edge, k);
    pair.kernel_size = k;
    return pair;
}

}  // namespace codkit
