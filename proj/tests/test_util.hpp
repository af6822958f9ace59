#pragma once

#include <cmath>

#include "codkit/rng.hpp"
#include "codkit/tensor.hpp"

namespace testutil {

inline codkit::Tensor random_tensor(codkit::Rng& rng, int c, int h, int w, double lo = -1.0,
                                    double hi = 1.0) {
    codkit::Tensor t(c, h, w);
    for (std::size_t i = 0; i < t.size(); ++i) t[i] = static_cast<float>(rng.uniform(lo, hi));
    return t;
}

inline double max_abs_diff(const codkit::Tensor& a, const codkit::Tensor& b) {
    double m = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i)
        m = std::max(m, std::abs(static_cast<double>(a[i]) - b[i]));
    return m;
}

inline double max_abs(const codkit::Tensor& a) {
    double m = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(static_cast<double>(a[i])));
    return m;
}

/// Binary mask with a filled rectangle.
inline codkit::Tensor rect_mask(int h, int w, int y0, int x0, int rh, int rw) {
    codkit::Tensor m(1, h, w);
    for (int y = y0; y < y0 + rh; ++y)
        for (int x = x0; x < x0 + rw; ++x) m.at(0, y, x) = 1.0f;
    return m;
}

/// Binary mask with a filled disk.
inline codkit::Tensor disk_mask(int h, int w, int cy, int cx, double r) {
    codkit::Tensor m(1, h, w);
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x)
            if ((y - cy) * (y - cy) + (x - cx) * (x - cx) <= r * r) m.at(0, y, x) = 1.0f;
    return m;
}

}  // namespace testutil
