#pragma once

#include <cstddef>
#include <vector>

#include "codkit/errors.hpp"

namespace codkit {

/// Dense [C,H,W] feature map, row-major with W fastest. Values are float32;
/// reductions and transforms accumulate in double.
class Tensor {
public:
    Tensor() = default;
    Tensor(int c, int h, int w, float fill = 0.0f)
        : c_(c), h_(h), w_(w), data_(static_cast<std::size_t>(c) * h * w, fill) {
        if (c <= 0 || h <= 0 || w <= 0) throw ShapeMismatch("tensor extents must be positive");
    }
    Tensor(int c, int h, int w, std::vector<float> data) : c_(c), h_(h), w_(w), data_(std::move(data)) {
        if (c <= 0 || h <= 0 || w <= 0) throw ShapeMismatch("tensor extents must be positive");
        if (data_.size() != static_cast<std::size_t>(c) * h * w)
            throw ShapeMismatch("data length does not match extents");
    }

    int channels() const { return c_; }
    int height() const { return h_; }
    int width() const { return w_; }
    std::size_t size() const { return data_.size(); }
    bool same_shape(const Tensor& o) const { return c_ == o.c_ && h_ == o.h_ && w_ == o.w_; }

    float& at(int c, int y, int x) { return data_[(static_cast<std::size_t>(c) * h_ + y) * w_ + x]; }
    float at(int c, int y, int x) const { return data_[(static_cast<std::size_t>(c) * h_ + y) * w_ + x]; }
    float& operator[](std::size_t i) { return data_[i]; }
    float operator[](std::size_t i) const { return data_[i]; }

    float* data() { return data_.data(); }
    const float* data() const { return data_.data(); }

    const float* channel(int c) const { return data_.data() + static_cast<std::size_t>(c) * h_ * w_; }
    float* channel(int c) { return data_.data() + static_cast<std::size_t>(c) * h_ * w_; }

private:
    int c_ = 0, h_ = 0, w_ = 0;
    std::vector<float> data_;
};

/// Cartesian complex field, one real and one imaginary plane of equal shape.
struct ComplexPlane {
    Tensor real;
    Tensor imag;

    ComplexPlane() = default;
    ComplexPlane(Tensor re, Tensor im) : real(std::move(re)), imag(std::move(im)) {
        if (!real.same_shape(imag)) throw ShapeMismatch("real/imag planes differ");
    }
};

/// Polar form of a complex field. `to_polar` guarantees amplitude >= 0 and
/// phase in (-pi, pi], with phase 0 where the amplitude is exactly zero.
struct Spectrum {
    Tensor amplitude;
    Tensor phase;

    Spectrum() = default;
    Spectrum(Tensor amp, Tensor ph) : amplitude(std::move(amp)), phase(std::move(ph)) {
        if (!amplitude.same_shape(phase)) throw ShapeMismatch("amplitude/phase planes differ");
    }
};

inline void require_same_shape(const Tensor& a, const Tensor& b, const char* what) {
    if (!a.same_shape(b)) throw ShapeMismatch(what);
}

}  // namespace codkit
