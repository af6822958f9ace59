#include "codkit/fft.hpp"

#include <cmath>
#include <complex>
#include <string>
#include <vector>

namespace codkit {

namespace {

constexpr double kPi = 3.14159265358979323846;

// Iterative radix-2 Cooley-Tukey over a stride-1 complex<double> span.
// `sign` is -1 for the forward transform, +1 for the inverse (unnormalized).
void fft1d(std::complex<double>* a, int n, int sign) {
    if (n == 1) return;
    // bit-reversal permutation
    for (int i = 1, j = 0; i < n; ++i) {
        int bit = n >> 1;
        for (; j & bit; bit >>= 1) j ^= bit;
        j ^= bit;
        if (i < j) std::swap(a[i], a[j]);
    }
    for (int len = 2; len <= n; len <<= 1) {
        const double ang = sign * 2.0 * kPi / len;
        const std::complex<double> wlen(std::cos(ang), std::sin(ang));
        for (int i = 0; i < n; i += len) {
            std::complex<double> w(1.0, 0.0);
            for (int k = 0; k < len / 2; ++k) {
                std::complex<double> u = a[i + k];
                std::complex<double> v = a[i + k + len / 2] * w;
                a[i + k] = u + v;
                a[i + k + len / 2] = u - v;
                w *= wlen;
            }
        }
    }
}

// In-place 2D transform of one H*W channel buffer: rows, then columns.
void fft2d_channel(std::vector<std::complex<double>>& buf, int h, int w, int sign) {
    for (int y = 0; y < h; ++y) fft1d(buf.data() + static_cast<std::size_t>(y) * w, w, sign);
    std::vector<std::complex<double>> col(h);
    for (int x = 0; x < w; ++x) {
        for (int y = 0; y < h; ++y) col[y] = buf[static_cast<std::size_t>(y) * w + x];
        fft1d(col.data(), h, sign);
        for (int y = 0; y < h; ++y) buf[static_cast<std::size_t>(y) * w + x] = col[y];
    }
}

void require_pow2_dims(int h, int w) {
    if (!is_power_of_two(h) || !is_power_of_two(w))
        throw NonPowerOfTwoDims(std::to_string(h) + "x" + std::to_string(w));
}

}  // namespace

bool is_power_of_two(int n) { return n > 0 && (n & (n - 1)) == 0; }

float wrap_angle(float a) {
    // the range boundary is pi at float precision; float(pi) rounds above the
    // double value, so the comparisons run against the float constant
    const float pi_f = 3.14159265358979323846f;
    if (a > -pi_f && a <= pi_f) return a;
    double w = std::fmod(static_cast<double>(a) + kPi, 2.0 * kPi);
    if (w <= 0.0) w += 2.0 * kPi;
    float r = static_cast<float>(w - kPi);
    if (r <= -pi_f || r > pi_f) r = pi_f;  // fold the open end onto +pi
    return r;
}

ComplexPlane fft2(const Tensor& x) {
    const int c = x.channels(), h = x.height(), w = x.width();
    require_pow2_dims(h, w);
    Tensor re(c, h, w), im(c, h, w);
#pragma omp parallel for schedule(static)
    for (int ch = 0; ch < c; ++ch) {
        std::vector<std::complex<double>> buf(static_cast<std::size_t>(h) * w);
        const float* src = x.channel(ch);
        for (std::size_t i = 0; i < buf.size(); ++i) buf[i] = std::complex<double>(src[i], 0.0);
        fft2d_channel(buf, h, w, -1);
        float* pre = re.channel(ch);
        float* pim = im.channel(ch);
        for (std::size_t i = 0; i < buf.size(); ++i) {
            pre[i] = static_cast<float>(buf[i].real());
            pim[i] = static_cast<float>(buf[i].imag());
        }
    }
    return ComplexPlane(std::move(re), std::move(im));
}

Tensor ifft2(const ComplexPlane& c, double max_imag_tol) {
    const int ch_n = c.real.channels(), h = c.real.height(), w = c.real.width();
    require_pow2_dims(h, w);
    Tensor out(ch_n, h, w);
    const double norm = 1.0 / (static_cast<double>(h) * w);
    double max_resid = 0.0;
#pragma omp parallel for schedule(static) reduction(max : max_resid)
    for (int ch = 0; ch < ch_n; ++ch) {
        std::vector<std::complex<double>> buf(static_cast<std::size_t>(h) * w);
        const float* pre = c.real.channel(ch);
        const float* pim = c.imag.channel(ch);
        for (std::size_t i = 0; i < buf.size(); ++i) buf[i] = std::complex<double>(pre[i], pim[i]);
        fft2d_channel(buf, h, w, +1);
        float* dst = out.channel(ch);
        for (std::size_t i = 0; i < buf.size(); ++i) {
            dst[i] = static_cast<float>(buf[i].real() * norm);
            double resid = std::abs(buf[i].imag() * norm);
            if (resid > max_resid) max_resid = resid;
        }
    }
    if (max_resid > max_imag_tol)
        throw ResidualImaginary("max |imag| = " + std::to_string(max_resid));
    return out;
}

Spectrum to_polar(const ComplexPlane& c) {
    Tensor amp(c.real.channels(), c.real.height(), c.real.width());
    Tensor ph(c.real.channels(), c.real.height(), c.real.width());
    const std::size_t n = amp.size();
#pragma omp parallel for schedule(static)
    for (long long i = 0; i < static_cast<long long>(n); ++i) {
        const double re = c.real[i], im = c.imag[i];
        amp[i] = static_cast<float>(std::sqrt(re * re + im * im));
        if (re == 0.0 && im == 0.0) {
            ph[i] = 0.0f;
        } else {
            ph[i] = wrap_angle(static_cast<float>(std::atan2(im, re)));
        }
    }
    return Spectrum(std::move(amp), std::move(ph));
}

ComplexPlane from_polar(const Tensor& amplitude, const Tensor& phase) {
    require_same_shape(amplitude, phase, "from_polar amplitude vs phase");
    Tensor re(amplitude.channels(), amplitude.height(), amplitude.width());
    Tensor im(amplitude.channels(), amplitude.height(), amplitude.width());
    const std::size_t n = re.size();
#pragma omp parallel for schedule(static)
    for (long long i = 0; i < static_cast<long long>(n); ++i) {
        const double a = amplitude[i], p = phase[i];
        re[i] = static_cast<float>(a * std::cos(p));
        im[i] = static_cast<float>(a * std::sin(p));
    }
    return ComplexPlane(std::move(re), std::move(im));
}

ComplexPlane from_polar(const Spectrum& s) { return from_polar(s.amplitude, s.phase); }

ComplexPlane hermitian_symmetrize(const ComplexPlane& c) {
    const int cn = c.real.channels(), h = c.real.height(), w = c.real.width();
    Tensor re(cn, h, w), im(cn, h, w);
#pragma omp parallel for schedule(static)
    for (int ch = 0; ch < cn; ++ch) {
        for (int y = 0; y < h; ++y) {
            const int ry = (h - y) % h;
            for (int x = 0; x < w; ++x) {
                const int rx = (w - x) % w;
                re.at(ch, y, x) = 0.5f * (c.real.at(ch, y, x) + c.real.at(ch, ry, rx));
                im.at(ch, y, x) = 0.5f * (c.imag.at(ch, y, x) - c.imag.at(ch, ry, rx));
            }
        }
    }
    return ComplexPlane(std::move(re), std::move(im));
}

}  // namespace codkit
