#pragma once

#include "codkit/tensor.hpp"

namespace codkit {

/// Per-channel 2D DFT, unnormalized forward convention. H and W must each be
/// a power of two (radix-2 transform).
ComplexPlane fft2(const Tensor& x);

/// Inverse of fft2 with 1/(H*W) normalization. The imaginary residue is
/// checked against `max_imag_tol` and discarded; a larger residue means the
/// input was not conjugate-symmetric and raises ResidualImaginary.
Tensor ifft2(const ComplexPlane& c, double max_imag_tol = 1e-4);

/// amplitude = sqrt(re^2+im^2), phase = atan2(im, re) wrapped into (-pi, pi],
/// phase 0 where both parts are exactly zero.
Spectrum to_polar(const ComplexPlane& c);

/// re = A*cos(P), im = A*sin(P). Round-trips to_polar within 1e-6.
ComplexPlane from_polar(const Spectrum& s);

/// Same reconstruction from raw planes; accepts amplitudes of either sign so
/// callers can feed conv-processed amplitude maps without re-validating them.
ComplexPlane from_polar(const Tensor& amplitude, const Tensor& phase);

/// Enforce X(u,v) = conj(X(-u,-v)) per channel by averaging each bin with the
/// conjugate of its point reflection. Inverse transforms of the result are
/// real up to rounding. A no-op on spectra of real inputs.
ComplexPlane hermitian_symmetrize(const ComplexPlane& c);

/// Wrap an angle into (-pi, pi].
float wrap_angle(float a);

bool is_power_of_two(int n);

}  // namespace codkit
