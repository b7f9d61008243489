#pragma once

#include <complex>
#include <cstddef>
#include <vector>

namespace lznet::fft {

using cplx = std::complex<double>;

/// In-place DFT of arbitrary length. Forward is unnormalized
/// (X_k = sum_j x_j e^{-2pi i jk/n}); inverse applies the 1/n factor.
/// Radix-2 for powers of two, Bluestein otherwise.
void transform(std::vector<cplx>& a, bool inverse);

/// Spectrum of a real vector (unnormalized forward DFT).
std::vector<cplx> spectrum(const std::vector<double>& x);

/// Inverse DFT whose result is expected to be real. Imaginary residue
/// below 1e-9 is truncated; anything larger is an internal error.
std::vector<double> inverse_real(std::vector<cplx> spec);

}  // namespace lznet::fft
