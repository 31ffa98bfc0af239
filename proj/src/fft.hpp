#pragma once

#include <complex>
#include <vector>

namespace suspflow::fft {

using cplx = std::complex<double>;

/// Unnormalized real-to-complex DFT; returns n/2 + 1 coefficients.
std::vector<cplx> forward_real(const std::vector<double>& samples);
/// Inverse of forward_real including the 1/n factor.
std::vector<double> inverse_real(const std::vector<cplx>& coeffs, std::size_t n);

/// Row-major n x n complex DFTs. forward is unnormalized, inverse includes 1/n^2.
std::vector<cplx> forward_2d(const std::vector<cplx>& data, std::size_t n);
std::vector<cplx> inverse_2d(const std::vector<cplx>& data, std::size_t n);

}  // namespace suspflow::fft
