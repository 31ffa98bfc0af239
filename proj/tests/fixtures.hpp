#pragma once

#include <cmath>
#include <numbers>

#include "suspflow/ceiling.hpp"

namespace fixtures {

using suspflow::ceiling::Harmonic;
using suspflow::ceiling::TrigPolynomial;

inline constexpr double pi = std::numbers::pi;

inline TrigPolynomial one(int ell = 2) { return TrigPolynomial::constant(ell, 1.0); }

// 1 + 0.2 sin(2 pi x)
inline TrigPolynomial sine(int ell = 2) { return {ell, 1.0, {{1, 0.0, 0.2}}}; }

// 1 + 0.3 sin(2 pi x) + 0.1 cos(4 pi x)
inline TrigPolynomial generic() { return {2, 1.0, {{1, 0.0, 0.3}, {2, 0.1, 0.0}}}; }

// 1 + 0.05 (sin 4 pi x - sin 2 pi x) = Psi(2x) - Psi(x) + 1 with Psi = 0.05 sin 2 pi x
inline TrigPolynomial coboundary() { return {2, 1.0, {{1, 0.0, -0.05}, {2, 0.0, 0.05}}}; }

// 1 + 0.2 sin(2 pi x) + 0.05 cos(6 pi x)
inline TrigPolynomial generic_b() { return {2, 1.0, {{1, 0.0, 0.2}, {3, 0.05, 0.0}}}; }

}  // namespace fixtures
