#pragma once

#include <complex>
#include <cstdint>
#include <optional>
#include <vector>

#include "suspflow/parallel.hpp"

namespace suspflow::aniso {

/// Closed double cone of lines through the origin whose slopes eta/xi lie in
/// [slope_lo, slope_hi]. Infinite slopes denote the vertical line; lo > hi
/// means the slope interval wraps through the vertical.
struct ConeSpec {
  double slope_lo = 0.0;
  double slope_hi = 0.0;

  /// Line angle of the lower edge in [0, pi) and the angular width in [0, pi).
  double start_angle() const;
  double width() const;
  bool contains(double xi, double eta) const;  // false at the origin
  bool intersects(const ConeSpec& other) const;
};

/// Angle in [0, pi) of the line through (xi, eta).
double line_angle(double xi, double eta);

/// (C+, C-, phi+, phi-). phi+ is 1 on C+, 0 on C-, and crosses over the two
/// angular gaps between them by the exponential smooth step.
class Polarization {
 public:
  Polarization(ConeSpec plus, ConeSpec minus);

  const ConeSpec& plus() const noexcept { return plus_; }
  const ConeSpec& minus() const noexcept { return minus_; }
  double phi_plus(double xi, double eta) const;
  double phi_minus(double xi, double eta) const { return 1.0 - phi_plus(xi, eta); }

 private:
  ConeSpec plus_;
  ConeSpec minus_;
  double gap_after_plus_ = 0.0;
  double gap_after_minus_ = 0.0;
};

/// a < b: the closure of R^2 minus b's plus cone lies inside the interior of
/// a's minus cone.
bool precedes(const Polarization& a, const Polarization& b);

enum class Sign { Plus, Minus };

/// Index rectangle [i0, i1) x [j0, j1) of grid samples.
struct Rect {
  int i0 = 0, i1 = 0, j0 = 0, j1 = 0;
};

/// Samples u(i h, j h) on an N x N periodic grid, row-major in i.
struct GridFunction2D {
  int n = 0;
  double h = 1.0;
  std::vector<double> values;
  std::optional<Rect> support;  // designated rectangle, checked by the norms

  GridFunction2D() = default;
  GridFunction2D(int n, double h);
  double& at(int i, int j) { return values[static_cast<std::size_t>(i) * n + j]; }
  double at(int i, int j) const { return values[static_cast<std::size_t>(i) * n + j]; }
  double l2_norm() const;
};

/// Physical frequency of DFT index i (2 pi k / (N h) with k the signed index).
double frequency(int index, int n, double h);

/// Largest dyadic level n with a mask that can be non-zero on the grid.
int max_level(double h);

/// psi_{Theta,n,sigma}(xi).
double mask_value(const Polarization& theta, int level, Sign sigma, double xi, double eta);

/// psi_{Theta,n,sigma} sampled on the DFT frequency grid (row-major).
std::vector<double> dyadic_mask(const Polarization& theta, int level, Sign sigma, int n, double h);

/// max over grid frequencies of |sum_{n,sigma} psi_{Theta,n,sigma} - 1|.
double partition_of_unity_error(const Polarization& theta, int n, double h);

struct NormParams {
  double p = 1.0;
  double q = 0.0;
};

inline NormParams strong_params() { return {1.0, 0.0}; }
inline NormParams weak_params(double eps) { return {1.0 - eps, -eps}; }

struct NormParts {
  double plus = 0.0;   // ||u||^+_{Theta,p}
  double minus = 0.0;  // ||u||^-_{Theta,q}
  double total = 0.0;
};

/// ||u||_{Theta,p,q} through the discrete Parseval identity.
NormParts aniso_norm(const GridFunction2D& u, const Polarization& theta, NormParams params,
                     const Exec& exec = {});

/// ||u||_{L^2} / ||u||_{Theta,1,0}.
double embedding_check(const GridFunction2D& u, const Polarization& theta, const Exec& exec = {});

/// Zeroes every Fourier coefficient outside `cone` (the origin included).
GridFunction2D restrict_to_cone(const GridFunction2D& u, const ConeSpec& cone);

/// max over n of |(psi_{n,-}(D) u, psi_{n,-}(D) v)_{L^2}|.
double transversal_orthogonality(const GridFunction2D& u, const GridFunction2D& v,
                                 const Polarization& theta_hat, const ConeSpec& cone_u,
                                 const ConeSpec& cone_v);

/// The same maximum without the cone preconditions.
double masked_inner_max(const GridFunction2D& u, const GridFunction2D& v, const Polarization& theta_hat);

/// |sum_{n,sigma} ||sqrt(psi)(D) u||^2 - ||u||^2| / ||u||^2.
double parseval_defect(const GridFunction2D& u, const Polarization& theta);

/// Max of ||u||_{Theta',1,0} / ||u||_{Theta,1,0} over the sample, for Theta' < Theta.
double ordering_constant(const std::vector<GridFunction2D>& sample, const Polarization& theta_prime,
                         const Polarization& theta);

/// Single Fourier mode cos(xi x + eta y) on the whole grid with integer DFT indices.
GridFunction2D single_mode(int n, double h, int kx, int ky);

/// Random smooth function supported in the central half of the grid: random
/// low-order modes times a compactly supported bump.
GridFunction2D random_function(int n, double h, std::uint64_t seed, int max_mode = 0);

}  // namespace suspflow::aniso
