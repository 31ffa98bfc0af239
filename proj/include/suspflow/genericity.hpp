#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "suspflow/ceiling.hpp"
#include "suspflow/dynamics.hpp"
#include "suspflow/parallel.hpp"

namespace suspflow::genericity {

using ceiling::CeilingClass;
using ceiling::TrigPolynomial;
using dynamics::Word;

/// Constant chain of the genericity argument. Only `p` enters the probe; the
/// remaining constants are checked for consistency and reported.
struct GenericityParams {
  double rho = 1.0;
  double gamma = 1.9;
  double alpha = 1.8;
  double beta = 1.7;
  int p = 3;
  int nu = 6;
  int N = 104;

  /// delta = (log gamma - log alpha) / (log ell - log alpha).
  double delta(int ell) const;
  /// Human-readable list of violated invariants (empty when consistent).
  std::vector<std::string> violations(int ell) const;
};

/// One direction phi of a perturbation family: a C-infinity bump centred at
/// `center` with support radius `radius` on the circle. Its derivative equals
/// `slope_plateau` within radius/3 of the centre, turns negative further out
/// and integrates to zero, so phi vanishes outside the support.
struct Bump {
  double center = 0.0;
  double radius = 0.0;
  double slope_plateau = 1.0;

  double derivative(double x) const;
  double value(double x) const;  // adaptive Gauss-Kronrod on the derivative
  double max_abs_derivative() const;
  bool operator==(const Bump&) const = default;
};

/// m bumps centred at (j + 1/2)/m with radius 0.45/m: a family whose
/// directions cover the whole circle.
std::vector<Bump> uniform_bumps(int m, double slope_plateau);

/// f_t = f + sum_i t_i phi_i over the box [-epsilon, epsilon]^m.
class PerturbationFamily {
 public:
  /// Checks positivity of f_t on the whole parameter box; domain-violation if not.
  PerturbationFamily(TrigPolynomial base, std::vector<Bump> directions, double epsilon);

  const TrigPolynomial& base() const noexcept { return base_; }
  const std::vector<Bump>& directions() const noexcept { return directions_; }
  double epsilon() const noexcept { return epsilon_; }
  std::size_t size() const noexcept { return directions_.size(); }

  /// ds/dx(x, b; f_t).
  double slope(const Word& b, double x, const std::vector<double>& t) const;

 private:
  TrigPolynomial base_;
  std::vector<Bump> directions_;
  double epsilon_;
};

struct SlopeClusterReport {
  int n = 0;
  Word base_word;       // c
  double x_c = 0.0;     // left end point of P(c)
  double window = 0.0;  // window_factor theta_K ell^-n
  std::size_t max_cluster = 0;
  std::vector<Word> cluster_words;  // lexicographic
};

/// Largest set of length-n words whose slopes at x_c fit in one window of
/// width window_factor * theta_K * ell^-n anchored at a sorted slope value.
SlopeClusterReport slope_clusters(const TrigPolynomial& f, const CeilingClass& cls, int n,
                                  const Word& c, double window_factor = 8.0);

struct ClusterGrowth {
  std::vector<std::pair<int, std::size_t>> counts;  // (n, max_cluster)
  double rate = 0.0;      // exp of the fitted slope of log max_cluster against n
  double residual = 0.0;
};

/// slope_clusters over n in [n_lo, n_hi] at c = 1^n, fitted as max_cluster ~ rate^n.
ClusterGrowth cluster_growth(const TrigPolynomial& f, const CeilingClass& cls, int n_lo, int n_hi,
                             double window_factor = 8.0);

/// Linear part of G_{x,sigma}: row i-1 holds d/dt_j of the slope difference
/// between sigma[i] and sigma[0]. Depends only on the directions.
Eigen::MatrixXd g_matrix(double x, const std::vector<Word>& sigma, const PerturbationFamily& family);
Eigen::MatrixXd g_matrix(double x, const std::vector<Word>& sigma, const std::vector<Bump>& directions);

/// sqrt(det(L L^T)) when L has full row rank, 0 otherwise.
double jacobian(const Eigen::MatrixXd& L);

struct BumpFamily {
  double y = 0.0;
  int nu = 0;
  int mu = 0;
  double eps0 = 0.0;
  double scale = 1.0;           // 2 after the rescaling that lifts Jac from 1/2 to 1
  std::vector<Word> words;      // A^nu, lexicographic; bumps[i] belongs to words[i]
  std::vector<Bump> bumps;
  std::vector<std::pair<std::size_t, std::size_t>> order;  // (a, b) with a < b, a != b
  std::vector<int> predecessors;  // number of b with b < a (a itself included)
};

/// Smallest mu > nu with 2 ell^(nu - mu) / (1 - 1/ell) <= 1 / (4p).
int default_mu(int ell, int nu, int p);

/// Largest eps0 for which tau^i(U_b) meets U_a (1 <= i <= mu) only when a < b.
double max_admissible_eps0(int ell, double y, int nu, int mu);

/// Bumps phi_a on U_a(eps0) with derivative scale * ell^nu on U_a(eps0/3).
/// Invalid-argument carrying the maximal admissible eps0 when eps0 is too large.
BumpFamily bump_family(int ell, double y, int nu, double eps0, int mu, double scale = 2.0);

/// Maximal elements of `subset` (indices into family.words) under the order.
std::vector<std::size_t> maximal_elements(const BumpFamily& family,
                                          const std::vector<std::size_t>& subset);

struct ProbeResult {
  std::size_t samples = 0;
  std::size_t hits = 0;
  std::size_t jac_rejected = 0;  // samples whose (c, sigma) had Jac < 1
  std::size_t accepted = 0;      // samples - jac_rejected
  double fraction = 0.0;         // hits / accepted (0 when nothing was accepted)
  double ci_low = 0.0;   // Wilson 95% interval over the accepted samples
  double ci_high = 0.0;
  double window = 0.0;   // 10 theta_K ell^-n
};

/// Monte Carlo estimate of the parameter measure of {t : f_t in Y(n, c, sigma)}
/// over sampled combinations (c, sigma) with Jac(G_{x_c,sigma}) >= 1. Sample k
/// draws t, c and sigma from a splitmix64 stream keyed by (seed, k). With no
/// directions the Jac filter is vacuous and the event reduces to f in Y.
ProbeResult bad_set_probe(const PerturbationFamily& family, const CeilingClass& cls, int n,
                          std::size_t samples, const GenericityParams& params, std::uint64_t seed,
                          const Exec& exec = {});

/// Wilson score interval for k successes in n trials.
std::pair<double, double> wilson_interval(std::size_t k, std::size_t n, double z = 1.959963984540054);

/// Deterministic counter-based generator: state = mix(seed ^ mix(index + 1)).
class SplitMix64 {
 public:
  SplitMix64(std::uint64_t seed, std::uint64_t index);
  std::uint64_t next();
  double uniform();  // [0, 1) with 53 random bits

 private:
  std::uint64_t state_;
};

}  // namespace suspflow::genericity
