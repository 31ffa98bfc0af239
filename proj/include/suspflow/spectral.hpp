#pragma once

#include <complex>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Sparse>

#include "suspflow/ceiling.hpp"
#include "suspflow/parallel.hpp"
#include "suspflow/transversality.hpp"

namespace suspflow::spectral {

using ceiling::TrigPolynomial;

inline constexpr const char* kDiscretizedSpectrumCaveat =
    "discretized spectrum: eigenvalues of an Ulam matrix, not resonances on the anisotropic space";

/// Ties a derived quantity to the ceiling and time it was computed from.
struct SourceTag {
  std::string ceiling;
  double t = 0.0;
  bool operator==(const SourceTag&) const = default;
};

/// Box (i, j): x in [i/nx, (i+1)/nx), s / f(x) in [j/ns, (j+1)/ns). The boxes
/// tile X_f exactly; box measure is (1/ns) * integral of f over the column.
class BoxPartition {
 public:
  BoxPartition(const TrigPolynomial& f, int nx, int ns);

  int nx() const noexcept { return nx_; }
  int ns() const noexcept { return ns_; }
  std::size_t size() const noexcept { return static_cast<std::size_t>(nx_) * ns_; }
  std::size_t index_of(double x, double s) const;
  std::size_t index(int i, int j) const { return static_cast<std::size_t>(i) * ns_ + j; }
  /// Lebesgue measure of each box (5-point Gauss-Legendre per column).
  const std::vector<double>& measures() const noexcept { return measure_; }
  double total_measure() const;

 private:
  TrigPolynomial f_;
  int nx_;
  int ns_;
  std::vector<double> measure_;
};

enum class Sampling { Lattice, MonteCarlo };

struct UlamOperator {
  Eigen::SparseMatrix<double> matrix;  // column-stochastic: column j = source box j
  int nx = 0;
  int ns = 0;
  int points_per_box = 0;
  std::uint64_t seed = 0;
  Sampling sampling = Sampling::Lattice;
  SourceTag tag;
};

/// Entry (i, j) is the fraction of sample points of box j mapped into box i by
/// T^t. Lattice mode uses a rank-1 (Korobov) lattice inside each box.
UlamOperator build_ulam(const TrigPolynomial& f, double t, int nx, int ns, int points_per_box,
                        std::uint64_t seed = 0, Sampling sampling = Sampling::Lattice,
                        const Exec& exec = {});

struct SpectrumReport {
  std::vector<std::complex<double>> eigenvalues;  // by decreasing modulus
  std::vector<int> multiplicity;                  // cluster size of each eigenvalue
  std::optional<double> essential_bound;          // m(f,t)^{1/2}
  std::string method;                             // "dense" or "arnoldi"
  int iterations = 0;
  std::string caveat = kDiscretizedSpectrumCaveat;
  SourceTag tag;
};

/// Dense eigensolver up to `dense_limit` boxes, restarted Arnoldi above.
SpectrumReport spectrum(const UlamOperator& op, int k, std::size_t dense_limit = 2048);

/// Eigenvector of the eigenvalue closest to 1 (dense route), normalized to sum 1.
std::vector<double> leading_eigenvector(const UlamOperator& op);

/// Closed-form observables on X_f:
///   sum_i coeff_i * X_i(2 pi kx_i x) * S_i(2 pi ks_i s)
/// with X_i, S_i in {one, cos, sin}, optionally multiplied by a smooth cutoff
/// vanishing within `margin` of s = 0 and s = f(x).
struct Observable {
  enum class Trig { One, Cos, Sin };
  struct Term {
    double coeff = 1.0;
    int kx = 0;
    Trig fx = Trig::One;
    double ks = 0.0;
    Trig fs = Trig::One;
  };
  std::vector<Term> terms;
  bool cutoff = false;
  double margin = 0.0;  // filled from 0.05 min f when cutoff is requested
  bool center = false;  // subtract the m_f-mean before use
  std::string id = "observable";

  double operator()(const TrigPolynomial& f, double x, double s) const;
  static Observable constant(double c = 1.0);
};

struct CorrelationCurve {
  std::vector<std::pair<double, double>> samples;  // (t, Cor_t)
  std::string psi_id;
  std::string phi_id;
  SourceTag tag;
};

/// Cor_t(psi, phi) = int psi * phi o T^t dm - int phi dm * int psi dm with m the
/// normalized Lebesgue measure on X_f, by midpoint quadrature on an nx x ns grid.
CorrelationCurve correlation(const TrigPolynomial& f, const Observable& psi, const Observable& phi,
                             const std::vector<double>& t_list, int nx, int ns,
                             const Exec& exec = {});

/// Mean of an observable under m_f on the same quadrature grid.
double observable_mean(const TrigPolynomial& f, const Observable& obs, int nx, int ns);

struct DecayFit {
  double rate = 1.0;
  double residual = 0.0;
  std::size_t used = 0;
  SourceTag tag;
};

/// exponent_fit on |Cor_t|, skipping exact zeros.
DecayFit decay_fit(const CorrelationCurve& curve);

struct ResonanceComparison {
  double lambda2_abs = 0.0;
  double fitted_rate = 0.0;
  double m_bound = 0.0;  // m(f,t)^{1/(2t)}
  double slack = 0.0;
  bool fit_within_bound = false;  // advisory only
  std::string caveat = kDiscretizedSpectrumCaveat;
};

ResonanceComparison resonance_compare(const SpectrumReport& spec, const DecayFit& fit,
                                      const transversality::TransversalityEstimate& m_estimate,
                                      const SourceTag& m_tag, double slack = 0.05);

}  // namespace suspflow::spectral
