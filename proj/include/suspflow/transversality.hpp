#pragma once

#include <utility>
#include <vector>

#include "suspflow/ceiling.hpp"
#include "suspflow/dynamics.hpp"
#include "suspflow/parallel.hpp"

namespace suspflow::transversality {

using ceiling::CeilingClass;
using ceiling::TrigPolynomial;
using dynamics::FlowPoint;

struct GridShape {
  int nx = 64;
  int ns = 8;
  int nl = 16;
};

/// Where on the sampled grid the maximum was attained.
struct Argmax {
  FlowPoint z;
  bool on_section = false;  // s == 0
};

struct TransversalityEstimate {
  double t = 0.0;
  double m_value = 0.0;  // grid maximum of the non-transversal branch weight
  double m_upper = 0.0;  // same with overlap tests widened by 2 theta_K h
  double n_value = 0.0;
  double n_upper = 0.0;
  GridShape grid;
  double slack = 0.0;    // m_upper - m_value
  Argmax m_argmax;
};

enum class LambdaMethod { Grid, Periodic };

struct LambdaMinEstimate {
  LambdaMethod method = LambdaMethod::Periodic;
  double value = 0.0;
  double horizon = 0.0;
  double beta_max = 0.0;  // largest Birkhoff average of f found
};

struct ExponentFit {
  double rate = 1.0;          // exp(slope of log value against t)
  double log_residual = 0.0;  // RMS residual of the log fit
};

/// Maximum over branches w of the summed 1/E over branches whose cones meet the
/// cone of w (w itself always included). `widen` is added to every overlap test.
double m_sum_at(const TrigPolynomial& f, FlowPoint z, double t, double theta_f, double widen = 0.0,
                std::size_t cap = dynamics::kDefaultBranchCap);

/// Maximum over line slopes sigma of the summed 1/E over branches whose widened
/// cone (half-width 2 theta_f ell^-n + widen) contains sigma. Exact: the
/// maximum of a sum of interval indicators is attained at an interval endpoint.
/// `extra_candidates` uniformly spaced slopes are also probed.
double n_sum_at(const TrigPolynomial& f, FlowPoint z, double t, double theta_f, double widen = 0.0,
                int extra_candidates = 0, std::size_t cap = dynamics::kDefaultBranchCap);

/// Grid points of X_f: nx columns at x = i/nx, ns fiber points at s = f(x) j/ns.
std::vector<FlowPoint> flow_grid(const TrigPolynomial& f, int nx, int ns);

TransversalityEstimate m_of_t(const TrigPolynomial& f, const CeilingClass& cls, double t, int nx,
                              int ns, bool certified, const Exec& exec = {});

/// n(f,t) on the grid; also fills n_upper (widened by 2 theta_K h).
std::pair<double, double> n_of_t(const TrigPolynomial& f, const CeilingClass& cls, double t, int nx,
                                 int ns, int nl, const Exec& exec = {});

LambdaMinEstimate lambda_min(const TrigPolynomial& f, LambdaMethod method, double horizon,
                             int nx = 256, int ns = 8);

ExponentFit exponent_fit(const std::vector<std::pair<double, double>>& samples);

}  // namespace suspflow::transversality
