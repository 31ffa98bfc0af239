#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "suspflow/ceiling.hpp"

namespace suspflow::dynamics {

using ceiling::TrigPolynomial;

/// Word over the alphabet {1, ..., ell}. The interval P(a) of a word is read
/// right to left: x in P(a) iff tau^i(x) lies in P(a_{n-i}).
class Word {
 public:
  Word() = default;
  Word(int ell, std::vector<std::uint8_t> letters);

  int ell() const noexcept { return ell_; }
  std::size_t size() const noexcept { return letters_.size(); }
  bool empty() const noexcept { return letters_.empty(); }
  int operator[](std::size_t i) const { return letters_[i]; }  // 0-based
  const std::vector<std::uint8_t>& letters() const noexcept { return letters_; }

  /// [a]_p, the first p letters.
  Word prefix(std::size_t p) const;
  Word concat(const Word& tail) const;
  std::string str() const;  // letters concatenated, '.' separated when ell > 9

  static Word repeat(int ell, int letter, std::size_t n);

  auto operator<=>(const Word&) const = default;

 private:
  int ell_ = 2;
  std::vector<std::uint8_t> letters_;
};

struct FlowPoint {
  double x = 0.0;
  double s = 0.0;
};

/// The set {(xi, eta) : |eta - center xi| <= half_width |xi|}.
struct Cone {
  double center_slope = 0.0;
  double half_width = 0.0;

  bool intersects(const Cone& other) const;
  bool contains_line(double slope) const;
};

struct Branch {
  Word word;
  FlowPoint preimage;
  double expansion = 1.0;  // ell^level
  double slope = 0.0;      // ds/dx(x, word; f)
  int level = 0;
  Cone cone;
};

/// tau(x) = ell x mod 1.
double tau(int ell, double x);
double tau_n(int ell, double x, int n);

/// Left end point x_a of P(a) and its width ell^-n.
std::pair<double, double> word_interval(const Word& a);

/// a(x): the unique y in P(a) with tau^n(y) = x.
double branch_point(const Word& a, double x);

/// Birkhoff sum along the inverse orbit of x selected by a:
/// order 0 -> sum_i f([a]_i(x)), 1 -> sum_i ell^-i f'(.), 2 -> sum_i ell^-2i f''(.).
double birkhoff(const TrigPolynomial& f, const Word& a, double x, int order);

/// Forward Birkhoff sum f^(n)(x) = sum_{i<n} f(tau^i x).
double forward_sum(const TrigPolynomial& f, double x, int n);

/// Tolerance below which a point is treated as sitting on the roof, and is
/// therefore identified with the floor point of the next level.
inline constexpr double kRoofTolerance = 1e-12;

/// n(x, T; f) = max{n >= 0 : f^(n)(x) <= T}.
int flow_count(const TrigPolynomial& f, double x, double T);

/// T^t_f(z).
FlowPoint time_t_map(const TrigPolynomial& f, FlowPoint z, double t);

inline constexpr std::size_t kDefaultBranchCap = std::size_t{1} << 24;

/// Every preimage of z under T^t, as words sorted lexicographically. Each branch
/// carries E = ell^n, slope = birkhoff(f, a, x, 1) and the cone of half-width
/// theta ell^-n. Throws resource-limit when the count would exceed `cap`; the
/// error detail reports the largest t guaranteed to stay within it.
std::vector<Branch> inverse_branches(const TrigPolynomial& f, FlowPoint z, double t, double theta,
                                     std::size_t cap = kDefaultBranchCap);

/// Visits branches without materializing Word objects. The callback receives
/// (letters, level, preimage y, s', slope). Same cap semantics as inverse_branches.
template <class Visit>
void for_each_branch(const TrigPolynomial& f, FlowPoint z, double t, std::size_t cap, Visit&& visit);

/// CSV with columns word,n,y,s_prime,E,slope at 17 significant digits.
std::string branches_csv(const std::vector<Branch>& branches);

}  // namespace suspflow::dynamics

#include "suspflow/detail/branch_walk.hpp"
