#include "suspflow/dynamics.hpp"

#include <cmath>
#include <cstdio>
#include <sstream>

namespace suspflow::dynamics {

Word::Word(int ell, std::vector<std::uint8_t> letters) : ell_(ell), letters_(std::move(letters)) {
  if (ell_ < 2) fail(ErrorCode::InvalidArgument, "ell must be >= 2");
  for (auto c : letters_)
    if (c < 1 || c > ell_) fail(ErrorCode::InvalidArgument, "word letter outside 1..ell");
}

Word Word::prefix(std::size_t p) const {
  if (p > letters_.size()) fail(ErrorCode::InvalidArgument, "prefix longer than word");
  return Word(ell_, std::vector<std::uint8_t>(letters_.begin(), letters_.begin() + p));
}

Word Word::concat(const Word& tail) const {
  if (tail.ell_ != ell_) fail(ErrorCode::InvalidArgument, "words over different alphabets");
  auto joined = letters_;
  joined.insert(joined.end(), tail.letters_.begin(), tail.letters_.end());
  return Word(ell_, std::move(joined));
}

std::string Word::str() const {
  std::string out;
  for (std::size_t i = 0; i < letters_.size(); ++i) {
    if (ell_ > 9 && i > 0) out += '.';
    out += std::to_string(letters_[i]);
  }
  return out;
}

Word Word::repeat(int ell, int letter, std::size_t n) {
  return Word(ell, std::vector<std::uint8_t>(n, static_cast<std::uint8_t>(letter)));
}

bool Cone::intersects(const Cone& other) const {
  return std::abs(center_slope - other.center_slope) <= half_width + other.half_width;
}

bool Cone::contains_line(double slope) const {
  return std::abs(slope - center_slope) <= half_width;
}

double tau(int ell, double x) {
  const double y = ell * x;
  double r = y - std::floor(y);
  return r >= 1.0 ? 0.0 : r;
}

double tau_n(int ell, double x, int n) {
  for (int i = 0; i < n; ++i) x = tau(ell, x);
  return x;
}

std::pair<double, double> word_interval(const Word& a) {
  if (a.empty()) fail(ErrorCode::InvalidArgument, "word_interval needs a nonempty word");
  // Digits of x_a in base ell are a_n - 1, a_{n-1} - 1, ..., a_1 - 1.
  double left = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) left = (left + (a[i] - 1)) / a.ell();
  return {left, std::pow(static_cast<double>(a.ell()), -static_cast<double>(a.size()))};
}

double branch_point(const Word& a, double x) {
  double y = x;
  for (std::size_t i = 0; i < a.size(); ++i) y = (y + (a[i] - 1)) / a.ell();
  return y;
}

double birkhoff(const TrigPolynomial& f, const Word& a, double x, int order) {
  if (order < 0 || order > 2) fail(ErrorCode::InvalidArgument, "birkhoff order must be 0, 1 or 2");
  if (a.ell() != f.ell()) fail(ErrorCode::InvalidArgument, "word alphabet does not match ell");
  const double base = order == 0 ? 1.0 : std::pow(static_cast<double>(f.ell()), -order);
  double weight = 1.0;
  double y = x;
  double sum = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    y = (y + (a[i] - 1)) / a.ell();  // [a]_{i+1}(x)
    weight *= base;
    sum += weight * f.eval(y, order);
  }
  return sum;
}

double forward_sum(const TrigPolynomial& f, double x, int n) {
  double sum = 0.0;
  for (int i = 0; i < n; ++i) {
    sum += f(x);
    x = tau(f.ell(), x);
  }
  return sum;
}

int flow_count(const TrigPolynomial& f, double x, double T) {
  if (T < 0.0) return 0;
  int n = 0;
  double sum = 0.0;
  for (;;) {
    const double next = sum + f(x);
    if (next > T + kRoofTolerance) return n;
    sum = next;
    x = tau(f.ell(), x);
    ++n;
  }
}

FlowPoint time_t_map(const TrigPolynomial& f, FlowPoint z, double t) {
  if (t < 0.0) fail(ErrorCode::InvalidArgument, "time must be non-negative");
  const double total = z.s + t;
  double x = z.x;
  double sum = 0.0;
  for (;;) {
    const double h = f(x);
    if (sum + h > total + kRoofTolerance) break;
    sum += h;
    x = tau(f.ell(), x);
  }
  return {x, std::max(0.0, total - sum)};
}

namespace detail {

double admissible_time(const TrigPolynomial& f, double s, std::size_t cap) {
  double fmin = f(0.0);
  for (int i = 1; i < 1024; ++i) fmin = std::min(fmin, f(i / 1024.0));
  // Every path terminates by level ceil((t - s) / min f), so ell^level <= cap
  // holds whenever t - s <= min f * floor(log_ell cap).
  int levels = 0;
  for (std::size_t c = 1; c * static_cast<std::size_t>(f.ell()) <= cap; c *= f.ell()) ++levels;
  return s + 0.999 * std::max(0.0, fmin) * levels;
}

}  // namespace detail

std::vector<Branch> inverse_branches(const TrigPolynomial& f, FlowPoint z, double t, double theta,
                                     std::size_t cap) {
  if (theta < 0.0) fail(ErrorCode::InvalidArgument, "cone aperture must be non-negative");
  std::vector<Branch> out;
  const int ell = f.ell();
  for_each_branch(f, z, t, cap,
                  [&](const std::vector<std::uint8_t>& letters, int level, double y, double s_prime,
                      double slope) {
                    Branch b;
                    b.word = Word(ell, letters);
                    b.preimage = {y, s_prime};
                    b.level = level;
                    b.expansion = std::pow(static_cast<double>(ell), level);
                    b.slope = slope;
                    b.cone = {slope, theta / b.expansion};
                    out.push_back(std::move(b));
                  });
  return out;
}

std::string branches_csv(const std::vector<Branch>& branches) {
  std::ostringstream os;
  os << "word,n,y,s_prime,E,slope\n";
  char buf[160];
  for (const auto& b : branches) {
    std::snprintf(buf, sizeof buf, ",%d,%.17g,%.17g,%.17g,%.17g\n", b.level, b.preimage.x,
                  b.preimage.s, b.expansion, b.slope);
    os << b.word.str() << buf;
  }
  return os.str();
}

}  // namespace suspflow::dynamics
