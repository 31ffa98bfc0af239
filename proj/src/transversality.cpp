#include "suspflow/transversality.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>

#include "suspflow/error.hpp"

namespace suspflow::transversality {

namespace {

struct LevelSlope {
  int level;
  double slope;
};

std::vector<LevelSlope> collect(const TrigPolynomial& f, FlowPoint z, double t, std::size_t cap) {
  std::vector<LevelSlope> out;
  dynamics::for_each_branch(f, z, t, cap,
                            [&](const std::vector<std::uint8_t>&, int level, double, double,
                                double slope) { out.push_back({level, slope}); });
  return out;
}

// Slopes bucketed by level, each bucket sorted.
struct LevelBuckets {
  std::vector<int> levels;
  std::vector<std::vector<double>> slopes;
  std::vector<double> weight;  // ell^-level
};

LevelBuckets bucket(const std::vector<LevelSlope>& branches, int ell) {
  std::map<int, std::vector<double>> by_level;
  for (const auto& b : branches) by_level[b.level].push_back(b.slope);
  LevelBuckets out;
  for (auto& [level, slopes] : by_level) {
    std::sort(slopes.begin(), slopes.end());
    out.levels.push_back(level);
    out.weight.push_back(std::pow(static_cast<double>(ell), -level));
    out.slopes.push_back(std::move(slopes));
  }
  return out;
}

double m_from(const std::vector<LevelSlope>& branches, int ell, double theta, double widen) {
  const LevelBuckets buckets = bucket(branches, ell);
  double best = 0.0;
  for (std::size_t wi = 0; wi < buckets.levels.size(); ++wi) {
    const double w_weight = buckets.weight[wi];
    const auto& w_slopes = buckets.slopes[wi];
    for (std::size_t j = 0; j < w_slopes.size(); ++j) {
      if (j > 0 && w_slopes[j] == w_slopes[j - 1]) continue;  // identical cone, identical sum
      const double sw = w_slopes[j];
      double sum = 0.0;
      for (std::size_t zi = 0; zi < buckets.levels.size(); ++zi) {
        const double radius = theta * (buckets.weight[zi] + w_weight) + widen;
        const auto& zs = buckets.slopes[zi];
        const auto lo = std::lower_bound(zs.begin(), zs.end(), sw - radius);
        const auto hi = std::upper_bound(zs.begin(), zs.end(), sw + radius);
        sum += static_cast<double>(hi - lo) * buckets.weight[zi];
      }
      best = std::max(best, sum);
    }
  }
  return best;
}

double n_from(const std::vector<LevelSlope>& branches, int ell, double theta, double widen,
              int extra_candidates) {
  struct Event {
    double pos;
    int kind;  // 0 = open, 1 = close; opens sort first at equal positions
    double weight;
  };
  std::vector<Event> events;
  events.reserve(2 * branches.size());
  double lo_all = std::numeric_limits<double>::infinity();
  double hi_all = -lo_all;
  for (const auto& b : branches) {
    const double weight = std::pow(static_cast<double>(ell), -b.level);
    const double radius = 2.0 * theta * weight + widen;
    events.push_back({b.slope - radius, 0, weight});
    events.push_back({b.slope + radius, 1, weight});
    lo_all = std::min(lo_all, b.slope - radius);
    hi_all = std::max(hi_all, b.slope + radius);
  }
  std::sort(events.begin(), events.end(), [](const Event& a, const Event& b) {
    return a.pos < b.pos || (a.pos == b.pos && a.kind < b.kind);
  });
  double running = 0.0;
  double best = 0.0;
  for (const auto& e : events) {
    if (e.kind == 0) {
      running += e.weight;
      best = std::max(best, running);
    } else {
      running -= e.weight;
    }
  }
  for (int c = 0; c < extra_candidates; ++c) {
    const double sigma =
        extra_candidates == 1 ? lo_all : lo_all + (hi_all - lo_all) * c / (extra_candidates - 1);
    double sum = 0.0;
    for (const auto& b : branches) {
      const double weight = std::pow(static_cast<double>(ell), -b.level);
      if (std::abs(sigma - b.slope) <= 2.0 * theta * weight + widen) sum += weight;
    }
    best = std::max(best, sum);
  }
  return best;
}

}  // namespace

double m_sum_at(const TrigPolynomial& f, FlowPoint z, double t, double theta_f, double widen,
                std::size_t cap) {
  return m_from(collect(f, z, t, cap), f.ell(), theta_f, widen);
}

double n_sum_at(const TrigPolynomial& f, FlowPoint z, double t, double theta_f, double widen,
                int extra_candidates, std::size_t cap) {
  return n_from(collect(f, z, t, cap), f.ell(), theta_f, widen, extra_candidates);
}

std::vector<FlowPoint> flow_grid(const TrigPolynomial& f, int nx, int ns) {
  std::vector<FlowPoint> pts;
  pts.reserve(static_cast<std::size_t>(nx) * ns);
  for (int i = 0; i < nx; ++i) {
    const double x = static_cast<double>(i) / nx;
    const double height = f(x);
    for (int j = 0; j < ns; ++j) pts.push_back({x, height * j / ns});
  }
  return pts;
}

TransversalityEstimate m_of_t(const TrigPolynomial& f, const CeilingClass& cls, double t, int nx,
                              int ns, bool certified, const Exec& exec) {
  if (nx < 1 || ns < 1) fail(ErrorCode::InvalidArgument, "grid sizes must be positive");
  const auto pts = flow_grid(f, nx, ns);
  const double widen = certified ? 2.0 * cls.theta_K / nx : 0.0;
  std::vector<double> value(pts.size());
  std::vector<double> upper(pts.size());
  parallel_for(exec, pts.size(), [&](std::size_t i) {
    const auto branches = collect(f, pts[i], t, dynamics::kDefaultBranchCap);
    value[i] = m_from(branches, f.ell(), cls.theta_f, 0.0);
    upper[i] = certified ? m_from(branches, f.ell(), cls.theta_f, widen) : value[i];
  });
  TransversalityEstimate est;
  est.t = t;
  est.grid = {nx, ns, 0};
  std::size_t arg = 0;
  for (std::size_t i = 0; i < pts.size(); ++i) {
    if (value[i] > est.m_value) {
      est.m_value = value[i];
      arg = i;
    }
    est.m_upper = std::max(est.m_upper, upper[i]);
  }
  est.m_upper = std::max(est.m_upper, est.m_value);
  est.slack = est.m_upper - est.m_value;
  est.m_argmax = {pts[arg], pts[arg].s == 0.0};
  return est;
}

std::pair<double, double> n_of_t(const TrigPolynomial& f, const CeilingClass& cls, double t, int nx,
                                 int ns, int nl, const Exec& exec) {
  if (nl < 8) fail(ErrorCode::InvalidArgument, "need at least 8 candidate line slopes");
  const auto pts = flow_grid(f, nx, ns);
  const double widen = 2.0 * cls.theta_K / nx;
  std::vector<double> value(pts.size());
  std::vector<double> upper(pts.size());
  parallel_for(exec, pts.size(), [&](std::size_t i) {
    const auto branches = collect(f, pts[i], t, dynamics::kDefaultBranchCap);
    value[i] = n_from(branches, f.ell(), cls.theta_f, 0.0, nl);
    upper[i] = n_from(branches, f.ell(), cls.theta_f, widen, 0);
  });
  double best = 0.0;
  double best_upper = 0.0;
  for (std::size_t i = 0; i < pts.size(); ++i) {
    best = std::max(best, value[i]);
    best_upper = std::max(best_upper, upper[i]);
  }
  return {best, std::max(best, best_upper)};
}

LambdaMinEstimate lambda_min(const TrigPolynomial& f, LambdaMethod method, double horizon, int nx,
                             int ns) {
  if (horizon < 1.0) fail(ErrorCode::InvalidArgument, "lambda_min horizon must be >= 1");
  const int ell = f.ell();
  LambdaMinEstimate est;
  est.method = method;
  est.horizon = horizon;
  if (method == LambdaMethod::Grid) {
    int min_count = std::numeric_limits<int>::max();
    for (const auto& z : flow_grid(f, nx, ns))
      min_count = std::min(min_count, dynamics::flow_count(f, z.x, z.s + horizon));
    est.value = std::pow(static_cast<double>(ell), min_count / horizon);
    est.beta_max = min_count > 0 ? horizon / min_count : std::numeric_limits<double>::infinity();
    return est;
  }
  const int max_period = static_cast<int>(std::floor(horizon));
  if (max_period > 20)
    fail(ErrorCode::ResourceLimit, "periodic enumeration limited to periods <= 20",
         {{"max_period", max_period}});
  double beta = -std::numeric_limits<double>::infinity();
  for (int p = 1; p <= max_period; ++p) {
    long long modulus = 1;
    for (int i = 0; i < p; ++i) modulus *= ell;
    modulus -= 1;  // periodic points of period p are k / (ell^p - 1)
    for (long long k = 0; k < modulus; ++k) {
      long long num = k;
      double sum = 0.0;
      for (int i = 0; i < p; ++i) {
        sum += f(static_cast<double>(num) / modulus);
        num = (num * ell) % modulus;
      }
      beta = std::max(beta, sum / p);
    }
  }
  est.beta_max = beta;
  est.value = std::pow(static_cast<double>(ell), 1.0 / beta);
  return est;
}

ExponentFit exponent_fit(const std::vector<std::pair<double, double>>& samples) {
  if (samples.size() < 3) fail(ErrorCode::InvalidArgument, "exponent fit needs at least 3 samples");
  double st = 0.0, sy = 0.0;
  for (const auto& [t, v] : samples) {
    if (!(v > 0.0)) fail(ErrorCode::InvalidArgument, "exponent fit needs positive values");
    st += t;
    sy += std::log(v);
  }
  const double n = static_cast<double>(samples.size());
  const double mt = st / n;
  const double my = sy / n;
  double stt = 0.0, sty = 0.0;
  for (const auto& [t, v] : samples) {
    stt += (t - mt) * (t - mt);
    sty += (t - mt) * (std::log(v) - my);
  }
  if (stt == 0.0) fail(ErrorCode::InvalidArgument, "exponent fit needs distinct sample times");
  const double slope = sty / stt;
  double ss = 0.0;
  for (const auto& [t, v] : samples) {
    const double r = std::log(v) - (my + slope * (t - mt));
    ss += r * r;
  }
  return {std::exp(slope), std::sqrt(ss / n)};
}

}  // namespace suspflow::transversality
