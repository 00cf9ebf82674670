#include "tssr/metrics.hpp"

#include <cmath>
#include <limits>

namespace tssr {

namespace {

// Continued fraction for I_x(a, b), modified Lentz evaluation.
double beta_continued_fraction(double a, double b, double x) {
  constexpr int kMaxIter = 500;
  constexpr double kEps = 1e-16;
  constexpr double kTiny = 1e-300;
  const double qab = a + b;
  const double qap = a + 1.0;
  const double qam = a - 1.0;
  double c = 1.0;
  double d = 1.0 - qab * x / qap;
  if (std::abs(d) < kTiny) d = kTiny;
  d = 1.0 / d;
  double h = d;
  for (int m = 1; m <= kMaxIter; ++m) {
    const double m2 = 2.0 * m;
    double aa = m * (b - m) * x / ((qam + m2) * (a + m2));
    d = 1.0 + aa * d;
    if (std::abs(d) < kTiny) d = kTiny;
    c = 1.0 + aa / c;
    if (std::abs(c) < kTiny) c = kTiny;
    d = 1.0 / d;
    h *= d * c;
    aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
    d = 1.0 + aa * d;
    if (std::abs(d) < kTiny) d = kTiny;
    c = 1.0 + aa / c;
    if (std::abs(c) < kTiny) c = kTiny;
    d = 1.0 / d;
    const double delta = d * c;
    h *= delta;
    if (std::abs(delta - 1.0) < kEps) return h;
  }
  fail(ErrorKind::Numerical, "incomplete beta continued fraction did not converge");
}

}  // namespace

double incomplete_beta(double a, double b, double x) {
  require(a > 0 && b > 0, ErrorKind::InvalidArgument, "incomplete_beta: a, b must be positive");
  require(x >= 0 && x <= 1, ErrorKind::InvalidArgument, "incomplete_beta: x outside [0, 1]");
  if (x == 0.0 || x == 1.0) return x;
  const double log_front = std::lgamma(a + b) - std::lgamma(a) - std::lgamma(b) + a * std::log(x) + b * std::log1p(-x);
  const double front = std::exp(log_front);
  // The continued fraction converges fastest on the side of the mean.
  if (x < (a + 1.0) / (a + b + 2.0)) return front * beta_continued_fraction(a, b, x) / a;
  return 1.0 - front * beta_continued_fraction(b, a, 1.0 - x) / b;
}

double student_t_cdf(double t, double nu) {
  require(nu > 0, ErrorKind::InvalidArgument, "student_t_cdf: degrees of freedom must be positive");
  if (std::isinf(t)) return t > 0 ? 1.0 : 0.0;
  const double x = nu / (nu + t * t);
  const double tail = 0.5 * incomplete_beta(0.5 * nu, 0.5, x);
  return t > 0 ? 1.0 - tail : tail;
}

SignificanceResult paired_significance(const Eigen::VectorXd& runs_a, const Eigen::VectorXd& runs_b) {
  require(runs_a.size() == runs_b.size(), ErrorKind::Shape, "paired_significance: run count mismatch");
  require(runs_a.size() >= 2, ErrorKind::InvalidArgument, "paired_significance: need at least 2 paired runs");
  require(runs_a.allFinite() && runs_b.allFinite(), ErrorKind::Data, "paired_significance: non-finite input");
  const Eigen::VectorXd diff = runs_a - runs_b;
  const auto n = static_cast<double>(diff.size());
  SignificanceResult r;
  r.n_runs = static_cast<int>(diff.size());
  r.mean_diff = diff.mean();
  const double ss = (diff.array() - r.mean_diff).square().sum();
  if (ss == 0.0) {
    // All differences equal: zero effect is certainly null, nonzero effect certainly not.
    r.p_value = r.mean_diff == 0.0 ? 1.0 : 0.0;
    r.t_statistic = r.mean_diff == 0.0 ? 0.0 : std::copysign(std::numeric_limits<double>::infinity(), r.mean_diff);
    return r;
  }
  const double sd = std::sqrt(ss / (n - 1.0));
  r.t_statistic = r.mean_diff / (sd / std::sqrt(n));
  const double nu = n - 1.0;
  r.p_value = std::clamp(incomplete_beta(0.5 * nu, 0.5, nu / (nu + r.t_statistic * r.t_statistic)), 0.0, 1.0);
  return r;
}

}  // namespace tssr
