#pragma once

// Point-wise error metrics and the paired two-sided t-test.

#include "tssr/errors.hpp"

#include <Eigen/Core>

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <string>

namespace tssr {

namespace detail {
template <typename A, typename B>
void check_pair(const Eigen::MatrixBase<A>& a, const Eigen::MatrixBase<B>& b, Eigen::Index min_len, const char* op) {
  require(a.size() == b.size(), ErrorKind::Shape,
          std::string(op) + ": length mismatch " + std::to_string(a.size()) + " vs " + std::to_string(b.size()));
  require(a.size() >= min_len, ErrorKind::InvalidArgument, std::string(op) + ": too few samples");
  require(a.allFinite() && b.allFinite(), ErrorKind::Data, std::string(op) + ": non-finite input");
}
}  // namespace detail

template <typename A, typename B>
typename A::Scalar rmse(const Eigen::MatrixBase<A>& a, const Eigen::MatrixBase<B>& b) {
  detail::check_pair(a, b, 1, "rmse");
  return std::sqrt((a.derived().array() - b.derived().array()).square().mean());
}

template <typename A, typename B>
typename A::Scalar mae(const Eigen::MatrixBase<A>& a, const Eigen::MatrixBase<B>& b) {
  detail::check_pair(a, b, 1, "mae");
  return (a.derived().array() - b.derived().array()).abs().mean();
}

/// Pearson correlation. Zero-variance input is an error, not NaN.
template <typename A, typename B>
typename A::Scalar pcc(const Eigen::MatrixBase<A>& a, const Eigen::MatrixBase<B>& b) {
  using S = typename A::Scalar;
  detail::check_pair(a, b, 2, "pcc");
  const auto da = (a.derived().array() - a.derived().mean()).eval();
  const auto db = (b.derived().array() - b.derived().mean()).eval();
  const S saa = da.square().sum();
  const S sbb = db.square().sum();
  require(saa > 0 && sbb > 0, ErrorKind::Degenerate, "pcc: zero-variance input");
  const S r = (da * db).sum() / std::sqrt(saa * sbb);
  return std::clamp(r, S(-1), S(1));
}

struct MetricReport {
  double rmse = 0.0;
  double mae = 0.0;
  double pcc = 0.0;
  bool pcc_defined = true;
  std::size_t n = 0;
};

template <typename A, typename B>
MetricReport evaluate_metrics(const Eigen::MatrixBase<A>& prediction, const Eigen::MatrixBase<B>& reference) {
  MetricReport r;
  r.rmse = rmse(prediction, reference);
  r.mae = mae(prediction, reference);
  r.n = static_cast<std::size_t>(prediction.size());
  try {
    r.pcc = pcc(prediction, reference);
  } catch (const Error& e) {
    if (e.kind() != ErrorKind::Degenerate) throw;
    r.pcc = std::nan("");
    r.pcc_defined = false;
  }
  return r;
}

struct SignificanceResult {
  double p_value = 1.0;
  double mean_diff = 0.0;
  double t_statistic = 0.0;
  int n_runs = 0;
};

/// Regularized incomplete beta I_x(a, b).
double incomplete_beta(double a, double b, double x);

/// Student t cumulative distribution with nu degrees of freedom.
double student_t_cdf(double t, double nu);

/// Two-sided paired t-test on per-run differences a - b.
SignificanceResult paired_significance(const Eigen::VectorXd& runs_a, const Eigen::VectorXd& runs_b);

}  // namespace tssr
