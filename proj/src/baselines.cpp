#include "tssr/baselines.hpp"

#include "tssr/errors.hpp"

#include <Eigen/Cholesky>

#include <algorithm>
#include <cmath>
#include <numbers>

namespace tssr {

void GpConfig::validate() const {
  require(std::isfinite(length_scale), ErrorKind::Config, "gp: length_scale must be finite");
  require(signal_variance > 0.0, ErrorKind::Config, "gp: signal_variance must be positive");
  require(noise_variance > 0.0, ErrorKind::Config, "gp: noise_variance must be positive");
  require(optimize_steps >= 0, ErrorKind::Config, "gp: optimize_steps must be non-negative");
  require(optimize_rate > 0.0, ErrorKind::Config, "gp: optimize_rate must be positive");
}

namespace {

// Times are measured in input steps: anchor k sits at t = k.
Matrix se_kernel(const Vector& a, const Vector& b, double ell, double sf2) {
  Matrix k(a.size(), b.size());
  for (Index i = 0; i < a.size(); ++i)
    for (Index j = 0; j < b.size(); ++j) {
      const double d = a(i) - b(j);
      k(i, j) = sf2 * std::exp(-d * d / (2.0 * ell * ell));
    }
  return k;
}

struct Factorization {
  Eigen::LLT<Matrix> llt;
  double jitter = 0.0;
};

Factorization factorize(const Matrix& k, double noise) {
  const Index n = k.rows();
  double jitter = 0.0;
  for (int step = 0; step <= 5; ++step) {
    Factorization f;
    f.jitter = jitter;
    f.llt.compute(k + (noise + jitter) * Matrix::Identity(n, n));
    if (f.llt.info() == Eigen::Success) return f;
    jitter = jitter == 0.0 ? 1e-8 : jitter * 10.0;
  }
  fail(ErrorKind::Numerical, "gp: kernel matrix not positive definite even with jitter 1e-4");
}

double log_marginal(const Factorization& f, const Vector& y) {
  const Vector alpha = f.llt.solve(y);
  const double logdet = 2.0 * f.llt.matrixLLT().diagonal().array().log().sum();
  return -0.5 * y.dot(alpha) - 0.5 * logdet - 0.5 * static_cast<double>(y.size()) * std::log(2.0 * std::numbers::pi);
}

}  // namespace

GpFit fit_gp(const TimeSeries& s, int factor, const GpConfig& cfg) {
  cfg.validate();
  require(factor >= 1, ErrorKind::InvalidArgument, "gp: factor must be positive");
  const Index n = s.size();
  const double offset = s.values().mean();
  const Vector y = s.values().array() - offset;
  const Vector t = Vector::LinSpaced(n, 0.0, static_cast<double>(n - 1));

  double log_ell = std::log(cfg.length_scale > 0.0 ? cfg.length_scale / s.step() : 1.0);
  double log_sf2 = std::log(cfg.signal_variance);
  double log_sn2 = std::log(cfg.noise_variance);

  if (cfg.optimize) {
    for (int it = 0; it < cfg.optimize_steps; ++it) {
      const double ell = std::exp(log_ell), sf2 = std::exp(log_sf2), sn2 = std::exp(log_sn2);
      const Matrix k = se_kernel(t, t, ell, sf2);
      const Factorization f = factorize(k, sn2);
      const Vector alpha = f.llt.solve(y);
      const Matrix inner = alpha * alpha.transpose() - f.llt.solve(Matrix::Identity(n, n));
      // d K / d log(ell) = K .* d^2 / ell^2 ; d K / d log(sf2) = K ; d K / d log(sn2) = sn2 I
      Matrix dk_ell(n, n);
      for (Index i = 0; i < n; ++i)
        for (Index j = 0; j < n; ++j) {
          const double d = t(i) - t(j);
          dk_ell(i, j) = k(i, j) * d * d / (ell * ell);
        }
      const double g_ell = 0.5 * (inner.cwiseProduct(dk_ell)).sum();
      const double g_sf2 = 0.5 * (inner.cwiseProduct(k)).sum();
      const double g_sn2 = 0.5 * sn2 * inner.trace();
      const auto clip = [](double g) { return std::clamp(g, -1.0, 1.0); };
      log_ell += cfg.optimize_rate * clip(g_ell);
      log_sf2 += cfg.optimize_rate * clip(g_sf2);
      log_sn2 = std::max(log_sn2 + cfg.optimize_rate * clip(g_sn2), std::log(1e-10));
    }
  }

  GpFit fit{s, 0.0, std::exp(log_ell), std::exp(log_sf2), std::exp(log_sn2), 0.0};
  const Factorization f = factorize(se_kernel(t, t, fit.length_scale, fit.signal_variance), fit.noise_variance);
  fit.jitter = f.jitter;
  fit.log_marginal_likelihood = log_marginal(f, y);
  const Vector alpha = f.llt.solve(y);

  const Index m = n * factor;
  Vector out(m);
  const Index covered = (n - 1) * factor + 1;  // fine points up to the last anchor
  const Vector tq = Vector::LinSpaced(covered, 0.0, static_cast<double>(n - 1));
  out.head(covered) = (se_kernel(tq, t, fit.length_scale, fit.signal_variance) * alpha).array() + offset;
  out.tail(m - covered).setConstant(out(covered - 1));
  fit.length_scale *= s.step();
  fit.mean = TimeSeries(std::move(out), s.step() / factor, s.start_time(), s.name());
  return fit;
}

}  // namespace tssr
