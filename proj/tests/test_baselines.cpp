#include "support.hpp"

#include "tssr/baselines.hpp"
#include "tssr/errors.hpp"

#include <Eigen/LU>
#include <doctest.h>

using namespace tssr;
using tssr::test::random_vector;

namespace {

// Dense posterior mean at arbitrary times (in input steps), solved by LU.
Vector dense_posterior(const Vector& y, const Vector& tq, double ell, double sf2, double sn2) {
  const Index n = y.size();
  const double m = y.mean();
  Matrix k(n, n), ks(tq.size(), n);
  for (Index i = 0; i < n; ++i)
    for (Index j = 0; j < n; ++j) k(i, j) = sf2 * std::exp(-std::pow(double(i - j), 2) / (2 * ell * ell));
  for (Index i = 0; i < tq.size(); ++i)
    for (Index j = 0; j < n; ++j) ks(i, j) = sf2 * std::exp(-std::pow(tq(i) - double(j), 2) / (2 * ell * ell));
  const Matrix a = k + sn2 * Matrix::Identity(n, n);
  const Vector w = a.fullPivLu().solve((y.array() - m).matrix());
  return (ks * w).array() + m;
}

}  // namespace

TEST_CASE("linear baseline is linear_init") {
  const TimeSeries s(random_vector(6, 1), 900);
  CHECK(upsample_linear(s, 3).values() == linear_init(s, 3).values());
}

TEST_CASE("gp reproduces anchors and constants") {
  const TimeSeries s(random_vector(10, 2), 900);
  const GpFit fit = fit_gp(s, 3);
  CHECK(fit.mean.size() == 30);
  CHECK(fit.mean.step() == 300);
  for (Index k = 0; k < 10; ++k) CHECK(std::abs(fit.mean[k * 3] - s[k]) < 1e-4);
  CHECK(fit.mean[29] == fit.mean[27]);

  const TimeSeries c(Vector::Constant(8, 3.5), 900);
  CHECK((upsample_gp(c, 4).values().array() - 3.5).abs().maxCoeff() < 1e-6);
}

TEST_CASE("gp matches a dense closed-form solve") {
  for (Index n : {3, 6, 10}) {
    const Vector y = random_vector(n, static_cast<std::uint64_t>(n));
    const TimeSeries s(y, 600);
    GpConfig cfg;
    cfg.length_scale = 1.7 * 600;
    cfg.signal_variance = 0.8;
    cfg.noise_variance = 1e-3;
    const GpFit fit = fit_gp(s, 2, cfg);
    const Index covered = (n - 1) * 2 + 1;
    const Vector tq = Vector::LinSpaced(covered, 0.0, static_cast<double>(n - 1));
    const Vector expect = dense_posterior(y, tq, 1.7, 0.8, 1e-3);
    CHECK((fit.mean.values().head(covered) - expect).cwiseAbs().maxCoeff() < 1e-6);
    CHECK(fit.jitter == 0.0);
  }
}

TEST_CASE("gp is affine equivariant") {
  const TimeSeries s(random_vector(9, 4), 900);
  const TimeSeries t(-2.0 * s.values().array() + 5.0, 900);
  const Vector lhs = upsample_gp(t, 3).values();
  const Vector rhs = -2.0 * upsample_gp(s, 3).values().array() + 5.0;
  CHECK((lhs - rhs).cwiseAbs().maxCoeff() < 1e-9);
}

TEST_CASE("tiny length scale falls back to the prior mean between anchors") {
  const TimeSeries s(random_vector(7, 5), 900);
  GpConfig cfg;
  cfg.length_scale = 9.0;  // step / 100
  const Vector out = upsample_gp(s, 3, cfg).values();
  const double m = s.values().mean();
  for (Index k = 0; k + 1 < 7; ++k) {
    CHECK(std::abs(out(k * 3 + 1) - m) < 1e-9);
    CHECK(std::abs(out(k * 3) - s[k]) < 1e-4);
  }
}

TEST_CASE("gp jitter escalates on a singular kernel and hyperparameters can be fitted") {
  const TimeSeries s(random_vector(12, 6), 900);
  GpConfig cfg;
  cfg.length_scale = 900.0 * 50;  // nearly rank one
  cfg.noise_variance = 1e-300;
  const GpFit fit = fit_gp(s, 2, cfg);
  CHECK(fit.jitter > 0.0);
  CHECK(fit.mean.values().allFinite());

  GpConfig opt;
  opt.optimize = true;
  const GpFit base = fit_gp(s, 2), tuned = fit_gp(s, 2, opt);
  CHECK(tuned.log_marginal_likelihood > base.log_marginal_likelihood);

  GpConfig bad;
  bad.noise_variance = 0.0;
  CHECK_THROWS_AS((void)fit_gp(s, 2, bad), Error);
}
