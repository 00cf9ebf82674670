#include "support.hpp"

#include "tssr/errors.hpp"
#include "tssr/losses.hpp"

#include <doctest.h>

#include <numbers>

using namespace tssr;
using tssr::test::gradcheck;
using tssr::test::random_matrix;
using tssr::test::random_vector;

namespace {
TimeSeries ts(std::initializer_list<double> v, double step = 300) {
  Vector out(static_cast<Index>(v.size()));
  Index i = 0;
  for (double x : v) out(i++) = x;
  return TimeSeries(out, step);
}
}  // namespace

TEST_CASE("mse") {
  const TimeSeries x(random_vector(8, 1), 900);
  for (int f : {2, 3}) {
    CHECK(loss_mse(linear_init(x, f), x, f) == 0.0);
    const TimeSeries shifted(linear_init(x, f).values().array() + 1.0, 900.0 / f);
    CHECK(loss_mse(shifted, x, f) == doctest::Approx(1.0).epsilon(1e-12));
  }
  // 6 -> 2 by hand: point picks samples 0 and 3; mean averages blocks.
  const TimeSeries out = ts({1, 2, 3, 4, 5, 6});
  const TimeSeries in = ts({0, 0}, 900);
  CHECK(loss_mse(out, in, 3, BlockMode::Point) == doctest::Approx((1.0 + 16.0) / 2.0));
  CHECK(loss_mse(out, in, 3, BlockMode::Mean) == doctest::Approx((4.0 + 25.0) / 2.0));
  CHECK_THROWS_AS((void)loss_mse(out, in, 2), Error);
}

TEST_CASE("smoothness") {
  CHECK(loss_smoothness(ts({0, 1, 0})) == 4.0);
  CHECK(loss_smoothness(ts({0, 1, 4, 9})) == 4.0);
  const Vector x = random_vector(20, 2);
  const Vector ramp = Vector::LinSpaced(20, 0.0, 19.0);
  CHECK(loss_smoothness(TimeSeries(3.0 * ramp.array() - 2.0, 300)) == 0.0);
  CHECK(loss_smoothness(TimeSeries(x + 0.5 * ramp + Vector::Constant(20, 7.0), 300)) ==
        doctest::Approx(loss_smoothness(TimeSeries(x, 300))).epsilon(1e-12));
  CHECK_THROWS_AS((void)loss_smoothness(ts({1, 2})), Error);
}

TEST_CASE("gradient loss") {
  const TimeSeries x(random_vector(8, 3), 900);
  CHECK(loss_gradient(linear_init(x, 3), x, 3) == 0.0);
  // Windowed output [0, 1, 2] has diffs [1, 1]; input diffs [0, 0].
  const TimeSeries out = ts({0, 9, 1, 9, 2, 9});
  CHECK(loss_gradient(out, ts({5, 5, 5}, 600), 2) == 1.0);
}

TEST_CASE("softplus weights") {
  CHECK(std::abs(softplus(unit_weight_alpha()) - 1.0) < 1e-12);
  CHECK(softplus(0.0) == doctest::Approx(std::numbers::ln2).epsilon(1e-15));
  CHECK(softplus(-800.0) >= 0.0);
  CHECK(softplus(800.0) == 800.0);
  for (double a = -5; a < 5; a += 0.7) CHECK(softplus(a + 0.1) > softplus(a));

  const std::pair<std::string, double> parts[] = {{"mse", 2.0}, {"smoothness", 3.0}};
  const double alphas[] = {unit_weight_alpha(), unit_weight_alpha()};
  const LossBreakdown b = combine_total(parts, alphas);
  CHECK(b.total == doctest::Approx(5.0).epsilon(1e-12));
  const double one[] = {0.0};
  CHECK_THROWS_AS((void)combine_total(parts, one), Error);
}

TEST_CASE("learnable weights: d lambda / d alpha = sigmoid(alpha)") {
  ParameterSet ps;
  LossWeights w(ps, {LossComponent::Mse, LossComponent::Smoothness}, 0.3);
  CHECK(w.lambda(LossComponent::Mse) == doctest::Approx(softplus(0.3)));
  Tape t;
  const std::pair<LossComponent, Var> parts[] = {{LossComponent::Mse, t.constant(Matrix::Constant(1, 1, 1.0))},
                                                 {LossComponent::Smoothness, t.constant(Matrix::Constant(1, 1, 2.0))}};
  const CombinedLoss c = combine_total(t, parts, w);
  t.backward(c.total);
  CHECK(t.gradient(w.alpha(LossComponent::Mse))(0, 0) == doctest::Approx(1.0 / (1.0 + std::exp(-0.3))).epsilon(1e-12));
  CHECK(t.gradient(w.alpha(LossComponent::Smoothness))(0, 0) ==
        doctest::Approx(2.0 / (1.0 + std::exp(-0.3))).epsilon(1e-12));
  CHECK(c.breakdown.total == doctest::Approx(softplus(0.3) * 3.0).epsilon(1e-12));
  const std::pair<LossComponent, Var> unknown[] = {{LossComponent::FeatureMatching, t.constant(Matrix::Ones(1, 1))}};
  CHECK_THROWS_AS((void)combine_total(t, unknown, w), Error);
}

TEST_CASE("feature matching") {
  const Matrix f = random_matrix(6, 3, 4);
  CHECK(loss_feature_matching(f, f) == 0.0);
  Matrix doubled(12, 3);
  doubled << f, f;
  CHECK(loss_feature_matching(doubled, f) < 1e-28);
  Matrix shifted = f;
  shifted.col(1).array() += 1.0;
  CHECK(loss_feature_matching(f, shifted) == doctest::Approx(1.0).epsilon(1e-12));
  const Matrix g = random_matrix(9, 3, 5);
  CHECK(loss_feature_matching(f, g) == doctest::Approx(loss_feature_matching(g, f)).epsilon(1e-14));
  CHECK_THROWS_AS((void)loss_feature_matching(f, random_matrix(6, 2, 1)), Error);
}

TEST_CASE("discriminator BCE") {
  const Vector half = Vector::Constant(4, 0.5);
  CHECK(std::abs(loss_discriminator(half, half) - 2.0 * std::numbers::ln2) < 1e-12);
  CHECK(loss_discriminator(Vector::Constant(2, 0.9), Vector::Constant(2, 0.1)) ==
        doctest::Approx(-2.0 * std::log(0.9)).epsilon(1e-12));
  const double perfect = loss_discriminator(Vector::Ones(3), Vector::Zero(3));
  CHECK(perfect >= 0.0);
  CHECK(perfect < 1e-6);
  CHECK(std::isfinite(loss_discriminator(Vector::Zero(3), Vector::Ones(3))));
}

TEST_CASE("loss gradients match finite differences") {
  ParameterSet in;
  Parameter& out = in.add("out", random_matrix(8, 1, 6));
  Parameter& x = in.add("x", random_matrix(4, 1, 7));
  for (BlockMode m : {BlockMode::Point, BlockMode::Mean}) {
    CHECK(gradcheck({&in}, [&](Tape& t) { return loss_mse(t.parameter(out), t.parameter(x), 2, m); }) < 1e-4);
    CHECK(gradcheck({&in}, [&](Tape& t) { return loss_gradient(t.parameter(out), t.parameter(x), 2, m); }) < 1e-4);
  }
  CHECK(gradcheck({&in}, [&](Tape& t) { return loss_smoothness(t.parameter(out)); }) < 1e-4);

  ParameterSet fm;
  Parameter& a = fm.add("a", random_matrix(8, 3, 8));
  Parameter& b = fm.add("b", random_matrix(5, 3, 9));
  CHECK(gradcheck({&fm}, [&](Tape& t) { return loss_feature_matching(t.parameter(a), t.parameter(b)); }) < 1e-4);

  ParameterSet pr;
  Parameter& pr_real = pr.add("r", (Matrix(3, 1) << 0.2, 0.7, 0.9).finished());
  Parameter& pr_fake = pr.add("f", (Matrix(3, 1) << 0.1, 0.4, 0.6).finished());
  CHECK(gradcheck({&pr}, [&](Tape& t) { return loss_discriminator(t.parameter(pr_real), t.parameter(pr_fake)); }) <
        1e-4);

  ParameterSet alphas;
  LossWeights w(alphas, {LossComponent::Mse, LossComponent::Smoothness, LossComponent::Gradient}, 0.2);
  CHECK(gradcheck({&in, &alphas}, [&](Tape& t) {
          const Var o = t.parameter(out), xi = t.parameter(x);
          const std::pair<LossComponent, Var> parts[] = {{LossComponent::Mse, loss_mse(o, xi, 2)},
                                                         {LossComponent::Smoothness, loss_smoothness(o)},
                                                         {LossComponent::Gradient, loss_gradient(o, xi, 2)}};
          return combine_total(t, parts, w).total;
        }) < 1e-4);
}
