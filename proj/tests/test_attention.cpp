#include "support.hpp"

#include "tssr/attention.hpp"
#include "tssr/errors.hpp"

#include <doctest.h>

using namespace tssr;
using tssr::test::gradcheck;
using tssr::test::random_matrix;

TEST_CASE("attention_core hand cases") {
  // Single key: the output is that value row.
  const Matrix v1 = (Matrix(1, 2) << 3, -1).finished();
  const Matrix out1 = attention_core(random_matrix(5, 2, 1), random_matrix(1, 2, 2), v1);
  for (Index r = 0; r < 5; ++r) CHECK(out1.row(r) == v1.row(0));

  // Identical keys: uniform weights, output = column mean of V.
  const Matrix k = Matrix::Ones(3, 2);
  const Matrix v = random_matrix(3, 4, 3);
  const Matrix out2 = attention_core(random_matrix(2, 2, 4), k, v);
  for (Index r = 0; r < 2; ++r) CHECK((out2.row(r) - v.colwise().mean()).cwiseAbs().maxCoeff() < 1e-12);

  // Q = K = I, V = [[1,2],[3,4]], d = 2: w = softmax([1,0]/sqrt2).
  const double e = std::exp(1.0 / std::sqrt(2.0));
  const double a = e / (e + 1.0), b = 1.0 / (e + 1.0);
  const Matrix out3 = attention_core(Matrix::Identity(2, 2), Matrix::Identity(2, 2), (Matrix(2, 2) << 1, 2, 3, 4).finished());
  CHECK(out3(0, 0) == doctest::Approx(a * 1 + b * 3).epsilon(1e-12));
  CHECK(out3(0, 1) == doctest::Approx(a * 2 + b * 4).epsilon(1e-12));
  CHECK(out3(1, 0) == doctest::Approx(b * 1 + a * 3).epsilon(1e-12));
  CHECK(out3(1, 1) == doctest::Approx(b * 2 + a * 4).epsilon(1e-12));

  CHECK_THROWS_AS((void)attention_core(Matrix::Ones(2, 3), Matrix::Ones(2, 2), Matrix::Ones(2, 2)), Error);
}

TEST_CASE("attention rows are stochastic and keys behave as a set") {
  Tape t(false);
  Matrix w;
  const Matrix q = random_matrix(7, 4, 5), k = random_matrix(3, 4, 6), v = random_matrix(3, 2, 7);
  const Matrix out = attention_core(t.constant(q), t.constant(k), t.constant(v), &w).value();
  CHECK(w.rows() == 7);
  CHECK(w.cols() == 3);
  CHECK((w.rowwise().sum().array() - 1.0).abs().maxCoeff() < 1e-12);
  CHECK(w.minCoeff() >= 0.0);

  Eigen::PermutationMatrix<Eigen::Dynamic> perm(3);
  perm.indices() << 2, 0, 1;
  const Matrix kp = perm * k, vp = perm * v;
  CHECK((attention_core(q, kp, vp) - out).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("linear and convolutional projections") {
  Rng rng(1);
  ParameterSet ps;
  AttentionConfig cfg{4, 2, 3, AttentionKind::Conv, 0.0};
  MultiHeadAttention conv(ps, "a", cfg, rng);
  cfg.kind = AttentionKind::Self;
  ParameterSet ps2;
  MultiHeadAttention self(ps2, "b", cfg, rng);

  const Matrix x = random_matrix(6, 4, 2);
  Tape t(false);
  // Identity weights, zero bias: projection is the identity.
  self.linear(Role::Query).weight().value.setIdentity();
  self.linear(Role::Query).bias().value.setZero();
  CHECK(self.project_linear(t, t.constant(x), Role::Query).value() == x);
  self.linear(Role::Key).weight().value.setZero();
  self.linear(Role::Key).bias().value << 1, 2, 3, 4;
  const Matrix kb = self.project_linear(t, t.constant(x), Role::Key).value();
  for (Index r = 0; r < 6; ++r) CHECK(kb.row(r) == self.linear(Role::Key).bias().value.row(0));
  // Random weights against explicit matmul.
  const Matrix vo = self.project_linear(t, t.constant(x), Role::Value).value();
  const Matrix expect = (x * self.linear(Role::Value).weight().value).rowwise() + self.linear(Role::Value).bias().value.row(0);
  CHECK((vo - expect).cwiseAbs().maxCoeff() < 1e-12);

  // Delta kernel: convolutional projection is the identity.
  conv.conv(Role::Query).set_delta(Matrix::Identity(4, 4));
  conv.conv(Role::Query).bias().value.setZero();
  CHECK(conv.project_conv(t, t.constant(x), Role::Query).value() == x);
  // Sum-one kernel preserves constants away from the padded edges.
  Matrix& w = conv.conv(Role::Key).weight().value;
  w.setZero();
  for (int j = 0; j < 3; ++j) w.block(j * 4, 0, 4, 4) = Matrix::Identity(4, 4) / 3.0;
  conv.conv(Role::Key).bias().value.setZero();
  const Matrix c = conv.project_conv(t, t.constant(Matrix::Constant(6, 4, 2.0)), Role::Key).value();
  CHECK((c.middleRows(1, 4).array() - 2.0).abs().maxCoeff() < 1e-12);
  CHECK(c(0, 0) == doctest::Approx(4.0 / 3.0));
  CHECK_THROWS_AS((void)conv.project_conv(t, t.constant(x), Role::Value), Error);
  CHECK_THROWS_AS((void)self.project_conv(t, t.constant(x), Role::Query), Error);
}

TEST_CASE("multi-head shapes, weights and SELF/CONV equivalence") {
  Rng rng(3);
  ParameterSet ps;
  AttentionConfig cfg{8, 2, 3, AttentionKind::Self, 0.0};
  MultiHeadAttention self(ps, "s", cfg, rng);
  Tape t(false);
  std::vector<Matrix> weights;
  const Var out = self.forward(t, t.constant(random_matrix(7, 8, 4)), t.constant(random_matrix(3, 8, 5)), &weights);
  CHECK(out.rows() == 7);
  CHECK(out.cols() == 8);
  REQUIRE(weights.size() == 2);
  for (const auto& w : weights) CHECK((w.rowwise().sum().array() - 1.0).abs().maxCoeff() < 1e-12);

  // Conv attention with delta kernels equal to the linear weights.
  cfg.kind = AttentionKind::Conv;
  ParameterSet pc;
  MultiHeadAttention conv(pc, "c", cfg, rng);
  conv.conv(Role::Query).set_delta(self.linear(Role::Query).weight().value);
  conv.conv(Role::Query).bias().value = self.linear(Role::Query).bias().value;
  conv.conv(Role::Key).set_delta(self.linear(Role::Key).weight().value);
  conv.conv(Role::Key).bias().value = self.linear(Role::Key).bias().value;
  conv.linear(Role::Value).weight().value = self.linear(Role::Value).weight().value;
  conv.linear(Role::Value).bias().value = self.linear(Role::Value).bias().value;
  conv.output().weight().value = self.output().weight().value;
  conv.output().bias().value = self.output().bias().value;
  const Matrix xq = random_matrix(5, 8, 6), xkv = random_matrix(5, 8, 7);
  const Matrix a = self.forward(t, t.constant(xq), t.constant(xkv)).value();
  const Matrix b = conv.forward(t, t.constant(xq), t.constant(xkv)).value();
  CHECK((a - b).cwiseAbs().maxCoeff() < 1e-12);

  AttentionConfig bad{6, 4, 3, AttentionKind::Self, 0.0};
  CHECK_THROWS_AS(bad.validate(), Error);
}

TEST_CASE("single head equals project + core + output map") {
  Rng rng(9);
  ParameterSet ps;
  MultiHeadAttention m(ps, "m", AttentionConfig{4, 1, 3, AttentionKind::Self, 0.0}, rng);
  const Matrix x = random_matrix(5, 4, 10);
  Tape t(false);
  const Var xv = t.constant(x);
  // Copy each projection out: node storage may move as the tape grows.
  const Matrix q = m.project(t, xv, Role::Query).value();
  const Matrix k = m.project(t, xv, Role::Key).value();
  const Matrix v = m.project(t, xv, Role::Value).value();
  const Matrix core = attention_core(q, k, v);
  const Matrix expect = (core * m.output().weight().value).rowwise() + m.output().bias().value.row(0);
  CHECK((m.forward(t, xv, xv).value() - expect).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("attention gradients match finite differences") {
  for (AttentionKind kind : {AttentionKind::Self, AttentionKind::Conv}) {
    Rng rng(11);
    ParameterSet ps;
    MultiHeadAttention m(ps, "m", AttentionConfig{8, 2, 3, kind, 0.0}, rng);
    ParameterSet inputs;
    Parameter& xq = inputs.add("xq", random_matrix(8, 8, 12));
    Parameter& xkv = inputs.add("xkv", random_matrix(4, 8, 13));
    const Matrix proj = random_matrix(8, 8, 14);
    const double err = gradcheck({&ps, &inputs}, [&](Tape& t) {
      return sum(hadamard(m.forward(t, t.parameter(xq), t.parameter(xkv)), t.constant(proj)));
    });
    CHECK(err < 1e-4);
  }
}
