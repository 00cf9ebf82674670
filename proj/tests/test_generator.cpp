#include "support.hpp"

#include "tssr/checkpoint.hpp"
#include "tssr/errors.hpp"
#include "tssr/generator.hpp"
#include "tssr/losses.hpp"

#include <doctest.h>

#include <filesystem>

using namespace tssr;
using tssr::test::gradcheck;
using tssr::test::random_matrix;
using tssr::test::random_vector;

namespace {

GeneratorConfig toy(AttentionMode mode, int d = 8) {
  GeneratorConfig c;
  c.d_model = d;
  c.n_heads = 2;
  c.n_encoder_layers = 1;
  c.n_decoder_layers = 1;
  c.attention_mode = mode;
  c.fft_bins = 5;
  return c;
}

constexpr AttentionMode kModes[] = {AttentionMode::Self, AttentionMode::Conv, AttentionMode::SerialSelfConv,
                                    AttentionMode::ParallelSelfConv};

}  // namespace

TEST_CASE("attention mode names round trip") {
  for (AttentionMode m : kModes) CHECK(parse_attention_mode(to_string(m)) == m);
  CHECK_THROWS_AS((void)parse_attention_mode("CROSS"), Error);
}

TEST_CASE("embedding") {
  Generator g(toy(AttentionMode::Self), 1);
  g.input_projection().weight().value.setZero();
  g.input_projection().bias().value.setZero();
  Tape t(false);
  const Matrix e = g.embed_input(t, Vector::Zero(5)).value();
  CHECK(e.rows() == 5);
  CHECK(e.cols() == 8);
  CHECK(e == positional_encoding(5, 8));
  for (Index c = 0; c < 8; c += 2) CHECK(e(0, c) == 0.0);
}

TEST_CASE("frequency filter") {
  ParameterSet ps;
  FrequencyFilter f(ps, "fft", 5, 3);
  Tape t(false);
  for (Index len : {7, 8, 96}) {
    const Matrix x = random_matrix(len, 3, static_cast<std::uint64_t>(len));
    CHECK((f(t, t.constant(x)).value() - x).cwiseAbs().maxCoeff() < 1e-9);
  }
  // Keep only DC: a zero-mean sinusoid vanishes.
  f.real().value.setZero();
  f.real().value.row(0).setOnes();
  Matrix sine(16, 3);
  for (Index k = 0; k < 16; ++k) sine.row(k).setConstant(std::sin(2.0 * 3.14159265358979323846 * k / 8.0));
  CHECK(f(t, t.constant(sine)).value().cwiseAbs().maxCoeff() < 1e-9);
  f.real().value.setZero();
  CHECK(f(t, t.constant(sine)).value().isZero(0.0));
}

TEST_CASE("encoder shape and determinism for every mode") {
  const TimeSeries s(random_vector(12, 3), 900);
  for (AttentionMode m : kModes)
    for (bool per_layer : {true, false}) {
      GeneratorConfig cfg = toy(m);
      cfg.per_layer_fusion = per_layer;
      Generator g(cfg, 4);
      const Matrix a = g.encode(s), b = g.encode(s);
      CHECK(a.rows() == 12);
      CHECK(a.cols() == 8);
      CHECK(a == b);
    }
}

TEST_CASE("output length follows the query sequence") {
  for (AttentionMode m : kModes) {
    Generator g(toy(m), 5);
    for (int f : {2, 3, 4, 6}) {
      const TimeSeries s(random_vector(10, 6), 900, 100);
      const TimeSeries out = g.generate(s, ResamplingTask{f, 10});
      CHECK(out.size() == 10 * f);
      CHECK(out.step() == 900.0 / f);
      CHECK(out.start_time() == 100);
      CHECK(out.values().allFinite());
    }
    Tape t(false);
    const Var enc = g.encode(t, random_vector(6, 7));
    CHECK(g.decode(t, enc, random_vector(17, 8), 3).rows() == 17);
  }
  Generator g(toy(AttentionMode::Conv), 5);
  CHECK_THROWS_AS((void)g.generate(TimeSeries(random_vector(9, 1), 900), ResamplingTask{3, 10}), Error);
}

TEST_CASE("no parameter implements a mask") {
  for (AttentionMode m : kModes) {
    Generator g(toy(m), 2);
    for (const auto& p : g.parameters()) CHECK(p.name.find("mask") == std::string::npos);
  }
}

TEST_CASE("generator gradients match finite differences") {
  const Vector input = random_vector(8, 9);
  for (AttentionMode m : kModes) {
    Generator g(toy(m), 10);
    // Finite differences through layer norm need nonzero head weights everywhere.
    const Vector target = random_vector(16, 11);
    const double err = gradcheck({&g.parameters()}, [&](Tape& t) {
      const Var out = g.forward(t, input, 2);
      return mean(square(sub(out, t.constant(target))));
    });
    CAPTURE(to_string(m));
    CHECK(err < 1e-4);
  }
}

TEST_CASE("checkpoint round trip is bit faithful") {
  Generator g(toy(AttentionMode::ParallelSelfConv), 12);
  for (auto& p : g.parameters()) p.value.array() += 0.01;
  const TimeSeries s(random_vector(10, 13), 900);
  const TimeSeries before = g.generate(s, ResamplingTask{3, 10});

  Checkpoint c;
  c.store(g.parameters());
  const auto path = std::filesystem::temp_directory_path() / "tssr_test_gen.ckpt";
  save_checkpoint(path, c);
  Generator fresh(toy(AttentionMode::ParallelSelfConv), 99);
  load_checkpoint(path).load_into(fresh.parameters());
  CHECK(fresh.generate(s, ResamplingTask{3, 10}).values() == before.values());
}
