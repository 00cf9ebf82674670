#include "support.hpp"

#include "tssr/cli/commands.hpp"
#include "tssr/cli/config.hpp"
#include "tssr/cli/plot.hpp"
#include "tssr/errors.hpp"

#include <doctest.h>

using namespace tssr;
using namespace tssr::cli;
using nlohmann::json;
using tssr::test::random_vector;

namespace {

json minimal() {
  return json::parse(R"({"name": "t", "data": {"synthetic": {"days": 3}}, "task": {"factor": 3, "window_samples": 96}})");
}

ErrorKind kind_of(const std::function<void()>& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.kind();
  }
  FAIL("expected an Error");
  return ErrorKind::InvalidArgument;
}

}  // namespace

TEST_CASE("schema validator") {
  const json schema = json::parse(R"({
    "type": "object", "additionalProperties": false, "required": ["a"],
    "properties": {
      "a": {"type": "integer", "minimum": 1},
      "b": {"type": "array", "minItems": 1, "items": {"enum": ["x", "y"]}},
      "c": {"$ref": "#/$defs/pos"}
    },
    "$defs": {"pos": {"type": "number", "exclusiveMinimum": 0}}
  })");
  CHECK_NOTHROW(validate_schema(json::parse(R"({"a": 2, "b": ["x"], "c": 0.5})"), schema));
  for (const char* bad : {R"({"b": ["x"]})", R"({"a": 0})", R"({"a": 1.5})", R"({"a": 1, "b": []})",
                          R"({"a": 1, "b": ["z"]})", R"({"a": 1, "c": 0})", R"({"a": 1, "d": 1})", R"([1])"})
    CHECK_MESSAGE(kind_of([&] { validate_schema(json::parse(bad), schema); }) == ErrorKind::Config, bad);

  try {
    validate_schema(json::parse(R"({"a": 1, "b": ["x", 3]})"), schema);
  } catch (const Error& e) {
    CHECK(std::string(e.what()).find("$.b[1]") != std::string::npos);
  }
}

TEST_CASE("the published schema accepts the config echo") {
  RunConfig c = parse_config(minimal());
  CHECK(c.name == "t");
  CHECK(c.data.synthetic->days == 3);
  CHECK(c.phase(1).components.size() == 3);
  CHECK(c.phase(2).uses(LossComponent::FeatureMatching));
  // Round trip: echo -> parse -> echo is a fixed point.
  const json echo = to_json(c);
  CHECK(to_json(parse_config(echo)) == echo);
}

TEST_CASE("config rejects unknown keys and bad values at any depth") {
  for (const char* patch : {R"({"nam": 1})", R"({"task": {"factr": 3}})", R"({"generator": {"attention_mode": "CROSS"}})",
                            R"({"training": {"phase2": {"epochs": 0}}})", R"({"training": {"phase1": {"components": ["fm"]}}})",
                            R"({"discriminator": {"kernel": 4}})", R"({"data": {"split": 1.0}})",
                            R"({"data": {"input": "x.csv"}})", R"({"seed": -1})"}) {
    json j = minimal();
    j.merge_patch(json::parse(patch));
    CHECK_MESSAGE(kind_of([&] { (void)parse_config(j); }) == ErrorKind::Config, patch);
  }
}

TEST_CASE("environment overrides") {
  json j = minimal();
  apply_env_overrides(j, {{"TSSR_TRAINING__PHASE1__EPOCHS", "4"},
                          {"TSSR_GENERATOR__ATTENTION_MODE", "CONV"},
                          {"TSSR_DATA__SYNTHETIC__NOISE_STD", "0.5"},
                          {"TSSR_NAME", "\"quoted\""},
                          {"OTHER_VAR", "1"}});
  const RunConfig c = parse_config(j);
  CHECK(c.phase(1).epochs == 4);
  CHECK(c.generator.attention_mode == AttentionMode::Conv);
  CHECK(c.data.synthetic->noise_std == 0.5);
  CHECK(c.name == "quoted");

  json k = minimal();
  apply_env_overrides(k, {{"TSSR_TASK__FACTOR", "three"}});
  CHECK(kind_of([&] { (void)parse_config(k); }) == ErrorKind::Config);
  json m = minimal();
  CHECK(kind_of([&] { apply_env_overrides(m, {{"TSSR_NAME__X", "1"}}); }) == ErrorKind::Config);
}

TEST_CASE("synthetic source and split metrics") {
  const RunConfig cfg = parse_config(minimal());
  const SourceSeries src = load_source(cfg);
  REQUIRE(src.reference.has_value());
  CHECK(src.reference->size() == 3 * 288);
  CHECK(src.input.size() == 3 * 96);
  CHECK(src.reference->step() == 300.0);
  CHECK(src.input.step() == 900.0);

  const SeriesDataset data = load_dataset(cfg);
  CHECK(data.train().size() == 2);
  CHECK(data.test().size() == 1);
  // The reference itself scores perfectly.
  std::size_t i = 0;
  const MetricReport perfect = split_metrics(data, Split::Train, [&](const Window&) { return data.reference(Split::Train, i++); });
  CHECK(perfect.rmse == 0.0);
  CHECK(perfect.pcc == doctest::Approx(1.0));
  CHECK(perfect.n == 2 * 288);
  // Metrics are reported in original units: a constant offset of 1 normalized
  // unit costs exactly one training standard deviation.
  i = 0;
  const MetricReport shifted = split_metrics(data, Split::Train, [&](const Window&) {
    const TimeSeries& r = data.reference(Split::Train, i++);
    return r.with_values(r.values().array() + 1.0);
  });
  CHECK(shifted.rmse == doctest::Approx(data.normalization().stddev).epsilon(1e-12));
}

TEST_CASE("exit codes are categorized") {
  CHECK(exit_code(ErrorKind::Config) == 3);
  CHECK(exit_code(ErrorKind::Io) == 4);
  CHECK(exit_code(ErrorKind::Shape) == 5);
  CHECK(exit_code(ErrorKind::Numerical) == 6);
  CHECK(exit_code(ErrorKind::Audit) == 7);
}

TEST_CASE("svg rendering") {
  OverlayPlot p;
  p.title = "a < b";
  p.series.push_back({"line", TimeSeries(random_vector(20, 1), 900), "#000"});
  p.series.push_back({"points", TimeSeries(random_vector(5, 2), 3600), "#f00", true});
  const std::string svg = render_svg(p);
  CHECK(svg.starts_with("<svg"));
  CHECK(svg.find("a &lt; b") != std::string::npos);
  CHECK(svg.find("<polyline") != std::string::npos);
  CHECK(svg.find("<circle") != std::string::npos);
  CHECK(render_svg(p) == svg);
  CHECK_THROWS_AS((void)render_svg(OverlayPlot{}), Error);
}
