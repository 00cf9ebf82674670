#pragma once

// Run configuration: one JSON document, checked against a published schema
// before anything else happens. Environment variables TSSR_<KEY>__<SUB>...
// override individual keys.

#include "tssr/baselines.hpp"
#include "tssr/discriminator.hpp"
#include "tssr/generator.hpp"
#include "tssr/timeseries.hpp"
#include "tssr/training.hpp"

#include <json.hpp>

#include <array>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace tssr::cli {

struct SyntheticSource {
  std::vector<WaveformComponent> components{{WaveformKind::Sine, 24, 1.0}, {WaveformKind::Square, 96, 0.5}};
  int days = 60;
  int samples_per_day = 288;  // on the fine grid
  double noise_std = 0.02;
  std::uint64_t seed = 7;
};

struct DataConfig {
  // Either a CSV pair or a generated series. With a CSV, `input` is read at
  // `column`; `reference` (optional) is the true fine series, evaluation only.
  std::optional<std::filesystem::path> input;
  std::string column = "value";
  std::optional<std::filesystem::path> reference;
  std::string reference_column = "value";
  std::optional<SyntheticSource> synthetic;
  double split = 0.8;
  BlockMode downsample_mode = BlockMode::Point;  // synthetic coarse grid only
};

struct RunConfig {
  std::string name = "run";
  std::filesystem::path output_dir = "runs";
  std::uint64_t seed = 1;
  ResamplingTask task;
  DataConfig data;
  GeneratorConfig generator;
  DiscriminatorConfig discriminator;
  std::array<PhasePlan, 3> phases{PhasePlan::defaults(1), PhasePlan::defaults(2), PhasePlan::defaults(3)};
  GpConfig gp;
  std::vector<AttentionMode> ablation_modes{AttentionMode::Self, AttentionMode::Conv, AttentionMode::SerialSelfConv,
                                            AttentionMode::ParallelSelfConv};

  [[nodiscard]] std::filesystem::path run_dir() const { return output_dir / name; }
  [[nodiscard]] const PhasePlan& phase(int k) const { return phases.at(static_cast<std::size_t>(k - 1)); }
};

/// The published JSON Schema (draft 2020-12 subset) for run configs.
[[nodiscard]] const nlohmann::json& config_schema();

/// Validates j against a schema; supports type, properties, required,
/// additionalProperties=false, items, enum, minimum, exclusiveMinimum,
/// maximum, minItems. Throws ErrorKind::Config naming the JSON path.
void validate_schema(const nlohmann::json& j, const nlohmann::json& schema, const std::string& path = "$");

/// Applies TSSR_A__B=value style overrides; values parse as JSON when they
/// can, otherwise they are taken as strings.
void apply_env_overrides(nlohmann::json& j, const std::vector<std::pair<std::string, std::string>>& env);
[[nodiscard]] std::vector<std::pair<std::string, std::string>> environment_overrides();

[[nodiscard]] RunConfig parse_config(const nlohmann::json& j);
[[nodiscard]] nlohmann::json to_json(const RunConfig& cfg);

/// Reads the file, applies environment overrides, validates, parses.
[[nodiscard]] RunConfig load_config(const std::filesystem::path& path);

/// Builds the windowed dataset the config describes. Relative paths resolve
/// against base_dir.
[[nodiscard]] SeriesDataset load_dataset(const RunConfig& cfg, const std::filesystem::path& base_dir = {});

/// Coarse input and (when available) true fine series, before windowing.
struct SourceSeries {
  TimeSeries input;
  std::optional<TimeSeries> reference;
};
[[nodiscard]] SourceSeries load_source(const RunConfig& cfg, const std::filesystem::path& base_dir = {});

}  // namespace tssr::cli
