#pragma once

// Three-phase training:
//   1. generator pre-training on the data-consistency losses,
//   2. joint training: a discriminator step on BCE, then a generator step on
//      the weighted total plus feature matching,
//   3. the frozen discriminator serves as a feature extractor.
// Each phase keeps its own best-on-test checkpoint. The high-resolution
// reference is never read while a loss is being computed.

#include "tssr/checkpoint.hpp"
#include "tssr/discriminator.hpp"
#include "tssr/generator.hpp"
#include "tssr/losses.hpp"
#include "tssr/optimizer.hpp"
#include "tssr/timeseries.hpp"

#include <cstdint>
#include <filesystem>
#include <functional>
#include <limits>
#include <memory>
#include <optional>
#include <vector>

namespace tssr {

/// Generator, discriminator and learnable loss weights trained together.
class GanModel {
 public:
  GanModel(const GeneratorConfig& gen, const DiscriminatorConfig& disc, std::uint64_t seed);

  [[nodiscard]] Generator& generator() { return *gen_; }
  [[nodiscard]] const Generator& generator() const { return *gen_; }
  [[nodiscard]] Discriminator& discriminator() { return *disc_; }
  [[nodiscard]] const Discriminator& discriminator() const { return *disc_; }
  [[nodiscard]] ParameterSet& loss_parameters() { return loss_params_; }
  [[nodiscard]] const LossWeights& weights() const { return weights_; }
  [[nodiscard]] std::uint64_t seed() const { return seed_; }

  /// Last phase that trained the discriminator (0 = untrained).
  int discriminator_phase = 0;

  struct Snapshot {
    std::vector<Matrix> generator, discriminator, loss;
    int discriminator_phase = 0;
  };
  [[nodiscard]] Snapshot snapshot() const;
  void restore(const Snapshot& s);

  /// Config echo plus every tensor; metadata is merged into the header.
  [[nodiscard]] Checkpoint to_checkpoint(const nlohmann::json& metadata = nlohmann::json::object()) const;
  void load(const Checkpoint& ckpt);
  [[nodiscard]] static std::unique_ptr<GanModel> from_checkpoint(const Checkpoint& ckpt);

 private:
  std::uint64_t seed_;
  std::unique_ptr<Generator> gen_;
  std::unique_ptr<Discriminator> disc_;
  ParameterSet loss_params_;
  LossWeights weights_;
};

struct PhasePlan {
  int phase = 1;
  int epochs = 20;
  int batch_size = 8;
  double lr_generator = 1e-3;
  double lr_discriminator = 1e-4;
  double weight_decay = 1e-4;
  std::uint64_t seed = 0;
  std::vector<LossComponent> components;
  int patience = 5;  // phase 3 only
  BlockMode window_mode = BlockMode::Point;
  bool shuffle = true;

  /// Default component set: phase 1 = {mse, smoothness, gradient}; phase 2
  /// adds fm; phase 3 = {fm} plus the phase-1 set when retain_phase1 holds.
  [[nodiscard]] static PhasePlan defaults(int phase, bool retain_phase1 = true);
  void validate() const;
  [[nodiscard]] bool uses(LossComponent c) const;
};

/// L_total: the lambda-weighted sum of mse, smoothness and gradient. Feature
/// matching is added on top of it during training but is not part of it, so
/// the figure is comparable across phases.
[[nodiscard]] double data_total(const LossBreakdown& b);

struct EpochRecord {
  int phase = 0;
  int epoch = 0;  // 1-based within the phase
  LossBreakdown train;  // training objective, mean over the epoch's samples
  LossBreakdown test;   // every component on the test split; total = objective
  double test_total = 0.0;  // data_total(test); drives checkpoint selection
  double discriminator_loss = std::numeric_limits<double>::quiet_NaN();
  double wall_seconds = 0.0;
};

class RunHistory {
 public:
  /// Appends and moves the phase's best marker when the test loss improves
  /// strictly (ties keep the earlier epoch).
  void append(EpochRecord record);

  [[nodiscard]] const std::vector<EpochRecord>& records() const { return records_; }
  [[nodiscard]] std::vector<EpochRecord> phase_records(int phase) const;
  [[nodiscard]] bool has_phase(int phase) const;
  [[nodiscard]] std::optional<int> best_epoch(int phase) const;
  [[nodiscard]] double best_test(int phase) const;

  /// Loss columns only, so a fixed seed gives a byte-identical file.
  void write_csv(const std::filesystem::path& path) const;
  /// phase,epoch,wall_seconds.
  void write_timing_csv(const std::filesystem::path& path) const;

 private:
  std::vector<EpochRecord> records_;
};

/// Epoch (1-based) with the minimal test loss of the phase; ties go to the earliest.
[[nodiscard]] int select_best(const RunHistory& history, int phase);

/// True once the last `patience` phase-3 epochs all failed to beat the phase-2 best.
[[nodiscard]] bool should_early_stop(const RunHistory& history, double phase2_best, int patience);

struct PhaseResult {
  int phase = 0;
  int epochs_run = 0;
  int best_epoch = 0;
  double best_test = 0.0;
  bool stopped_early = false;
  std::optional<std::filesystem::path> checkpoint;
};

struct PhaseOptions {
  /// Directory receiving phase<k>/best.ckpt; no file output when empty.
  std::optional<std::filesystem::path> run_dir;
  /// Overrides the phase-2 best read from the history for early stopping.
  std::optional<double> early_stop_baseline;
  std::function<void(const EpochRecord&)> on_epoch;
  nlohmann::json run_metadata = nlohmann::json::object();
};

/// Trains one phase, appends its epochs to history and leaves the model at
/// the phase's best state.
PhaseResult run_phase(const PhasePlan& plan, GanModel& model, const SeriesDataset& data, RunHistory& history,
                      const PhaseOptions& options = {});

/// Per-window losses on an inference tape, weighted by the current lambdas.
/// The breakdown covers the plan's components plus mse, smoothness and
/// gradient; its total is the plan's objective.
[[nodiscard]] LossBreakdown evaluate_window(const GanModel& model, const Window& window, int factor,
                                            const PhasePlan& plan, double* discriminator_loss = nullptr);
/// Mean of evaluate_window over a split.
[[nodiscard]] LossBreakdown evaluate_split(const GanModel& model, const SeriesDataset& data, Split split,
                                           const PhasePlan& plan, double* discriminator_loss = nullptr);

}  // namespace tssr
