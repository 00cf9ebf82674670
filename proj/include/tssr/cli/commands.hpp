#pragma once

// Subcommands of the tssr tool and the pipeline pieces they share.

#include "tssr/cli/config.hpp"
#include "tssr/metrics.hpp"
#include "tssr/training.hpp"

#include <filesystem>
#include <functional>
#include <limits>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

namespace tssr::cli {

/// Process exit code for an error category; 1 for anything unexpected.
[[nodiscard]] int exit_code(ErrorKind kind);

/// Metrics over the concatenation of every window in a split, in the
/// original units. The upsampler maps a normalized coarse window to a
/// normalized fine one.
[[nodiscard]] MetricReport split_metrics(const SeriesDataset& data, Split split,
                                         const std::function<TimeSeries(const Window&)>& upsampler);

struct MetricRow {
  std::string method;  // attention mode, "Linear" or "Gauss"
  int phase = 0;       // 0 for the static references
  MetricReport train, test;
  double test_total = std::numeric_limits<double>::quiet_NaN();  // best test L_total, model rows only
};

/// method,phase,split,rmse,mae,pcc,n
void write_metrics_csv(const std::filesystem::path& path, const std::vector<MetricRow>& rows);
/// group,method,phase,train_rmse,train_mae,train_pcc,test_rmse,test_mae,test_pcc,test_total
void write_grid_csv(const std::filesystem::path& path, const std::vector<MetricRow>& rows);

/// Static rows: linear interpolation and the GP upsampler.
[[nodiscard]] std::vector<MetricRow> baseline_rows(const SeriesDataset& data, const GpConfig& gp);

struct TrainOutcome {
  RunHistory history;
  std::vector<PhaseResult> phases;
  std::vector<MetricRow> rows;  // one per trained phase at its best state; empty without a reference
  std::size_t audit_violations = 0;
};

/// Trains the given phases (ascending, contiguous) into run_dir. Starting
/// after phase 1 loads phase<k-1>/best.ckpt from run_dir. Writes
/// phase<k>/best.ckpt, phase<k>/history.csv, phase<k>/timing.csv, the
/// merged history.csv and config.json.
TrainOutcome train_run(const RunConfig& cfg, const SeriesDataset& data, const std::filesystem::path& run_dir,
                       const std::vector<int>& phases, std::ostream* log = nullptr);

struct AblationOutcome {
  std::vector<AttentionMode> modes;
  std::vector<TrainOutcome> runs;
  std::vector<MetricRow> rows;  // static rows first, then phase-major model rows
  std::filesystem::path grid;
  std::size_t audit_violations = 0;
  std::size_t reference_reads = 0;
};

/// Every configured attention mode through all three phases, one
/// subdirectory per mode, plus ablation.csv and audit.json in run_dir.
AblationOutcome ablate_run(const RunConfig& cfg, const SeriesDataset& data, const std::filesystem::path& run_dir,
                           std::ostream* log = nullptr);

/// Directory name used for an attention mode inside an ablation run.
[[nodiscard]] std::string mode_dir_name(AttentionMode mode);

/// Parses argv and runs one subcommand. Errors are reported on stderr and
/// mapped through exit_code.
int run(int argc, char** argv);

}  // namespace tssr::cli
