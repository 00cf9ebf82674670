#pragma once

// Uniformly sampled scalar series, resolution transforms, and the windowed
// dataset that training consumes.

#include "tssr/autodiff.hpp"

#include <atomic>
#include <cstdint>
#include <filesystem>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace tssr {

/// Timestamps are implicit: t_k = start_time + k * step.
class TimeSeries {
 public:
  TimeSeries(Vector values, double step, double start_time = 0.0, std::string name = {});

  [[nodiscard]] const Vector& values() const { return values_; }
  [[nodiscard]] double step() const { return step_; }
  [[nodiscard]] double start_time() const { return start_time_; }
  [[nodiscard]] const std::string& name() const { return name_; }
  [[nodiscard]] Index size() const { return values_.size(); }
  [[nodiscard]] double operator[](Index k) const { return values_(k); }
  [[nodiscard]] double time_at(Index k) const { return start_time_ + static_cast<double>(k) * step_; }

  [[nodiscard]] TimeSeries slice(Index start, Index count) const;
  [[nodiscard]] TimeSeries with_values(Vector values) const;

 private:
  Vector values_;
  double step_;
  double start_time_;
  std::string name_;
};

struct ResamplingTask {
  int factor = 3;
  int window_samples = 96;

  void validate() const;
  [[nodiscard]] int output_samples() const { return window_samples * factor; }
};

enum class BlockMode { Mean, Point };

[[nodiscard]] BlockMode parse_block_mode(std::string_view text);
[[nodiscard]] std::string_view to_string(BlockMode mode);

// --- ingestion -----------------------------------------------------------

/// Reads a CSV with a timestamp first column (ISO-8601 or integer epoch
/// seconds) and named numeric columns. step_hint <= 0 disables the step check.
[[nodiscard]] TimeSeries load_csv(const std::filesystem::path& path, const std::string& column, double step_hint = 0.0);
void write_csv(const std::filesystem::path& path, const TimeSeries& s, const std::string& column = "value");

/// Parses "2023-05-01T00:15:00", "2023-05-01 00:15:00Z", "...+02:00" or plain epoch seconds.
[[nodiscard]] double parse_timestamp(std::string_view text);

// --- resolution transforms -----------------------------------------------

[[nodiscard]] TimeSeries downsample(const TimeSeries& s, int factor, BlockMode mode);

/// Linear interpolation onto a grid factor-times finer. The output has
/// n * factor samples; the segment after the last anchor holds its value.
[[nodiscard]] TimeSeries linear_init(const TimeSeries& s, int factor);
[[nodiscard]] Vector linear_init(const Vector& values, int factor);

/// Collapses a fine series back onto the coarse grid (the Window operator).
[[nodiscard]] TimeSeries window_align(const TimeSeries& fine, int factor, BlockMode mode = BlockMode::Point);

// --- synthetic waveforms --------------------------------------------------

enum class WaveformKind { Line, Square, Sine, Triangle };

[[nodiscard]] WaveformKind parse_waveform_kind(std::string_view text);

[[nodiscard]] TimeSeries synth_waveform(WaveformKind kind, Index n, double period, double amplitude, double noise_std,
                                        std::uint64_t seed, double step = 900.0);

struct WaveformComponent {
  WaveformKind kind = WaveformKind::Sine;
  double period = 96;  // samples
  double amplitude = 1.0;
};

/// Noise-free sum of components plus Gaussian noise of the given std.
[[nodiscard]] TimeSeries synth_mixture(std::span<const WaveformComponent> components, Index n, double noise_std,
                                       std::uint64_t seed, double step = 900.0);

// --- dataset --------------------------------------------------------------

struct Normalization {
  double mean = 0.0;
  double stddev = 1.0;

  [[nodiscard]] Vector apply(const Vector& v) const { return (v.array() - mean) / stddev; }
  [[nodiscard]] Vector invert(const Vector& v) const { return v.array() * stddev + mean; }
};

/// Marks the current thread as computing a training loss. Reading a reference
/// window while any guard is alive is an audit violation.
class LossPathGuard {
 public:
  LossPathGuard();
  ~LossPathGuard();
  LossPathGuard(const LossPathGuard&) = delete;
  LossPathGuard& operator=(const LossPathGuard&) = delete;
  [[nodiscard]] static bool active();
};

struct Window {
  TimeSeries input;  // normalized, coarse
  TimeSeries init;   // linear_init(input), fine
};

enum class Split { Train, Test };

class SeriesDataset {
 public:
  SeriesDataset(ResamplingTask task, Normalization norm, std::vector<Window> train, std::vector<Window> test,
                std::vector<TimeSeries> train_reference, std::vector<TimeSeries> test_reference);

  [[nodiscard]] const ResamplingTask& task() const { return task_; }
  [[nodiscard]] const Normalization& normalization() const { return norm_; }
  [[nodiscard]] const std::vector<Window>& train() const { return train_; }
  [[nodiscard]] const std::vector<Window>& test() const { return test_; }
  [[nodiscard]] const std::vector<Window>& windows(Split split) const { return split == Split::Train ? train_ : test_; }

  [[nodiscard]] bool has_reference() const { return !train_ref_.empty(); }
  /// Normalized high-resolution reference; evaluation only.
  [[nodiscard]] const TimeSeries& reference(Split split, std::size_t index) const;

  [[nodiscard]] std::size_t audit_violations() const { return audit_->violations.load(); }
  [[nodiscard]] std::size_t reference_reads() const { return audit_->reads.load(); }

 private:
  struct Audit {
    std::atomic<std::size_t> violations{0};
    std::atomic<std::size_t> reads{0};
  };
  ResamplingTask task_;
  Normalization norm_;
  std::vector<Window> train_;
  std::vector<Window> test_;
  std::vector<TimeSeries> train_ref_;
  std::vector<TimeSeries> test_ref_;
  std::shared_ptr<Audit> audit_;
};

/// Tiles s into non-overlapping windows, splits them chronologically and fits
/// a z-score on the train inputs.
[[nodiscard]] SeriesDataset make_dataset(const TimeSeries& s, const ResamplingTask& task, double split_fraction = 0.8,
                                         const std::optional<TimeSeries>& reference = std::nullopt);

}  // namespace tssr
