#pragma once

// Length-invariant feature-space discriminator.
//
// A stack of circularly padded 1-D convolutions produces a (T x C) feature
// map; the real/fake head only sees its per-channel temporal mean and
// standard deviation. The same parameters therefore score a coarse window
// and a fine window, and a series and its self-concatenation map to the
// same statistics.

#include "tssr/layers.hpp"
#include "tssr/timeseries.hpp"

#include <cstdint>
#include <vector>

namespace tssr {

struct DiscriminatorConfig {
  std::vector<int> channels{16, 32, 64};
  int kernel = 5;
  int head_hidden = 64;
  std::vector<int> fm_taps{-1};  // block indices tapped by feature matching; -1 = last
  double leak = 0.1;

  void validate() const;
};

struct FeatureStats {
  Vector mu;
  Vector sigma;  // population standard deviation
};

[[nodiscard]] FeatureStats feature_stats(const Matrix& features);

class Discriminator {
 public:
  Discriminator(const DiscriminatorConfig& cfg, std::uint64_t seed);
  Discriminator(const Discriminator&) = delete;
  Discriminator& operator=(const Discriminator&) = delete;

  [[nodiscard]] const DiscriminatorConfig& config() const { return cfg_; }
  [[nodiscard]] ParameterSet& parameters() { return params_; }
  [[nodiscard]] const ParameterSet& parameters() const { return params_; }

  /// series: T x 1. blocks, when given, receives every block's output.
  Var features(Tape& tape, Var series, std::vector<Var>* blocks = nullptr) const;
  /// Feature maps consumed by the feature-matching loss.
  std::vector<Var> feature_taps(Tape& tape, Var series) const;
  /// Feature maps plus the probability of all of them at once.
  Var probability(Tape& tape, Var series, std::vector<Var>* taps = nullptr) const;

  [[nodiscard]] Matrix extract_features(const TimeSeries& s) const;
  [[nodiscard]] double discriminate(const TimeSeries& s) const;

  [[nodiscard]] std::vector<Conv1d>& blocks() { return blocks_; }
  [[nodiscard]] Linear& head_hidden() { return hidden_; }
  [[nodiscard]] Linear& head_output() { return output_; }

 private:
  std::vector<Var> select_taps(const std::vector<Var>& blocks) const;
  Var head(Tape& tape, Var features) const;

  DiscriminatorConfig cfg_;
  ParameterSet params_;
  Rng rng_;
  std::vector<Conv1d> blocks_;
  Linear hidden_;
  Linear output_;
};

}  // namespace tssr
