#pragma once

// Parameterized building blocks shared by the generator and discriminator.

#include "tssr/autodiff.hpp"

#include <random>
#include <string>

namespace tssr {

using Rng = std::mt19937_64;

/// Uniform Glorot initialization scaled by gain.
[[nodiscard]] Matrix glorot_uniform(Index rows, Index cols, Index fan_in, Index fan_out, Rng& rng, double gain = 1.0);

class Linear {
 public:
  Linear(ParameterSet& params, const std::string& name, Index in, Index out, Rng& rng, double gain = 1.0);

  Var operator()(Tape& tape, Var x) const;

  [[nodiscard]] Parameter& weight() const { return *weight_; }
  [[nodiscard]] Parameter& bias() const { return *bias_; }
  [[nodiscard]] Index in_features() const { return weight_->value.rows(); }
  [[nodiscard]] Index out_features() const { return weight_->value.cols(); }

 private:
  Parameter* weight_;
  Parameter* bias_;
};

/// Same-length 1-D convolution along time. Weight layout is tap-major:
/// rows [j*in, (j+1)*in) hold the in x out matrix for tap j.
class Conv1d {
 public:
  Conv1d(ParameterSet& params, const std::string& name, Index in, Index out, int kernel, Rng& rng,
         Padding padding = Padding::Zero);

  Var operator()(Tape& tape, Var x) const;

  [[nodiscard]] Parameter& weight() const { return *weight_; }
  [[nodiscard]] Parameter& bias() const { return *bias_; }
  [[nodiscard]] int kernel() const { return kernel_; }
  [[nodiscard]] Index in_channels() const { return weight_->value.rows() / kernel_; }
  [[nodiscard]] Index out_channels() const { return weight_->value.cols(); }

  /// Center tap = w, all other taps zero: behaves as a pointwise linear map.
  void set_delta(const Matrix& w);

 private:
  Parameter* weight_;
  Parameter* bias_;
  int kernel_;
  Padding padding_;
};

class LayerNorm {
 public:
  LayerNorm(ParameterSet& params, const std::string& name, Index channels);
  Var operator()(Tape& tape, Var x) const;

 private:
  Parameter* gamma_;
  Parameter* beta_;
};

/// Position-wise Linear -> GELU -> Linear.
class FeedForward {
 public:
  FeedForward(ParameterSet& params, const std::string& name, Index d_model, Index hidden, Rng& rng);
  Var operator()(Tape& tape, Var x) const;

 private:
  Linear up_;
  Linear down_;
};

}  // namespace tssr
