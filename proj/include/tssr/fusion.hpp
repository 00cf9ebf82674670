#pragma once

// Multi-scale attention aggregation applied to (time x channel) feature maps.
//
//   X   = Conv1x1(Concat(X_1..X_N))                 reduce to D channels
//   S   = Conv_3(X) + Conv_5(X) + Conv_7(X)
//   W_s = sigmoid(Conv(Concat(mean_c S, max_c S)))  one weight per time step
//   O_s = W_s * X
//   W_c = sigmoid(Conv(Conv(Pool_t X)))             one weight per channel,
//                                                   convolving along channels
//   O_c = W_c * X
//   O   = Conv1x1(O_s + O_c)

#include "tssr/layers.hpp"

#include <span>
#include <vector>

namespace tssr {

struct FusionConfig {
  int in_channels = 64;   // channels of each input map
  int n_inputs = 2;
  int reduced_channels = 32;
  int out_channels = 64;
  std::vector<int> kernel_sizes{3, 5, 7};
  int spatial_kernel = 7;
  int channel_kernel = 3;
  int channel_hidden = 2;

  void validate() const;
  [[nodiscard]] int concat_channels() const { return in_channels * n_inputs; }
};

struct FusionTrace {
  Matrix reduced;         // X
  Matrix multi_scale;     // S
  Matrix spatial_weights;  // W_s, T x 1
  Matrix channel_weights;  // W_c, 1 x D
};

class MsaaFusion {
 public:
  MsaaFusion(ParameterSet& params, const std::string& name, const FusionConfig& cfg, Rng& rng);

  Var reduce_concat(Tape& tape, std::span<const Var> inputs) const;
  Var spatial_branch(Tape& tape, Var x, FusionTrace* trace = nullptr) const;
  Var channel_branch(Tape& tape, Var x, FusionTrace* trace = nullptr) const;
  Var forward(Tape& tape, std::span<const Var> inputs, FusionTrace* trace = nullptr) const;

  /// Test hook: replaces both sigmoid gates by 1, leaving a purely linear map.
  void set_unit_gates(bool on) { unit_gates_ = on; }

  [[nodiscard]] const FusionConfig& config() const { return cfg_; }
  [[nodiscard]] Conv1d& reduce_conv() { return reduce_; }
  [[nodiscard]] std::vector<Conv1d>& scale_convs() { return scales_; }
  [[nodiscard]] Conv1d& spatial_conv() { return spatial_; }
  [[nodiscard]] Conv1d& channel_conv1() { return channel1_; }
  [[nodiscard]] Conv1d& channel_conv2() { return channel2_; }
  [[nodiscard]] Conv1d& output_conv() { return output_; }

 private:
  FusionConfig cfg_;
  Conv1d reduce_;
  std::vector<Conv1d> scales_;
  Conv1d spatial_;
  Conv1d channel1_;
  Conv1d channel2_;
  Conv1d output_;
  bool unit_gates_ = false;
};

}  // namespace tssr
