#pragma once

// Scaled dot-product attention with linear (self) or convolutional query/key
// projections. No causal mask exists anywhere in this module: every query
// sees every key.

#include "tssr/layers.hpp"

#include <optional>
#include <vector>

namespace tssr {

enum class AttentionKind { Self, Conv };

struct AttentionConfig {
  int d_model = 64;
  int n_heads = 4;
  int conv_kernel = 3;
  AttentionKind kind = AttentionKind::Self;
  double dropout = 0.0;

  void validate() const;
  [[nodiscard]] int head_dim() const { return d_model / n_heads; }
};

enum class Role { Query, Key, Value };

/// softmax(Q K^T / sqrt(d)) V for a single head. The output has one row per
/// query, which is how a coarse key sequence is read out on a fine grid.
/// When weights is non-null it receives the row-stochastic attention matrix.
Var attention_core(Var q, Var k, Var v, Matrix* weights = nullptr, Rng* dropout_rng = nullptr, double dropout = 0.0);
[[nodiscard]] Matrix attention_core(const Matrix& q, const Matrix& k, const Matrix& v);

class MultiHeadAttention {
 public:
  MultiHeadAttention(ParameterSet& params, const std::string& name, const AttentionConfig& cfg, Rng& rng);

  /// Q/K use convolution in CONV configurations; V is always linear.
  Var project(Tape& tape, Var x, Role role) const;
  Var project_linear(Tape& tape, Var x, Role role) const;
  Var project_conv(Tape& tape, Var x, Role role) const;

  /// head_weights, when given, receives one (T_q x T_kv) matrix per head.
  /// dropout_rng enables attention dropout (training only).
  Var forward(Tape& tape, Var x_q, Var x_kv, std::vector<Matrix>* head_weights = nullptr,
              Rng* dropout_rng = nullptr) const;

  [[nodiscard]] const AttentionConfig& config() const { return cfg_; }

  // Direct access for tests that pin weights.
  [[nodiscard]] Linear& linear(Role role);
  [[nodiscard]] Conv1d& conv(Role role);
  [[nodiscard]] Linear& output() { return out_; }

 private:
  AttentionConfig cfg_;
  std::optional<Linear> q_linear_, k_linear_;
  std::optional<Conv1d> q_conv_, k_conv_;
  Linear v_linear_;
  Linear out_;
};

}  // namespace tssr
