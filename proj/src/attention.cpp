#include "tssr/attention.hpp"

#include "tssr/errors.hpp"

#include <cmath>

namespace tssr {

void AttentionConfig::validate() const {
  require(d_model >= 1 && n_heads >= 1, ErrorKind::Config, "attention: d_model and n_heads must be positive");
  require(d_model % n_heads == 0, ErrorKind::Config,
          "attention: d_model " + std::to_string(d_model) + " not divisible by n_heads " + std::to_string(n_heads));
  require(conv_kernel >= 1 && conv_kernel % 2 == 1, ErrorKind::Config, "attention: conv_kernel must be odd and >= 1");
  require(dropout >= 0.0 && dropout < 1.0, ErrorKind::Config, "attention: dropout must lie in [0, 1)");
}

Var attention_core(Var q, Var k, Var v, Matrix* weights, Rng* dropout_rng, double dropout) {
  require(q.cols() == k.cols(), ErrorKind::Shape, "attention_core: query/key width mismatch");
  require(k.rows() == v.rows(), ErrorKind::Shape, "attention_core: key/value length mismatch");
  const double inv_sqrt_d = 1.0 / std::sqrt(static_cast<double>(q.cols()));
  Var p = softmax_rows(scale(matmul_nt(q, k), inv_sqrt_d));
  if (weights != nullptr) *weights = p.value();
  if (dropout_rng != nullptr && dropout > 0.0) {
    std::bernoulli_distribution keep(1.0 - dropout);
    Matrix mask(p.rows(), p.cols());
    for (Index c = 0; c < mask.cols(); ++c)
      for (Index r = 0; r < mask.rows(); ++r) mask(r, c) = keep(*dropout_rng) ? 1.0 / (1.0 - dropout) : 0.0;
    p = hadamard(p, p.tape()->constant(std::move(mask)));
  }
  return matmul(p, v);
}

Matrix attention_core(const Matrix& q, const Matrix& k, const Matrix& v) {
  Tape tape(false);
  return attention_core(tape.constant(q), tape.constant(k), tape.constant(v)).value();
}

MultiHeadAttention::MultiHeadAttention(ParameterSet& params, const std::string& name, const AttentionConfig& cfg,
                                       Rng& rng)
    : cfg_((cfg.validate(), cfg)),
      v_linear_(params, name + ".v", cfg.d_model, cfg.d_model, rng),
      out_(params, name + ".out", cfg.d_model, cfg.d_model, rng) {
  if (cfg.kind == AttentionKind::Self) {
    q_linear_.emplace(params, name + ".q", cfg.d_model, cfg.d_model, rng);
    k_linear_.emplace(params, name + ".k", cfg.d_model, cfg.d_model, rng);
  } else {
    q_conv_.emplace(params, name + ".q_conv", cfg.d_model, cfg.d_model, cfg.conv_kernel, rng);
    k_conv_.emplace(params, name + ".k_conv", cfg.d_model, cfg.d_model, cfg.conv_kernel, rng);
  }
}

Linear& MultiHeadAttention::linear(Role role) {
  switch (role) {
    case Role::Query: require(q_linear_.has_value(), ErrorKind::Precondition, "no linear query projection"); return *q_linear_;
    case Role::Key: require(k_linear_.has_value(), ErrorKind::Precondition, "no linear key projection"); return *k_linear_;
    case Role::Value: return v_linear_;
  }
  fail(ErrorKind::InvalidArgument, "bad role");
}

Conv1d& MultiHeadAttention::conv(Role role) {
  require(role != Role::Value, ErrorKind::InvalidArgument, "values are always projected linearly");
  auto& c = role == Role::Query ? q_conv_ : k_conv_;
  require(c.has_value(), ErrorKind::Precondition, "no convolutional projection in SELF attention");
  return *c;
}

Var MultiHeadAttention::project_linear(Tape& tape, Var x, Role role) const {
  require(x.cols() == cfg_.d_model, ErrorKind::Shape, "project_linear: expected d_model columns");
  switch (role) {
    case Role::Query: require(q_linear_.has_value(), ErrorKind::Precondition, "no linear query projection"); return (*q_linear_)(tape, x);
    case Role::Key: require(k_linear_.has_value(), ErrorKind::Precondition, "no linear key projection"); return (*k_linear_)(tape, x);
    case Role::Value: return v_linear_(tape, x);
  }
  fail(ErrorKind::InvalidArgument, "bad role");
}

Var MultiHeadAttention::project_conv(Tape& tape, Var x, Role role) const {
  require(x.cols() == cfg_.d_model, ErrorKind::Shape, "project_conv: expected d_model columns");
  require(role != Role::Value, ErrorKind::InvalidArgument, "values are always projected linearly");
  const auto& c = role == Role::Query ? q_conv_ : k_conv_;
  require(c.has_value(), ErrorKind::Precondition, "no convolutional projection in SELF attention");
  return (*c)(tape, x);
}

Var MultiHeadAttention::project(Tape& tape, Var x, Role role) const {
  if (role != Role::Value && cfg_.kind == AttentionKind::Conv) return project_conv(tape, x, role);
  return project_linear(tape, x, role);
}

Var MultiHeadAttention::forward(Tape& tape, Var x_q, Var x_kv, std::vector<Matrix>* head_weights,
                                Rng* dropout_rng) const {
  require(x_q.cols() == cfg_.d_model && x_kv.cols() == cfg_.d_model, ErrorKind::Shape,
          "multi_head: inputs must have d_model columns");
  const Var q = project(tape, x_q, Role::Query);
  const Var k = project(tape, x_kv, Role::Key);
  const Var v = project(tape, x_kv, Role::Value);
  if (head_weights != nullptr) head_weights->assign(static_cast<std::size_t>(cfg_.n_heads), Matrix{});
  const Index hd = cfg_.head_dim();
  std::vector<Var> heads;
  heads.reserve(static_cast<std::size_t>(cfg_.n_heads));
  for (int h = 0; h < cfg_.n_heads; ++h) {
    Matrix* w = head_weights != nullptr ? &(*head_weights)[static_cast<std::size_t>(h)] : nullptr;
    heads.push_back(attention_core(slice_cols(q, h * hd, hd), slice_cols(k, h * hd, hd), slice_cols(v, h * hd, hd), w,
                                   dropout_rng, cfg_.dropout));
  }
  const Var merged = cfg_.n_heads == 1 ? heads[0] : concat_cols(heads);
  return out_(tape, merged);
}

}  // namespace tssr
