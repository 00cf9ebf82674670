#include "tssr/layers.hpp"

#include "tssr/errors.hpp"

#include <cmath>

namespace tssr {

Matrix glorot_uniform(Index rows, Index cols, Index fan_in, Index fan_out, Rng& rng, double gain) {
  const double limit = gain * std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
  std::uniform_real_distribution<double> dist(-limit, limit);
  Matrix m(rows, cols);
  for (Index c = 0; c < cols; ++c)
    for (Index r = 0; r < rows; ++r) m(r, c) = dist(rng);
  return m;
}

Linear::Linear(ParameterSet& params, const std::string& name, Index in, Index out, Rng& rng, double gain)
    : weight_(&params.add(name + ".weight", glorot_uniform(in, out, in, out, rng, gain))),
      bias_(&params.add(name + ".bias", Matrix::Zero(1, out), false)) {}

Var Linear::operator()(Tape& tape, Var x) const {
  require(x.cols() == in_features(), ErrorKind::Shape,
          weight_->name + ": expected " + std::to_string(in_features()) + " input columns, got " +
              std::to_string(x.cols()));
  return add_row(matmul(x, tape.parameter(*weight_)), tape.parameter(*bias_));
}

Conv1d::Conv1d(ParameterSet& params, const std::string& name, Index in, Index out, int kernel, Rng& rng,
               Padding padding)
    : weight_(&params.add(name + ".weight", glorot_uniform(kernel * in, out, kernel * in, kernel * out, rng))),
      bias_(&params.add(name + ".bias", Matrix::Zero(1, out), false)),
      kernel_(kernel),
      padding_(padding) {
  require(kernel >= 1 && kernel % 2 == 1, ErrorKind::InvalidArgument, name + ": kernel must be odd");
}

Var Conv1d::operator()(Tape& tape, Var x) const {
  require(x.cols() == in_channels(), ErrorKind::Shape,
          weight_->name + ": expected " + std::to_string(in_channels()) + " input channels, got " +
              std::to_string(x.cols()));
  return conv1d(x, tape.parameter(*weight_), tape.parameter(*bias_), kernel_, padding_);
}

void Conv1d::set_delta(const Matrix& w) {
  require(w.rows() == in_channels() && w.cols() == out_channels(), ErrorKind::Shape, "set_delta: shape mismatch");
  weight_->value.setZero();
  weight_->value.middleRows((kernel_ / 2) * in_channels(), in_channels()) = w;
}

LayerNorm::LayerNorm(ParameterSet& params, const std::string& name, Index channels)
    : gamma_(&params.add(name + ".gamma", Matrix::Ones(1, channels), false)),
      beta_(&params.add(name + ".beta", Matrix::Zero(1, channels), false)) {}

Var LayerNorm::operator()(Tape& tape, Var x) const {
  return add_row(mul_row(layer_norm_rows(x), tape.parameter(*gamma_)), tape.parameter(*beta_));
}

FeedForward::FeedForward(ParameterSet& params, const std::string& name, Index d_model, Index hidden, Rng& rng)
    : up_(params, name + ".up", d_model, hidden, rng), down_(params, name + ".down", hidden, d_model, rng) {}

Var FeedForward::operator()(Tape& tape, Var x) const { return down_(tape, gelu(up_(tape, x))); }

}  // namespace tssr
