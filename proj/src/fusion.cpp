#include "tssr/fusion.hpp"

#include "tssr/errors.hpp"

namespace tssr {

void FusionConfig::validate() const {
  require(in_channels >= 1 && n_inputs >= 1 && out_channels >= 1, ErrorKind::Config,
          "fusion: channel counts must be positive");
  require(reduced_channels >= 1, ErrorKind::Config, "fusion: reduced_channels must be >= 1");
  // A single input may keep its width; concatenations must shrink.
  if (n_inputs > 1)
    require(reduced_channels < concat_channels(), ErrorKind::Config,
            "fusion: reduced_channels must be below the concatenated channel count");
  else
    require(reduced_channels <= concat_channels(), ErrorKind::Config,
            "fusion: reduced_channels exceeds the input channel count");
  require(!kernel_sizes.empty(), ErrorKind::Config, "fusion: need at least one scale kernel");
  for (int k : kernel_sizes) require(k >= 1 && k % 2 == 1, ErrorKind::Config, "fusion: kernels must be odd");
  require(spatial_kernel % 2 == 1 && channel_kernel % 2 == 1, ErrorKind::Config, "fusion: gate kernels must be odd");
  require(channel_hidden >= 1, ErrorKind::Config, "fusion: channel_hidden must be >= 1");
}

namespace {
const FusionConfig& validated(const FusionConfig& cfg) {
  cfg.validate();
  return cfg;
}
}  // namespace

MsaaFusion::MsaaFusion(ParameterSet& params, const std::string& name, const FusionConfig& cfg, Rng& rng)
    : cfg_(validated(cfg)),
      reduce_(params, name + ".reduce", cfg.concat_channels(), cfg.reduced_channels, 1, rng),
      spatial_(params, name + ".spatial_gate", 2, 1, cfg.spatial_kernel, rng),
      channel1_(params, name + ".channel_gate1", 2, cfg.channel_hidden, cfg.channel_kernel, rng),
      channel2_(params, name + ".channel_gate2", cfg.channel_hidden, 1, cfg.channel_kernel, rng),
      output_(params, name + ".output", cfg.reduced_channels, cfg.out_channels, 1, rng) {
  scales_.reserve(cfg.kernel_sizes.size());
  for (int k : cfg.kernel_sizes)
    scales_.emplace_back(params, name + ".scale" + std::to_string(k), cfg.reduced_channels, cfg.reduced_channels, k, rng);
}

Var MsaaFusion::reduce_concat(Tape& tape, std::span<const Var> inputs) const {
  require(!inputs.empty(), ErrorKind::InvalidArgument, "fusion: empty input list");
  require(static_cast<int>(inputs.size()) == cfg_.n_inputs, ErrorKind::Shape,
          "fusion: expected " + std::to_string(cfg_.n_inputs) + " inputs, got " + std::to_string(inputs.size()));
  for (const Var& x : inputs) {
    require(x.rows() == inputs[0].rows(), ErrorKind::Shape, "fusion: inputs differ in time length");
    require(x.cols() == cfg_.in_channels, ErrorKind::Shape, "fusion: input channel count mismatch");
  }
  const Var cat = inputs.size() == 1 ? inputs[0] : concat_cols(inputs);
  return reduce_(tape, cat);
}

Var MsaaFusion::spatial_branch(Tape& tape, Var x, FusionTrace* trace) const {
  require(x.cols() == cfg_.reduced_channels, ErrorKind::Shape, "spatial_branch: expected reduced channel count");
  Var s = scales_[0](tape, x);
  for (std::size_t i = 1; i < scales_.size(); ++i) s = add(s, scales_[i](tape, x));
  const Var pooled[] = {row_mean(s), row_max(s)};
  Var ws = sigmoid(spatial_(tape, concat_cols(pooled)));
  if (unit_gates_) ws = tape.constant(Matrix::Ones(x.rows(), 1));
  if (trace != nullptr) {
    trace->multi_scale = s.value();
    trace->spatial_weights = ws.value();
  }
  return mul_col(x, ws);
}

Var MsaaFusion::channel_branch(Tape& tape, Var x, FusionTrace* trace) const {
  require(x.cols() == cfg_.reduced_channels, ErrorKind::Shape, "channel_branch: expected reduced channel count");
  // Channels become the sequence axis: (D x 2) with mean and max as two input channels.
  const Var pooled[] = {col_mean(x), col_max(x)};
  const Var along_channels = transpose(concat_rows(pooled));
  Var wc = transpose(sigmoid(channel2_(tape, channel1_(tape, along_channels))));
  if (unit_gates_) wc = tape.constant(Matrix::Ones(1, x.cols()));
  if (trace != nullptr) trace->channel_weights = wc.value();
  return mul_row(x, wc);
}

Var MsaaFusion::forward(Tape& tape, std::span<const Var> inputs, FusionTrace* trace) const {
  const Var x = reduce_concat(tape, inputs);
  if (trace != nullptr) trace->reduced = x.value();
  return output_(tape, add(spatial_branch(tape, x, trace), channel_branch(tape, x, trace)));
}

}  // namespace tssr
