#include "tssr/generator.hpp"

#include "tssr/errors.hpp"

#include <cmath>
#include <numbers>

namespace tssr {

AttentionMode parse_attention_mode(std::string_view text) {
  if (text == "SELF") return AttentionMode::Self;
  if (text == "CONV") return AttentionMode::Conv;
  if (text == "S+C") return AttentionMode::SerialSelfConv;
  if (text == "S_C") return AttentionMode::ParallelSelfConv;
  fail(ErrorKind::InvalidArgument, "unknown attention mode '" + std::string(text) + "' (SELF, CONV, S+C, S_C)");
}

std::string_view to_string(AttentionMode mode) {
  switch (mode) {
    case AttentionMode::Self: return "SELF";
    case AttentionMode::Conv: return "CONV";
    case AttentionMode::SerialSelfConv: return "S+C";
    case AttentionMode::ParallelSelfConv: return "S_C";
  }
  return "?";
}

void GeneratorConfig::validate() const {
  require(d_model >= 2 && d_model % 2 == 0, ErrorKind::Config, "generator: d_model must be even and >= 2");
  require(n_heads >= 1 && d_model % n_heads == 0, ErrorKind::Config, "generator: d_model not divisible by n_heads");
  require(n_encoder_layers >= 1 && n_decoder_layers >= 1, ErrorKind::Config, "generator: need >= 1 layer each");
  require(conv_kernel >= 1 && conv_kernel % 2 == 1, ErrorKind::Config, "generator: conv_kernel must be odd");
  require(fft_bins >= 1, ErrorKind::Config, "generator: fft_bins must be >= 1");
  require(feedforward_dim >= 0 && fusion_reduced >= 0, ErrorKind::Config, "generator: sizes must be non-negative");
  require(attention_dropout >= 0.0 && attention_dropout < 1.0, ErrorKind::Config, "generator: bad dropout");
}

Matrix positional_encoding(Index length, Index d_model, double position_scale) {
  Matrix pe(length, d_model);
  for (Index i = 0; i < d_model / 2; ++i) {
    const double omega = std::pow(10000.0, -2.0 * static_cast<double>(i) / static_cast<double>(d_model));
    for (Index t = 0; t < length; ++t) {
      const double angle = static_cast<double>(t) * position_scale * omega;
      pe(t, 2 * i) = std::sin(angle);
      pe(t, 2 * i + 1) = std::cos(angle);
    }
  }
  return pe;
}

// ---------------------------------------------------------------------------
// FrequencyFilter

FrequencyFilter::FrequencyFilter(ParameterSet& params, const std::string& name, Index bins, Index channels)
    : real_(&params.add(name + ".real", Matrix::Ones(bins, channels), false)),
      imag_(&params.add(name + ".imag", Matrix::Zero(bins, channels), false)) {}

Var FrequencyFilter::operator()(Tape& tape, Var x) const {
  require(x.cols() == real_->value.cols(), ErrorKind::Shape, "fft_features: channel count mismatch");
  const Index n = x.rows();
  const Index nbins = n / 2 + 1;
  const Index gbins = real_->value.rows();

  Matrix fwd_cos(nbins, n), fwd_sin(nbins, n), inv_cos(n, nbins), inv_sin(n, nbins);
  for (Index k = 0; k < nbins; ++k) {
    const bool single = k == 0 || (n % 2 == 0 && k == n / 2);
    const double w = (single ? 1.0 : 2.0) / static_cast<double>(n);
    for (Index t = 0; t < n; ++t) {
      // Reduce k*t mod n first so the angle stays small.
      const double angle = 2.0 * std::numbers::pi * static_cast<double>((k * t) % n) / static_cast<double>(n);
      const double c = std::cos(angle);
      const double s = std::sin(angle);
      fwd_cos(k, t) = c;
      fwd_sin(k, t) = -s;
      inv_cos(t, k) = w * c;
      inv_sin(t, k) = -w * s;
    }
  }
  std::vector<Index> map(static_cast<std::size_t>(nbins));
  for (Index k = 0; k < nbins; ++k)
    map[static_cast<std::size_t>(k)] =
        nbins == 1 ? 0
                   : static_cast<Index>(std::lround(static_cast<double>(k) * static_cast<double>(gbins - 1) /
                                                    static_cast<double>(nbins - 1)));

  const Var re = matmul(tape.constant(std::move(fwd_cos)), x);
  const Var im = matmul(tape.constant(std::move(fwd_sin)), x);
  const Var a = gather_rows(tape.parameter(*real_), map);
  const Var b = gather_rows(tape.parameter(*imag_), std::move(map));
  const Var y_re = sub(hadamard(a, re), hadamard(b, im));
  const Var y_im = add(hadamard(a, im), hadamard(b, re));
  return add(matmul(tape.constant(std::move(inv_cos)), y_re), matmul(tape.constant(std::move(inv_sin)), y_im));
}

// ---------------------------------------------------------------------------
// AttentionUnit

AttentionUnit::AttentionUnit(ParameterSet& params, const std::string& name, const GeneratorConfig& cfg,
                             AttentionMode mode, Rng& rng)
    : mode_(mode), fuse_(cfg.per_layer_fusion) {
  AttentionConfig acfg{cfg.d_model, cfg.n_heads, cfg.conv_kernel, AttentionKind::Self, cfg.attention_dropout};
  norm1_ = std::make_unique<LayerNorm>(params, name + ".norm1", cfg.d_model);
  if (mode != AttentionMode::Conv) self_ = std::make_unique<MultiHeadAttention>(params, name + ".self", acfg, rng);
  if (mode != AttentionMode::Self) {
    acfg.kind = AttentionKind::Conv;
    conv_ = std::make_unique<MultiHeadAttention>(params, name + ".conv", acfg, rng);
  }
  if (mode == AttentionMode::SerialSelfConv) norm2_ = std::make_unique<LayerNorm>(params, name + ".norm2", cfg.d_model);
  if (mode == AttentionMode::ParallelSelfConv && fuse_) {
    FusionConfig fcfg;
    fcfg.in_channels = cfg.d_model;
    fcfg.n_inputs = 2;
    fcfg.reduced_channels = cfg.reduced();
    fcfg.out_channels = cfg.d_model;
    fcfg.kernel_sizes = cfg.fusion_kernels;
    fusion_ = std::make_unique<MsaaFusion>(params, name + ".fusion", fcfg, rng);
  }
}

Var AttentionUnit::operator()(Tape& tape, Var x, Rng* dropout_rng) const {
  switch (mode_) {
    case AttentionMode::Self: {
      const Var h = (*norm1_)(tape, x);
      return add(x, self_->forward(tape, h, h, nullptr, dropout_rng));
    }
    case AttentionMode::Conv: {
      const Var h = (*norm1_)(tape, x);
      return add(x, conv_->forward(tape, h, h, nullptr, dropout_rng));
    }
    case AttentionMode::SerialSelfConv: {
      const Var h = (*norm1_)(tape, x);
      const Var y = add(x, self_->forward(tape, h, h, nullptr, dropout_rng));
      const Var h2 = (*norm2_)(tape, y);
      return add(y, conv_->forward(tape, h2, h2, nullptr, dropout_rng));
    }
    case AttentionMode::ParallelSelfConv: {
      const Var h = (*norm1_)(tape, x);
      const Var parts[] = {self_->forward(tape, h, h, nullptr, dropout_rng),
                           conv_->forward(tape, h, h, nullptr, dropout_rng)};
      return add(x, fusion_ ? fusion_->forward(tape, parts) : add(parts[0], parts[1]));
    }
  }
  fail(ErrorKind::InvalidArgument, "bad attention mode");
}

// ---------------------------------------------------------------------------
// Generator

Generator::Generator(const GeneratorConfig& cfg, std::uint64_t seed) : cfg_(cfg) {
  cfg_.validate();
  Rng rng(seed);
  const Index d = cfg_.d_model;
  input_proj_ = std::make_unique<Linear>(params_, "enc.embed", 1, d, rng);
  init_proj_ = std::make_unique<Linear>(params_, "dec.embed", 1, d, rng);

  const bool top_only = cfg_.attention_mode == AttentionMode::ParallelSelfConv && !cfg_.per_layer_fusion;
  const AttentionMode main_mode = top_only ? AttentionMode::Self : cfg_.attention_mode;
  for (int l = 0; l < cfg_.n_encoder_layers; ++l) {
    const std::string name = "enc.layer" + std::to_string(l);
    encoder_.push_back(EncoderLayer{std::make_unique<AttentionUnit>(params_, name + ".attn", cfg_, main_mode, rng),
                                    std::make_unique<LayerNorm>(params_, name + ".ff_norm", d),
                                    std::make_unique<FeedForward>(params_, name + ".ff", d, cfg_.ff_dim(), rng)});
  }
  encoder_norm_ = std::make_unique<LayerNorm>(params_, "enc.norm", d);
  if (top_only) {
    for (int l = 0; l < cfg_.n_encoder_layers; ++l) {
      const std::string name = "enc.aux" + std::to_string(l);
      encoder_aux_.push_back(
          EncoderLayer{std::make_unique<AttentionUnit>(params_, name + ".attn", cfg_, AttentionMode::Conv, rng),
                       std::make_unique<LayerNorm>(params_, name + ".ff_norm", d),
                       std::make_unique<FeedForward>(params_, name + ".ff", d, cfg_.ff_dim(), rng)});
    }
    encoder_aux_norm_ = std::make_unique<LayerNorm>(params_, "enc.aux_norm", d);
  }
  fft_ = std::make_unique<FrequencyFilter>(params_, "enc.fft", cfg_.fft_bins, d);

  FusionConfig fcfg;
  fcfg.in_channels = cfg_.d_model;
  fcfg.n_inputs = top_only ? 3 : 2;
  fcfg.reduced_channels = cfg_.reduced();
  fcfg.out_channels = cfg_.d_model;
  fcfg.kernel_sizes = cfg_.fusion_kernels;
  top_fusion_ = std::make_unique<MsaaFusion>(params_, "enc.fusion", fcfg, rng);

  const AttentionKind cross_kind = cfg_.attention_mode == AttentionMode::Self ? AttentionKind::Self : AttentionKind::Conv;
  for (int l = 0; l < cfg_.n_decoder_layers; ++l) {
    const std::string name = "dec.layer" + std::to_string(l);
    AttentionConfig acfg{cfg_.d_model, cfg_.n_heads, cfg_.conv_kernel, cross_kind, cfg_.attention_dropout};
    decoder_.push_back(DecoderLayer{
        std::make_unique<AttentionUnit>(params_, name + ".self", cfg_, cfg_.attention_mode, rng),
        std::make_unique<LayerNorm>(params_, name + ".cross_norm", d),
        std::make_unique<MultiHeadAttention>(params_, name + ".cross", acfg, rng),
        std::make_unique<LayerNorm>(params_, name + ".ff_norm", d),
        std::make_unique<FeedForward>(params_, name + ".ff", d, cfg_.ff_dim(), rng)});
  }
  decoder_norm_ = std::make_unique<LayerNorm>(params_, "dec.norm", d);
  head_ = std::make_unique<Linear>(params_, "dec.head", d, 1, rng, cfg_.head_gain);
}

Var Generator::embed_input(Tape& tape, const Vector& values) const {
  require(values.size() >= 2, ErrorKind::InvalidArgument, "embed: need at least 2 samples");
  const Var x = tape.constant(values);
  return add((*input_proj_)(tape, x), tape.constant(positional_encoding(values.size(), cfg_.d_model, 1.0)));
}

Var Generator::embed_init(Tape& tape, const Vector& values, int factor) const {
  require(factor >= 1, ErrorKind::InvalidArgument, "embed: factor must be positive");
  const Var x = tape.constant(values);
  // Positions in coarse-step units keep encoder and decoder time-aligned.
  return add((*init_proj_)(tape, x),
             tape.constant(positional_encoding(values.size(), cfg_.d_model, 1.0 / static_cast<double>(factor))));
}

Var Generator::fft_features(Tape& tape, Var x) const { return (*fft_)(tape, x); }

Var Generator::run_stack(Tape& tape, const std::vector<EncoderLayer>& stack, const LayerNorm& norm, Var x,
                         Rng* dropout_rng) const {
  for (const auto& layer : stack) {
    x = (*layer.attention)(tape, x, dropout_rng);
    x = add(x, (*layer.ff)(tape, (*layer.ff_norm)(tape, x)));
  }
  return norm(tape, x);
}

Var Generator::attention_branch(Tape& tape, Var embedded, Rng* dropout_rng) const {
  return run_stack(tape, encoder_, *encoder_norm_, embedded, dropout_rng);
}

Var Generator::encode(Tape& tape, const Vector& input, Rng* dropout_rng) const {
  const Var e = embed_input(tape, input);
  std::vector<Var> parts{attention_branch(tape, e, dropout_rng)};
  if (!encoder_aux_.empty()) parts.push_back(run_stack(tape, encoder_aux_, *encoder_aux_norm_, e, dropout_rng));
  parts.push_back(fft_features(tape, e));
  return top_fusion_->forward(tape, parts);
}

Var Generator::decode(Tape& tape, Var encoded, const Vector& x_init, int factor, Rng* dropout_rng) const {
  require(encoded.cols() == cfg_.d_model, ErrorKind::Shape, "decode: encoder output must have d_model columns");
  Var x = embed_init(tape, x_init, factor);
  for (const auto& layer : decoder_) {
    x = (*layer.self_attention)(tape, x, dropout_rng);
    x = add(x, layer.cross->forward(tape, (*layer.cross_norm)(tape, x), encoded, nullptr, dropout_rng));
    x = add(x, (*layer.ff)(tape, (*layer.ff_norm)(tape, x)));
  }
  Var out = (*head_)(tape, (*decoder_norm_)(tape, x));
  if (cfg_.residual_init) out = add(out, tape.constant(x_init));
  return out;
}

Var Generator::forward(Tape& tape, const Vector& input, int factor, Rng* dropout_rng) const {
  const Var enc = encode(tape, input, dropout_rng);
  return decode(tape, enc, linear_init(input, factor), factor, dropout_rng);
}

Matrix Generator::encode(const TimeSeries& s) const {
  Tape tape(false);
  return encode(tape, s.values()).value();
}

TimeSeries Generator::generate(const TimeSeries& s, const ResamplingTask& task) const {
  task.validate();
  require(s.size() == task.window_samples, ErrorKind::Shape,
          "generate: window has " + std::to_string(s.size()) + " samples, task expects " +
              std::to_string(task.window_samples));
  Tape tape(false);
  const Var out = forward(tape, s.values(), task.factor);
  return TimeSeries(out.value().col(0), s.step() / task.factor, s.start_time(), s.name());
}

}  // namespace tssr
