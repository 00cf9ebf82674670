#pragma once

// Resolution-agnostic encoder-decoder generator.
//
// The encoder embeds the coarse input and runs two branches in parallel: a
// stack of attention blocks and a learnable frequency-domain filter. Their
// outputs are fused by MSAA. The decoder embeds the linear-interpolation
// seed on the fine grid and cross-attends to the encoder output, so the
// output length is set by the query sequence alone.

#include "tssr/attention.hpp"
#include "tssr/fusion.hpp"
#include "tssr/timeseries.hpp"

#include <cstdint>
#include <memory>
#include <string>
#include <vector>

namespace tssr {

/// SELF, CONV, S+C (serial), S_C (parallel through a fusion layer).
enum class AttentionMode { Self, Conv, SerialSelfConv, ParallelSelfConv };

[[nodiscard]] AttentionMode parse_attention_mode(std::string_view text);
[[nodiscard]] std::string_view to_string(AttentionMode mode);

struct GeneratorConfig {
  int d_model = 64;
  int n_heads = 4;
  int n_encoder_layers = 2;
  int n_decoder_layers = 2;
  int feedforward_dim = 0;  // 0 -> 4 * d_model
  int conv_kernel = 3;
  AttentionMode attention_mode = AttentionMode::ParallelSelfConv;
  int fusion_reduced = 0;  // 0 -> d_model
  std::vector<int> fusion_kernels{3, 5, 7};
  bool per_layer_fusion = true;
  bool residual_init = true;  // output = x_init + head(decoder state)
  int fft_bins = 49;
  double attention_dropout = 0.0;
  double head_gain = 0.1;

  void validate() const;
  [[nodiscard]] int ff_dim() const { return feedforward_dim > 0 ? feedforward_dim : 4 * d_model; }
  [[nodiscard]] int reduced() const { return fusion_reduced > 0 ? fusion_reduced : d_model; }
};

/// Sinusoidal encoding at real-valued positions; row t uses position t * position_scale.
[[nodiscard]] Matrix positional_encoding(Index length, Index d_model, double position_scale = 1.0);

/// Frequency-domain filter: DFT along time, multiply each (bin, channel) by a
/// learnable complex gain, inverse DFT. Gains live on a fixed bin grid and are
/// mapped to any sequence length by nearest normalized frequency.
class FrequencyFilter {
 public:
  FrequencyFilter(ParameterSet& params, const std::string& name, Index bins, Index channels);
  Var operator()(Tape& tape, Var x) const;

  [[nodiscard]] Parameter& real() const { return *real_; }
  [[nodiscard]] Parameter& imag() const { return *imag_; }

 private:
  Parameter* real_;
  Parameter* imag_;
};

/// One attention sublayer (with residual) wired according to the attention mode.
class AttentionUnit {
 public:
  AttentionUnit(ParameterSet& params, const std::string& name, const GeneratorConfig& cfg, AttentionMode mode, Rng& rng);
  Var operator()(Tape& tape, Var x, Rng* dropout_rng) const;

 private:
  AttentionMode mode_;
  bool fuse_;
  std::unique_ptr<LayerNorm> norm1_, norm2_;
  std::unique_ptr<MultiHeadAttention> self_, conv_;
  std::unique_ptr<MsaaFusion> fusion_;
};

class Generator {
 public:
  Generator(const GeneratorConfig& cfg, std::uint64_t seed);
  Generator(const Generator&) = delete;
  Generator& operator=(const Generator&) = delete;

  [[nodiscard]] const GeneratorConfig& config() const { return cfg_; }
  [[nodiscard]] ParameterSet& parameters() { return params_; }
  [[nodiscard]] const ParameterSet& parameters() const { return params_; }

  /// Value projection 1 -> d_model plus sinusoidal positions.
  Var embed_input(Tape& tape, const Vector& values) const;
  Var embed_init(Tape& tape, const Vector& values, int factor) const;
  Var fft_features(Tape& tape, Var x) const;
  /// Attention-block branch of the encoder (ending in layer normalization).
  Var attention_branch(Tape& tape, Var embedded, Rng* dropout_rng = nullptr) const;
  Var encode(Tape& tape, const Vector& input, Rng* dropout_rng = nullptr) const;
  Var decode(Tape& tape, Var encoded, const Vector& x_init, int factor, Rng* dropout_rng = nullptr) const;
  /// Fine-grid output as a (len(input) * factor) x 1 column.
  Var forward(Tape& tape, const Vector& input, int factor, Rng* dropout_rng = nullptr) const;

  [[nodiscard]] Matrix encode(const TimeSeries& s) const;
  [[nodiscard]] TimeSeries generate(const TimeSeries& s, const ResamplingTask& task) const;

  // Exposed for tests that pin weights.
  [[nodiscard]] FrequencyFilter& frequency_filter() { return *fft_; }
  [[nodiscard]] Linear& input_projection() { return *input_proj_; }
  [[nodiscard]] Linear& output_head() { return *head_; }

 private:
  struct EncoderLayer {
    std::unique_ptr<AttentionUnit> attention;
    std::unique_ptr<LayerNorm> ff_norm;
    std::unique_ptr<FeedForward> ff;
  };
  struct DecoderLayer {
    std::unique_ptr<AttentionUnit> self_attention;
    std::unique_ptr<LayerNorm> cross_norm;
    std::unique_ptr<MultiHeadAttention> cross;
    std::unique_ptr<LayerNorm> ff_norm;
    std::unique_ptr<FeedForward> ff;
  };

  Var run_stack(Tape& tape, const std::vector<EncoderLayer>& stack, const LayerNorm& norm, Var x,
                Rng* dropout_rng) const;

  GeneratorConfig cfg_;
  ParameterSet params_;
  std::unique_ptr<Linear> input_proj_, init_proj_;
  std::vector<EncoderLayer> encoder_;
  std::vector<EncoderLayer> encoder_aux_;  // CONV stack when S_C fuses only at the top
  std::unique_ptr<LayerNorm> encoder_norm_, encoder_aux_norm_;
  std::unique_ptr<FrequencyFilter> fft_;
  std::unique_ptr<MsaaFusion> top_fusion_;
  std::vector<DecoderLayer> decoder_;
  std::unique_ptr<LayerNorm> decoder_norm_;
  std::unique_ptr<Linear> head_;
};

[[nodiscard]] inline TimeSeries generate(const TimeSeries& s, const ResamplingTask& task, const Generator& g) {
  return g.generate(s, task);
}

}  // namespace tssr
