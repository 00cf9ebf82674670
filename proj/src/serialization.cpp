#include "tssr/serialization.hpp"

#include <algorithm>

namespace tssr {

using nlohmann::json;

void check_keys(const json& j, std::initializer_list<std::string_view> allowed, const std::string& where) {
  require(j.is_object(), ErrorKind::Config, where + ": expected an object");
  for (const auto& [key, value] : j.items())
    require(std::find(allowed.begin(), allowed.end(), key) != allowed.end(), ErrorKind::Config,
            where + ": unknown key '" + key + "'");
}

json to_json(const ResamplingTask& task) {
  return {{"factor", task.factor}, {"window_samples", task.window_samples}};
}

json to_json(const GeneratorConfig& c) {
  return {{"d_model", c.d_model},
          {"n_heads", c.n_heads},
          {"n_encoder_layers", c.n_encoder_layers},
          {"n_decoder_layers", c.n_decoder_layers},
          {"feedforward_dim", c.feedforward_dim},
          {"conv_kernel", c.conv_kernel},
          {"attention_mode", std::string(to_string(c.attention_mode))},
          {"fusion_reduced", c.fusion_reduced},
          {"fusion_kernels", c.fusion_kernels},
          {"per_layer_fusion", c.per_layer_fusion},
          {"residual_init", c.residual_init},
          {"fft_bins", c.fft_bins},
          {"attention_dropout", c.attention_dropout},
          {"head_gain", c.head_gain}};
}

json to_json(const DiscriminatorConfig& c) {
  return {{"channels", c.channels},
          {"kernel", c.kernel},
          {"head_hidden", c.head_hidden},
          {"fm_taps", c.fm_taps},
          {"leak", c.leak}};
}

json to_json(const Normalization& n) { return {{"mean", n.mean}, {"stddev", n.stddev}}; }

void from_json(const json& j, ResamplingTask& t, const std::string& where) {
  check_keys(j, {"factor", "window_samples"}, where);
  read_key(j, "factor", t.factor, where);
  read_key(j, "window_samples", t.window_samples, where);
  try {
    t.validate();
  } catch (const Error& e) {
    fail(ErrorKind::Config, where + ": " + e.what());
  }
}

void from_json(const json& j, GeneratorConfig& c, const std::string& where) {
  check_keys(j,
             {"d_model", "n_heads", "n_encoder_layers", "n_decoder_layers", "feedforward_dim", "conv_kernel",
              "attention_mode", "fusion_reduced", "fusion_kernels", "per_layer_fusion", "residual_init", "fft_bins",
              "attention_dropout", "head_gain"},
             where);
  read_key(j, "d_model", c.d_model, where);
  read_key(j, "n_heads", c.n_heads, where);
  read_key(j, "n_encoder_layers", c.n_encoder_layers, where);
  read_key(j, "n_decoder_layers", c.n_decoder_layers, where);
  read_key(j, "feedforward_dim", c.feedforward_dim, where);
  read_key(j, "conv_kernel", c.conv_kernel, where);
  std::string mode(to_string(c.attention_mode));
  read_key(j, "attention_mode", mode, where);
  read_key(j, "fusion_reduced", c.fusion_reduced, where);
  read_key(j, "fusion_kernels", c.fusion_kernels, where);
  read_key(j, "per_layer_fusion", c.per_layer_fusion, where);
  read_key(j, "residual_init", c.residual_init, where);
  read_key(j, "fft_bins", c.fft_bins, where);
  read_key(j, "attention_dropout", c.attention_dropout, where);
  read_key(j, "head_gain", c.head_gain, where);
  try {
    c.attention_mode = parse_attention_mode(mode);
    c.validate();
  } catch (const Error& e) {
    fail(ErrorKind::Config, where + ": " + e.what());
  }
}

void from_json(const json& j, DiscriminatorConfig& c, const std::string& where) {
  check_keys(j, {"channels", "kernel", "head_hidden", "fm_taps", "leak"}, where);
  read_key(j, "channels", c.channels, where);
  read_key(j, "kernel", c.kernel, where);
  read_key(j, "head_hidden", c.head_hidden, where);
  read_key(j, "fm_taps", c.fm_taps, where);
  read_key(j, "leak", c.leak, where);
  try {
    c.validate();
  } catch (const Error& e) {
    fail(ErrorKind::Config, where + ": " + e.what());
  }
}

void from_json(const json& j, Normalization& n, const std::string& where) {
  check_keys(j, {"mean", "stddev"}, where);
  read_key(j, "mean", n.mean, where);
  read_key(j, "stddev", n.stddev, where);
  require(n.stddev > 0.0, ErrorKind::Config, where + ".stddev must be positive");
}

}  // namespace tssr
