#include "tssr/cli/config.hpp"

#include "tssr/errors.hpp"
#include "tssr/serialization.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdlib>
#include <fstream>

extern char** environ;

namespace tssr::cli {

using nlohmann::json;

namespace {

constexpr const char* kSchemaText = R"JSON({
  "$schema": "https://json-schema.org/draft/2020-12/schema",
  "title": "tssr run configuration",
  "type": "object",
  "additionalProperties": false,
  "properties": {
    "name": {"type": "string", "minLength": 1},
    "output_dir": {"type": "string", "minLength": 1},
    "seed": {"type": "integer", "minimum": 0},
    "task": {
      "type": "object",
      "additionalProperties": false,
      "properties": {
        "factor": {"type": "integer", "minimum": 1},
        "window_samples": {"type": "integer", "minimum": 2}
      }
    },
    "data": {
      "type": "object",
      "additionalProperties": false,
      "properties": {
        "input": {"type": "string"},
        "column": {"type": "string"},
        "reference": {"type": "string"},
        "reference_column": {"type": "string"},
        "split": {"type": "number", "exclusiveMinimum": 0, "maximum": 1},
        "downsample_mode": {"enum": ["point", "mean"]},
        "synthetic": {
          "type": "object",
          "additionalProperties": false,
          "properties": {
            "components": {
              "type": "array",
              "minItems": 1,
              "items": {
                "type": "object",
                "additionalProperties": false,
                "required": ["kind"],
                "properties": {
                  "kind": {"enum": ["line", "square", "sine", "triangle"]},
                  "period": {"type": "number", "exclusiveMinimum": 0},
                  "amplitude": {"type": "number"}
                }
              }
            },
            "days": {"type": "integer", "minimum": 1},
            "samples_per_day": {"type": "integer", "minimum": 2},
            "noise_std": {"type": "number", "minimum": 0},
            "seed": {"type": "integer", "minimum": 0}
          }
        }
      }
    },
    "generator": {
      "type": "object",
      "additionalProperties": false,
      "properties": {
        "d_model": {"type": "integer", "minimum": 1},
        "n_heads": {"type": "integer", "minimum": 1},
        "n_encoder_layers": {"type": "integer", "minimum": 1},
        "n_decoder_layers": {"type": "integer", "minimum": 1},
        "feedforward_dim": {"type": "integer", "minimum": 0},
        "conv_kernel": {"type": "integer", "minimum": 1},
        "attention_mode": {"enum": ["SELF", "CONV", "S+C", "S_C"]},
        "fusion_reduced": {"type": "integer", "minimum": 0},
        "fusion_kernels": {"type": "array", "minItems": 1, "items": {"type": "integer", "minimum": 1}},
        "per_layer_fusion": {"type": "boolean"},
        "residual_init": {"type": "boolean"},
        "fft_bins": {"type": "integer", "minimum": 1},
        "attention_dropout": {"type": "number", "minimum": 0, "maximum": 1},
        "head_gain": {"type": "number", "exclusiveMinimum": 0}
      }
    },
    "discriminator": {
      "type": "object",
      "additionalProperties": false,
      "properties": {
        "channels": {"type": "array", "minItems": 1, "items": {"type": "integer", "minimum": 1}},
        "kernel": {"type": "integer", "minimum": 1},
        "head_hidden": {"type": "integer", "minimum": 1},
        "fm_taps": {"type": "array", "minItems": 1, "items": {"type": "integer", "minimum": -1}},
        "leak": {"type": "number", "minimum": 0, "maximum": 1}
      }
    },
    "training": {
      "type": "object",
      "additionalProperties": false,
      "properties": {
        "window_mode": {"enum": ["point", "mean"]},
        "shuffle": {"type": "boolean"},
        "phase1": {"$ref": "#/$defs/phase"},
        "phase2": {"$ref": "#/$defs/phase"},
        "phase3": {"$ref": "#/$defs/phase"}
      }
    },
    "gp": {
      "type": "object",
      "additionalProperties": false,
      "properties": {
        "length_scale": {"type": "number", "minimum": 0},
        "signal_variance": {"type": "number", "exclusiveMinimum": 0},
        "noise_variance": {"type": "number", "exclusiveMinimum": 0},
        "optimize": {"type": "boolean"},
        "optimize_steps": {"type": "integer", "minimum": 1},
        "optimize_rate": {"type": "number", "exclusiveMinimum": 0}
      }
    },
    "ablation": {
      "type": "object",
      "additionalProperties": false,
      "properties": {
        "modes": {"type": "array", "minItems": 1, "items": {"enum": ["SELF", "CONV", "S+C", "S_C"]}}
      }
    }
  },
  "$defs": {
    "phase": {
      "type": "object",
      "additionalProperties": false,
      "properties": {
        "epochs": {"type": "integer", "minimum": 1},
        "batch_size": {"type": "integer", "minimum": 1},
        "lr_generator": {"type": "number", "exclusiveMinimum": 0},
        "lr_discriminator": {"type": "number", "exclusiveMinimum": 0},
        "weight_decay": {"type": "number", "minimum": 0},
        "patience": {"type": "integer", "minimum": 1},
        "components": {"type": "array", "minItems": 1, "items": {"enum": ["mse", "smoothness", "gradient", "fm"]}}
      }
    }
  }
})JSON";

std::string type_name(const json& j) {
  if (j.is_number_integer()) return "integer";
  if (j.is_number()) return "number";
  return j.type_name();
}

bool has_type(const json& j, const std::string& type) {
  if (type == "object") return j.is_object();
  if (type == "array") return j.is_array();
  if (type == "string") return j.is_string();
  if (type == "boolean") return j.is_boolean();
  if (type == "integer") return j.is_number_integer();
  if (type == "number") return j.is_number();
  if (type == "null") return j.is_null();
  fail(ErrorKind::Config, "schema: unsupported type '" + type + "'");
}

const json& resolve(const json& schema, const json& root) {
  const auto ref = schema.find("$ref");
  if (ref == schema.end()) return schema;
  const std::string text = ref->get<std::string>();
  require(text.starts_with("#/"), ErrorKind::Config, "schema: only local references are supported");
  return root.at(json::json_pointer(text.substr(1)));
}

void validate_node(const json& j, const json& schema_in, const json& root, const std::string& path) {
  const json& schema = resolve(schema_in, root);
  auto bad = [&](const std::string& what) { fail(ErrorKind::Config, "config " + path + ": " + what); };

  if (const auto t = schema.find("type"); t != schema.end() && !has_type(j, t->get<std::string>()))
    bad("expected " + t->get<std::string>() + ", got " + type_name(j));
  if (const auto e = schema.find("enum"); e != schema.end()) {
    if (std::find(e->begin(), e->end(), j) == e->end()) bad("value " + j.dump() + " not in " + e->dump());
  }
  if (j.is_number()) {
    const double v = j.get<double>();
    if (const auto m = schema.find("minimum"); m != schema.end() && v < m->get<double>())
      bad("must be >= " + m->dump());
    if (const auto m = schema.find("maximum"); m != schema.end() && v > m->get<double>())
      bad("must be <= " + m->dump());
    if (const auto m = schema.find("exclusiveMinimum"); m != schema.end() && v <= m->get<double>())
      bad("must be > " + m->dump());
    if (!std::isfinite(v)) bad("must be finite");
  }
  if (j.is_string()) {
    if (const auto m = schema.find("minLength"); m != schema.end() && j.get<std::string>().size() < m->get<std::size_t>())
      bad("string too short");
  }
  if (j.is_array()) {
    if (const auto m = schema.find("minItems"); m != schema.end() && j.size() < m->get<std::size_t>())
      bad("needs at least " + m->dump() + " items");
    if (const auto items = schema.find("items"); items != schema.end())
      for (std::size_t i = 0; i < j.size(); ++i) validate_node(j[i], *items, root, path + "[" + std::to_string(i) + "]");
  }
  if (j.is_object()) {
    const auto props = schema.find("properties");
    if (const auto req = schema.find("required"); req != schema.end())
      for (const auto& key : *req)
        if (!j.contains(key.get<std::string>())) bad("missing required key '" + key.get<std::string>() + "'");
    const auto extra = schema.find("additionalProperties");
    const bool closed = extra != schema.end() && extra->is_boolean() && !extra->get<bool>();
    for (const auto& [key, value] : j.items()) {
      if (props != schema.end() && props->contains(key))
        validate_node(value, props->at(key), root, path + "." + key);
      else if (closed)
        bad("unknown key '" + key + "'");
    }
  }
}

std::string lower(std::string s) {
  std::transform(s.begin(), s.end(), s.begin(), [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return s;
}

PhasePlan parse_phase(const json& j, int phase, const std::string& where) {
  PhasePlan p = PhasePlan::defaults(phase);
  check_keys(j, {"epochs", "batch_size", "lr_generator", "lr_discriminator", "weight_decay", "patience", "components"},
             where);
  read_key(j, "epochs", p.epochs, where);
  read_key(j, "batch_size", p.batch_size, where);
  read_key(j, "lr_generator", p.lr_generator, where);
  read_key(j, "lr_discriminator", p.lr_discriminator, where);
  read_key(j, "weight_decay", p.weight_decay, where);
  read_key(j, "patience", p.patience, where);
  if (j.contains("components")) {
    p.components.clear();
    for (const auto& c : j.at("components")) p.components.push_back(parse_loss_component(c.get<std::string>()));
  }
  return p;
}

json phase_json(const PhasePlan& p) {
  json comps = json::array();
  for (LossComponent c : p.components) comps.push_back(std::string(to_string(c)));
  return {{"epochs", p.epochs},
          {"batch_size", p.batch_size},
          {"lr_generator", p.lr_generator},
          {"lr_discriminator", p.lr_discriminator},
          {"weight_decay", p.weight_decay},
          {"patience", p.patience},
          {"components", comps}};
}

std::string waveform_name(WaveformKind k) {
  switch (k) {
    case WaveformKind::Line: return "line";
    case WaveformKind::Square: return "square";
    case WaveformKind::Sine: return "sine";
    case WaveformKind::Triangle: return "triangle";
  }
  return "?";
}

std::filesystem::path resolve_path(const std::filesystem::path& p, const std::filesystem::path& base) {
  return p.is_absolute() || base.empty() ? p : base / p;
}

}  // namespace

const json& config_schema() {
  static const json schema = json::parse(kSchemaText);
  return schema;
}

void validate_schema(const json& j, const json& schema, const std::string& path) {
  validate_node(j, schema, schema, path);
}

void apply_env_overrides(json& j, const std::vector<std::pair<std::string, std::string>>& env) {
  for (const auto& [name, raw] : env) {
    if (!name.starts_with("TSSR_") || name.size() <= 5) continue;
    std::vector<std::string> keys;
    std::string rest = name.substr(5);
    for (std::size_t pos; (pos = rest.find("__")) != std::string::npos; rest = rest.substr(pos + 2))
      keys.push_back(lower(rest.substr(0, pos)));
    keys.push_back(lower(rest));
    json* node = &j;
    for (std::size_t i = 0; i + 1 < keys.size(); ++i) {
      require(!keys[i].empty(), ErrorKind::Config, "environment override " + name + ": empty key segment");
      json& child = (*node)[keys[i]];
      if (child.is_null()) child = json::object();
      require(child.is_object(), ErrorKind::Config, "environment override " + name + ": '" + keys[i] + "' is not an object");
      node = &child;
    }
    json value = json::parse(raw, nullptr, false);
    if (value.is_discarded()) value = raw;
    (*node)[keys.back()] = std::move(value);
  }
}

std::vector<std::pair<std::string, std::string>> environment_overrides() {
  std::vector<std::pair<std::string, std::string>> out;
  for (char** e = environ; *e != nullptr; ++e) {
    const std::string entry(*e);
    const auto eq = entry.find('=');
    if (eq == std::string::npos || !entry.starts_with("TSSR_")) continue;
    out.emplace_back(entry.substr(0, eq), entry.substr(eq + 1));
  }
  std::sort(out.begin(), out.end());  // deterministic order
  return out;
}

RunConfig parse_config(const json& j) {
  validate_schema(j, config_schema());
  RunConfig c;
  read_key(j, "name", c.name, "config");
  std::string out_dir = c.output_dir.string();
  read_key(j, "output_dir", out_dir, "config");
  c.output_dir = out_dir;
  read_key(j, "seed", c.seed, "config");
  if (j.contains("task")) from_json(j.at("task"), c.task, "task");
  if (j.contains("generator")) from_json(j.at("generator"), c.generator, "generator");
  if (j.contains("discriminator")) from_json(j.at("discriminator"), c.discriminator, "discriminator");

  if (j.contains("data")) {
    const json& d = j.at("data");
    if (d.contains("input")) c.data.input = d.at("input").get<std::string>();
    if (d.contains("reference")) c.data.reference = d.at("reference").get<std::string>();
    read_key(d, "column", c.data.column, "data");
    read_key(d, "reference_column", c.data.reference_column, "data");
    read_key(d, "split", c.data.split, "data");
    if (d.contains("downsample_mode")) c.data.downsample_mode = parse_block_mode(d.at("downsample_mode").get<std::string>());
    if (d.contains("synthetic")) {
      const json& sj = d.at("synthetic");
      SyntheticSource src;
      read_key(sj, "days", src.days, "data.synthetic");
      read_key(sj, "samples_per_day", src.samples_per_day, "data.synthetic");
      read_key(sj, "noise_std", src.noise_std, "data.synthetic");
      read_key(sj, "seed", src.seed, "data.synthetic");
      if (sj.contains("components")) {
        src.components.clear();
        for (const auto& cj : sj.at("components")) {
          WaveformComponent wc;
          wc.kind = parse_waveform_kind(cj.at("kind").get<std::string>());
          read_key(cj, "period", wc.period, "data.synthetic.components");
          read_key(cj, "amplitude", wc.amplitude, "data.synthetic.components");
          src.components.push_back(wc);
        }
      }
      c.data.synthetic = src;
    }
  }
  require(c.data.input.has_value() != c.data.synthetic.has_value(), ErrorKind::Config,
          "config data: give exactly one of 'input' or 'synthetic'");
  require(c.data.split < 1.0, ErrorKind::Config, "config data.split must be < 1");

  BlockMode window_mode = BlockMode::Point;
  bool shuffle = true;
  if (j.contains("training")) {
    const json& t = j.at("training");
    if (t.contains("window_mode")) window_mode = parse_block_mode(t.at("window_mode").get<std::string>());
    read_key(t, "shuffle", shuffle, "training");
    for (int k = 1; k <= 3; ++k) {
      const std::string key = "phase" + std::to_string(k);
      if (t.contains(key)) c.phases[static_cast<std::size_t>(k - 1)] = parse_phase(t.at(key), k, "training." + key);
    }
  }
  for (auto& p : c.phases) {
    p.window_mode = window_mode;
    p.shuffle = shuffle;
    p.seed = c.seed;
    try {
      p.validate();
    } catch (const Error& e) {
      fail(ErrorKind::Config, std::string("config training: ") + e.what());
    }
  }

  if (j.contains("gp")) {
    const json& g = j.at("gp");
    read_key(g, "length_scale", c.gp.length_scale, "gp");
    read_key(g, "signal_variance", c.gp.signal_variance, "gp");
    read_key(g, "noise_variance", c.gp.noise_variance, "gp");
    read_key(g, "optimize", c.gp.optimize, "gp");
    read_key(g, "optimize_steps", c.gp.optimize_steps, "gp");
    read_key(g, "optimize_rate", c.gp.optimize_rate, "gp");
  }
  if (j.contains("ablation") && j.at("ablation").contains("modes")) {
    c.ablation_modes.clear();
    for (const auto& m : j.at("ablation").at("modes")) c.ablation_modes.push_back(parse_attention_mode(m.get<std::string>()));
  }
  return c;
}

json to_json(const RunConfig& c) {
  json data = {{"column", c.data.column},
               {"reference_column", c.data.reference_column},
               {"split", c.data.split},
               {"downsample_mode", std::string(to_string(c.data.downsample_mode))}};
  if (c.data.input) data["input"] = c.data.input->string();
  if (c.data.reference) data["reference"] = c.data.reference->string();
  if (c.data.synthetic) {
    json comps = json::array();
    for (const auto& wc : c.data.synthetic->components)
      comps.push_back({{"kind", waveform_name(wc.kind)}, {"period", wc.period}, {"amplitude", wc.amplitude}});
    data["synthetic"] = {{"components", comps},
                         {"days", c.data.synthetic->days},
                         {"samples_per_day", c.data.synthetic->samples_per_day},
                         {"noise_std", c.data.synthetic->noise_std},
                         {"seed", c.data.synthetic->seed}};
  }
  json modes = json::array();
  for (AttentionMode m : c.ablation_modes) modes.push_back(std::string(to_string(m)));
  return {{"name", c.name},
          {"output_dir", c.output_dir.string()},
          {"seed", c.seed},
          {"task", tssr::to_json(c.task)},
          {"data", data},
          {"generator", tssr::to_json(c.generator)},
          {"discriminator", tssr::to_json(c.discriminator)},
          {"training",
           {{"window_mode", std::string(to_string(c.phases[0].window_mode))},
            {"shuffle", c.phases[0].shuffle},
            {"phase1", phase_json(c.phases[0])},
            {"phase2", phase_json(c.phases[1])},
            {"phase3", phase_json(c.phases[2])}}},
          {"gp",
           {{"length_scale", c.gp.length_scale},
            {"signal_variance", c.gp.signal_variance},
            {"noise_variance", c.gp.noise_variance},
            {"optimize", c.gp.optimize},
            {"optimize_steps", c.gp.optimize_steps},
            {"optimize_rate", c.gp.optimize_rate}}},
          {"ablation", {{"modes", modes}}}};
}

RunConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  require(static_cast<bool>(in), ErrorKind::Io, "cannot open config " + path.string());
  json j = json::parse(in, nullptr, false, true);
  require(!j.is_discarded(), ErrorKind::Config, "config " + path.string() + ": not valid JSON");
  apply_env_overrides(j, environment_overrides());
  return parse_config(j);
}

SourceSeries load_source(const RunConfig& cfg, const std::filesystem::path& base_dir) {
  const DataConfig& d = cfg.data;
  if (d.synthetic) {
    const SyntheticSource& s = *d.synthetic;
    const double fine_step = 86400.0 / s.samples_per_day;
    TimeSeries fine = synth_mixture(s.components, static_cast<Index>(s.days) * s.samples_per_day, s.noise_std, s.seed,
                                    fine_step);
    return {downsample(fine, cfg.task.factor, d.downsample_mode), std::move(fine)};
  }
  SourceSeries out{load_csv(resolve_path(*d.input, base_dir), d.column), std::nullopt};
  if (d.reference) out.reference = load_csv(resolve_path(*d.reference, base_dir), d.reference_column);
  return out;
}

SeriesDataset load_dataset(const RunConfig& cfg, const std::filesystem::path& base_dir) {
  SourceSeries src = load_source(cfg, base_dir);
  return make_dataset(src.input, cfg.task, cfg.data.split, src.reference);
}

}  // namespace tssr::cli
