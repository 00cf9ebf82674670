#include "tssr/cli/commands.hpp"

#include "tssr/baselines.hpp"
#include "tssr/checkpoint.hpp"
#include "tssr/cli/plot.hpp"
#include "tssr/errors.hpp"
#include "tssr/serialization.hpp"

#include <CLI11.hpp>

#include <cmath>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <map>
#include <sstream>

namespace tssr::cli {

namespace fs = std::filesystem;
using nlohmann::json;

int exit_code(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::Config: return 3;
    case ErrorKind::Io: return 4;
    case ErrorKind::InvalidArgument:
    case ErrorKind::Shape:
    case ErrorKind::Data:
    case ErrorKind::Degenerate: return 5;
    case ErrorKind::Numerical: return 6;
    case ErrorKind::Audit: return 7;
    case ErrorKind::Precondition: return 8;
  }
  return 1;
}

namespace {

std::string fmt(double v) {
  if (std::isnan(v)) return "";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::string pcc_text(const MetricReport& r) { return r.pcc_defined ? fmt(r.pcc) : "NA"; }

void write_text(const fs::path& path, const std::string& text) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  require(out.good(), ErrorKind::Io, "cannot write " + path.string());
  out << text;
}

std::string read_text(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  require(in.good(), ErrorKind::Io, "cannot read " + path.string());
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

TimeSeries concat(const std::vector<TimeSeries>& parts) {
  Index n = 0;
  for (const auto& p : parts) n += p.size();
  Vector v(n);
  Index at = 0;
  for (const auto& p : parts) {
    v.segment(at, p.size()) = p.values();
    at += p.size();
  }
  return TimeSeries(std::move(v), parts.front().step(), parts.front().start_time(), parts.front().name());
}

std::function<TimeSeries(const Window&)> model_upsampler(const GanModel& model, const ResamplingTask& task) {
  return [&model, task](const Window& w) { return model.generator().generate(w.input, task); };
}

MetricRow model_row(const GanModel& model, const SeriesDataset& data, AttentionMode mode, int phase, double test_total) {
  MetricRow row;
  row.method = std::string(to_string(mode));
  row.phase = phase;
  row.train = split_metrics(data, Split::Train, model_upsampler(model, data.task()));
  row.test = split_metrics(data, Split::Test, model_upsampler(model, data.task()));
  row.test_total = test_total;
  return row;
}

// Rebuilds history.csv from whichever phase<k>/history.csv files exist.
void merge_history(const fs::path& run_dir) {
  std::string merged;
  for (int k = 1; k <= 3; ++k) {
    const fs::path p = run_dir / ("phase" + std::to_string(k)) / "history.csv";
    if (!fs::exists(p)) continue;
    const std::string text = read_text(p);
    const auto eol = text.find('\n');
    merged += merged.empty() ? text : text.substr(eol == std::string::npos ? text.size() : eol + 1);
  }
  write_text(run_dir / "history.csv", merged);
}

void print_rows(std::ostream& os, const std::vector<MetricRow>& rows) {
  char buf[256];
  std::snprintf(buf, sizeof buf, "%-8s %-5s %12s %12s %10s %12s %12s %10s\n", "method", "phase", "train_rmse",
                "train_mae", "train_pcc", "test_rmse", "test_mae", "test_pcc");
  os << buf;
  for (const auto& r : rows) {
    const std::string ph = r.phase == 0 ? "-" : std::to_string(r.phase);
    const std::string tp = r.train.pcc_defined ? std::to_string(r.train.pcc).substr(0, 8) : "NA";
    const std::string sp = r.test.pcc_defined ? std::to_string(r.test.pcc).substr(0, 8) : "NA";
    std::snprintf(buf, sizeof buf, "%-8s %-5s %12.6g %12.6g %10s %12.6g %12.6g %10s\n", r.method.c_str(), ph.c_str(),
                  r.train.rmse, r.train.mae, tp.c_str(), r.test.rmse, r.test.mae, sp.c_str());
    os << buf;
  }
}

void check_model_config(const RunConfig& cfg, const Checkpoint& ckpt, const fs::path& path) {
  require(ckpt.config.contains("generator") && ckpt.config.at("generator") == tssr::to_json(cfg.generator),
          ErrorKind::Config, "checkpoint " + path.string() + " was trained with a different generator config");
  require(ckpt.config.contains("discriminator") && ckpt.config.at("discriminator") == tssr::to_json(cfg.discriminator),
          ErrorKind::Config, "checkpoint " + path.string() + " was trained with a different discriminator config");
}

fs::path checkpoint_path(const fs::path& run_dir, int phase) {
  return run_dir / ("phase" + std::to_string(phase)) / "best.ckpt";
}

Checkpoint require_checkpoint(const fs::path& path) {
  require(fs::exists(path), ErrorKind::Io, "missing checkpoint " + path.string());
  return load_checkpoint(path);
}

}  // namespace

MetricReport split_metrics(const SeriesDataset& data, Split split,
                           const std::function<TimeSeries(const Window&)>& upsampler) {
  require(data.has_reference(), ErrorKind::Precondition, "metrics need a high-resolution reference series");
  const auto& windows = data.windows(split);
  require(!windows.empty(), ErrorKind::Data, "metrics: empty split");
  const Normalization& norm = data.normalization();
  std::vector<TimeSeries> pred, ref;
  for (std::size_t i = 0; i < windows.size(); ++i) {
    const TimeSeries out = upsampler(windows[i]);
    const TimeSeries& r = data.reference(split, i);
    require(out.size() == r.size(), ErrorKind::Shape,
            "metrics: window " + std::to_string(i) + " has " + std::to_string(out.size()) + " predicted samples but " +
                std::to_string(r.size()) + " reference samples");
    pred.push_back(out.with_values(norm.invert(out.values())));
    ref.push_back(r.with_values(norm.invert(r.values())));
  }
  return evaluate_metrics(concat(pred).values(), concat(ref).values());
}

void write_metrics_csv(const fs::path& path, const std::vector<MetricRow>& rows) {
  std::string s = "method,phase,split,rmse,mae,pcc,n\n";
  for (const auto& r : rows)
    for (const auto& [name, m] : {std::pair{"train", &r.train}, std::pair{"test", &r.test}})
      s += r.method + ',' + (r.phase == 0 ? "" : std::to_string(r.phase)) + ',' + name + ',' + fmt(m->rmse) + ',' +
           fmt(m->mae) + ',' + pcc_text(*m) + ',' + std::to_string(m->n) + '\n';
  write_text(path, s);
}

void write_grid_csv(const fs::path& path, const std::vector<MetricRow>& rows) {
  std::string s = "group,method,phase,train_rmse,train_mae,train_pcc,test_rmse,test_mae,test_pcc,test_total\n";
  for (const auto& r : rows)
    s += std::string(r.phase == 0 ? "Static" : "Phase" + std::to_string(r.phase)) + ',' + r.method + ',' +
         (r.phase == 0 ? "" : std::to_string(r.phase)) + ',' + fmt(r.train.rmse) + ',' + fmt(r.train.mae) + ',' +
         pcc_text(r.train) + ',' + fmt(r.test.rmse) + ',' + fmt(r.test.mae) + ',' + pcc_text(r.test) + ',' +
         fmt(r.test_total) + '\n';
  write_text(path, s);
}

std::vector<MetricRow> baseline_rows(const SeriesDataset& data, const GpConfig& gp) {
  const int factor = data.task().factor;
  MetricRow lin{"Linear", 0, {}, {}};
  MetricRow gauss{"Gauss", 0, {}, {}};
  auto linear = [factor](const Window& w) { return upsample_linear(w.input, factor); };
  auto gaussian = [factor, &gp](const Window& w) { return upsample_gp(w.input, factor, gp); };
  lin.train = split_metrics(data, Split::Train, linear);
  lin.test = split_metrics(data, Split::Test, linear);
  gauss.train = split_metrics(data, Split::Train, gaussian);
  gauss.test = split_metrics(data, Split::Test, gaussian);
  return {lin, gauss};
}

std::string mode_dir_name(AttentionMode mode) { return std::string(to_string(mode)); }

TrainOutcome train_run(const RunConfig& cfg, const SeriesDataset& data, const fs::path& run_dir,
                       const std::vector<int>& phases, std::ostream* log) {
  require(!phases.empty(), ErrorKind::InvalidArgument, "train: no phases requested");
  for (std::size_t i = 0; i < phases.size(); ++i) {
    require(phases[i] >= 1 && phases[i] <= 3, ErrorKind::InvalidArgument, "train: phase must be 1, 2 or 3");
    require(i == 0 || phases[i] == phases[i - 1] + 1, ErrorKind::InvalidArgument,
            "train: phases must be ascending and contiguous");
  }
  fs::create_directories(run_dir);
  write_text(run_dir / "config.json", to_json(cfg).dump(2) + "\n");
  // Later phases derive from the ones retrained here; drop their stale artifacts.
  for (int k = phases.back() + 1; k <= 3; ++k) fs::remove_all(run_dir / ("phase" + std::to_string(k)));

  std::unique_ptr<GanModel> model;
  PhaseOptions options;
  options.run_dir = run_dir;
  options.run_metadata = {{"run", cfg.name}, {"seed", cfg.seed}};
  if (phases.front() == 1) {
    model = std::make_unique<GanModel>(cfg.generator, cfg.discriminator, cfg.seed);
  } else {
    const fs::path prev = checkpoint_path(run_dir, phases.front() - 1);
    const Checkpoint ckpt = require_checkpoint(prev);
    check_model_config(cfg, ckpt, prev);
    model = GanModel::from_checkpoint(ckpt);
    if (phases.front() == 3) options.early_stop_baseline = ckpt.metadata.at("test_total").get<double>();
  }
  if (log != nullptr)
    options.on_epoch = [log](const EpochRecord& r) {
      char buf[200];
      std::snprintf(buf, sizeof buf, "phase %d epoch %3d  train %.6g  test L_total %.6g%s  (%.1fs)\n", r.phase, r.epoch,
                    r.train.total, r.test_total,
                    std::isnan(r.discriminator_loss) ? "" : ("  L_D " + std::to_string(r.discriminator_loss)).c_str(),
                    r.wall_seconds);
      *log << buf << std::flush;
    };

  TrainOutcome out;
  const std::size_t violations_before = data.audit_violations();
  for (int k : phases) {
    RunHistory phase_history;
    // Early stopping compares against the phase-2 best, so keep those rows in view.
    if (k == 3 && out.history.has_phase(2))
      for (const auto& r : out.history.phase_records(2)) phase_history.append(r);
    const PhaseResult result = run_phase(cfg.phase(k), *model, data, phase_history, options);
    RunHistory only;
    for (const auto& r : phase_history.phase_records(k)) {
      only.append(r);
      out.history.append(r);
    }
    const fs::path dir = run_dir / ("phase" + std::to_string(k));
    only.write_csv(dir / "history.csv");
    only.write_timing_csv(dir / "timing.csv");
    out.phases.push_back(result);
    if (data.has_reference()) out.rows.push_back(model_row(*model, data, cfg.generator.attention_mode, k, result.best_test));
    if (log != nullptr)
      *log << "phase " << k << ": best epoch " << result.best_epoch << " of " << result.epochs_run << ", test L_total "
           << result.best_test << (result.stopped_early ? " (early stop)" : "") << "\n";
  }
  merge_history(run_dir);
  write_text(run_dir / "timing.csv", [&] {
    // Wall times live apart from history.csv so the latter stays reproducible.
    std::string s = "phase,epoch,wall_seconds\n";
    for (const auto& r : out.history.records())
      s += std::to_string(r.phase) + ',' + std::to_string(r.epoch) + ',' + fmt(r.wall_seconds) + '\n';
    return s;
  }());
  if (!out.rows.empty()) write_metrics_csv(run_dir / "metrics.csv", out.rows);
  out.audit_violations = data.audit_violations() - violations_before;
  return out;
}

AblationOutcome ablate_run(const RunConfig& cfg, const SeriesDataset& data, const fs::path& run_dir, std::ostream* log) {
  require(data.has_reference(), ErrorKind::Precondition, "ablate needs a high-resolution reference series");
  fs::create_directories(run_dir);
  write_text(run_dir / "config.json", to_json(cfg).dump(2) + "\n");
  AblationOutcome out;
  out.modes = cfg.ablation_modes;
  out.rows = baseline_rows(data, cfg.gp);
  json audit_modes = json::object();
  for (AttentionMode mode : cfg.ablation_modes) {
    RunConfig mc = cfg;
    mc.generator.attention_mode = mode;
    mc.name = cfg.name + "/" + mode_dir_name(mode);
    if (log != nullptr) *log << "== " << to_string(mode) << "\n";
    out.runs.push_back(train_run(mc, data, run_dir / mode_dir_name(mode), {1, 2, 3}, log));
    audit_modes[mode_dir_name(mode)] = {{"violations", out.runs.back().audit_violations}};
    out.audit_violations += out.runs.back().audit_violations;
  }
  for (int k = 1; k <= 3; ++k)
    for (const auto& run : out.runs)
      for (const auto& row : run.rows)
        if (row.phase == k) out.rows.push_back(row);
  out.grid = run_dir / "ablation.csv";
  write_grid_csv(out.grid, out.rows);
  out.reference_reads = data.reference_reads();
  const json audit = {{"clean", out.audit_violations == 0 && data.audit_violations() == 0},
                      {"violations", data.audit_violations()},
                      {"reference_reads", out.reference_reads},
                      {"modes", audit_modes}};
  write_text(run_dir / "audit.json", audit.dump(2) + "\n");
  return out;
}

// ---------------------------------------------------------------------------
// Command line

namespace {

struct Common {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::string out;
};

RunConfig load_with_overrides(const Common& c) {
  require(!c.config.empty(), ErrorKind::Config, "--config is required");
  RunConfig cfg = load_config(c.config);
  if (c.seed) {
    cfg.seed = *c.seed;
    for (auto& p : cfg.phases) p.seed = *c.seed;
  }
  return cfg;
}

fs::path run_dir_of(const RunConfig& cfg, const Common& c) { return c.out.empty() ? cfg.run_dir() : fs::path(c.out); }

fs::path config_base(const Common& c) { return fs::path(c.config).parent_path(); }

void add_common(CLI::App* sub, Common& c, bool config_required) {
  auto* opt = sub->add_option("--config", c.config, "run configuration (JSON)");
  if (config_required) opt->required();
  sub->add_option("--seed", c.seed, "override the configured seed");
  sub->add_option("--out", c.out, "run directory (default: <output_dir>/<name>)");
}

int cmd_prepare(const Common& c) {
  const RunConfig cfg = load_with_overrides(c);
  const fs::path dir = run_dir_of(cfg, c);
  const SourceSeries src = load_source(cfg, config_base(c));
  const SeriesDataset data = make_dataset(src.input, cfg.task, cfg.data.split, src.reference);
  write_csv(dir / "dataset" / "input.csv", src.input, cfg.data.column);
  if (src.reference) write_csv(dir / "dataset" / "reference.csv", *src.reference, cfg.data.reference_column);
  const json meta = {{"task", tssr::to_json(cfg.task)},
                     {"normalization", tssr::to_json(data.normalization())},
                     {"split", cfg.data.split},
                     {"train_windows", data.train().size()},
                     {"test_windows", data.test().size()},
                     {"input_samples", src.input.size()},
                     {"input_step", src.input.step()},
                     {"has_reference", src.reference.has_value()}};
  write_text(dir / "dataset" / "dataset.json", meta.dump(2) + "\n");
  write_text(dir / "config.json", to_json(cfg).dump(2) + "\n");
  std::cout << "prepared " << data.train().size() << " train and " << data.test().size() << " test windows in "
            << (dir / "dataset").string() << "\n";
  return 0;
}

int cmd_train(const Common& c, const std::string& phase) {
  const RunConfig cfg = load_with_overrides(c);
  std::vector<int> phases;
  if (phase == "all") phases = {1, 2, 3};
  else if (phase == "1" || phase == "2" || phase == "3") phases = {std::stoi(phase)};
  else fail(ErrorKind::InvalidArgument, "--phase must be 1, 2, 3 or all");
  const SeriesDataset data = load_dataset(cfg, config_base(c));
  const TrainOutcome out = train_run(cfg, data, run_dir_of(cfg, c), phases, &std::cout);
  if (!out.rows.empty()) print_rows(std::cout, out.rows);
  require(out.audit_violations == 0, ErrorKind::Audit, "reference data was read inside a loss computation");
  return 0;
}

int cmd_ablate(const Common& c) {
  const RunConfig cfg = load_with_overrides(c);
  const SeriesDataset data = load_dataset(cfg, config_base(c));
  const AblationOutcome out = ablate_run(cfg, data, run_dir_of(cfg, c), &std::cout);
  print_rows(std::cout, out.rows);
  std::cout << "grid written to " << out.grid.string() << "\n";
  require(out.audit_violations == 0, ErrorKind::Audit, "reference data was read inside a loss computation");
  return 0;
}

struct UpsampleArgs {
  std::string checkpoint, input, column = "value", output, method = "model";
};

int cmd_upsample(const UpsampleArgs& a) {
  const Checkpoint ckpt = require_checkpoint(a.checkpoint);
  ResamplingTask task;
  Normalization norm;
  require(ckpt.metadata.contains("task") && ckpt.metadata.contains("normalization"), ErrorKind::Data,
          "checkpoint " + a.checkpoint + " lacks task or normalization metadata");
  tssr::from_json(ckpt.metadata.at("task"), task);
  tssr::from_json(ckpt.metadata.at("normalization"), norm);
  const TimeSeries input = load_csv(a.input, a.column);
  const Index w = task.window_samples;
  require(input.size() >= w && input.size() % w == 0, ErrorKind::Shape,
          "upsample: input of " + std::to_string(input.size()) + " samples is not a whole number of " +
              std::to_string(w) + "-sample windows");

  std::unique_ptr<GanModel> model;
  if (a.method == "model") model = GanModel::from_checkpoint(ckpt);
  else require(a.method == "linear" || a.method == "gp", ErrorKind::InvalidArgument, "--method must be model, linear or gp");

  std::vector<TimeSeries> parts;
  for (Index i = 0; i < input.size() / w; ++i) {
    const TimeSeries raw = input.slice(i * w, w);
    const TimeSeries x = raw.with_values(norm.apply(raw.values()));
    TimeSeries y = a.method == "model"    ? model->generator().generate(x, task)
                   : a.method == "linear" ? upsample_linear(x, task.factor)
                                          : upsample_gp(x, task.factor);
    parts.push_back(y.with_values(norm.invert(y.values())));
  }
  const TimeSeries out = concat(parts);
  const fs::path dest = a.output.empty() ? fs::path(a.checkpoint).parent_path().parent_path() / "upsampled.csv"
                                         : fs::path(a.output);
  write_csv(dest, out, a.column);
  std::cout << "wrote " << out.size() << " samples at step " << out.step() << " s to " << dest.string() << "\n";
  return 0;
}

struct EvaluateArgs {
  std::string prediction, reference, column = "value", reference_column;
};

int cmd_evaluate(const Common& c, const EvaluateArgs& a) {
  if (!a.prediction.empty() || !a.reference.empty()) {
    require(!a.prediction.empty() && !a.reference.empty(), ErrorKind::InvalidArgument,
            "evaluate needs both --prediction and --reference");
    const TimeSeries p = load_csv(a.prediction, a.column);
    const TimeSeries r = load_csv(a.reference, a.reference_column.empty() ? a.column : a.reference_column);
    require(p.size() == r.size(), ErrorKind::Shape,
            "evaluate: prediction has " + std::to_string(p.size()) + " samples, reference " + std::to_string(r.size()));
    const MetricReport m = evaluate_metrics(p.values(), r.values());
    const fs::path dir = c.out.empty() ? fs::path(a.prediction).parent_path() : fs::path(c.out);
    write_text(dir / "evaluation.csv", "rmse,mae,pcc,n\n" + fmt(m.rmse) + ',' + fmt(m.mae) + ',' + pcc_text(m) + ',' +
                                           std::to_string(m.n) + '\n');
    std::cout << "rmse " << fmt(m.rmse) << "\nmae  " << fmt(m.mae) << "\npcc  " << pcc_text(m) << "\nn    " << m.n << "\n";
    if (!m.pcc_defined) std::cout << "note: PCC undefined for a constant series\n";
    return 0;
  }
  const RunConfig cfg = load_with_overrides(c);
  const fs::path dir = run_dir_of(cfg, c);
  const SeriesDataset data = load_dataset(cfg, config_base(c));
  std::vector<MetricRow> rows = baseline_rows(data, cfg.gp);
  for (int k = 1; k <= 3; ++k) {
    const fs::path path = checkpoint_path(dir, k);
    if (!fs::exists(path)) continue;
    const Checkpoint ckpt = load_checkpoint(path);
    const auto model = GanModel::from_checkpoint(ckpt);
    rows.push_back(model_row(*model, data, model->generator().config().attention_mode, k,
                             ckpt.metadata.value("test_total", std::nan(""))));
  }
  write_metrics_csv(dir / "metrics.csv", rows);
  print_rows(std::cout, rows);
  return 0;
}

std::vector<double> read_metric_column(const fs::path& path, const std::string& metric) {
  std::ifstream in(path);
  require(in.good(), ErrorKind::Io, "cannot read " + path.string());
  std::vector<double> out;
  std::string line;
  int column = -1;
  bool first = true;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    std::vector<std::string> cells;
    std::stringstream ss(line);
    for (std::string cell; std::getline(ss, cell, ',');) cells.push_back(cell);
    if (first) {
      first = false;
      char* end = nullptr;
      std::strtod(cells[0].c_str(), &end);
      if (end == cells[0].c_str() || *end != '\0') {  // header row
        for (std::size_t i = 0; i < cells.size(); ++i)
          if (cells[i] == metric) column = static_cast<int>(i);
        require(column >= 0 || cells.size() == 1, ErrorKind::Data, path.string() + ": no column named '" + metric + "'");
        if (column < 0) column = 0;
        continue;
      }
      column = 0;
    }
    require(static_cast<std::size_t>(column) < cells.size(), ErrorKind::Data, path.string() + ": short row '" + line + "'");
    try {
      out.push_back(std::stod(cells[static_cast<std::size_t>(column)]));
    } catch (const std::exception&) {
      fail(ErrorKind::Data, path.string() + ": not a number: '" + cells[static_cast<std::size_t>(column)] + "'");
    }
  }
  return out;
}

int cmd_significance(const Common& c, const std::string& a, const std::string& b, const std::string& metric) {
  const auto va = read_metric_column(a, metric);
  const auto vb = read_metric_column(b, metric);
  const SignificanceResult r = paired_significance(Eigen::Map<const Eigen::VectorXd>(va.data(), static_cast<Index>(va.size())),
                                                   Eigen::Map<const Eigen::VectorXd>(vb.data(), static_cast<Index>(vb.size())));
  const json j = {{"metric", metric},   {"n_runs", r.n_runs}, {"mean_diff", r.mean_diff},
                  {"t_statistic", r.t_statistic}, {"p_value", r.p_value}};
  const fs::path dir = c.out.empty() ? fs::path(a).parent_path() : fs::path(c.out);
  write_text(dir / "significance.json", j.dump(2) + "\n");
  std::cout << "runs " << r.n_runs << "\nmean difference (a - b) " << fmt(r.mean_diff) << "\nt " << fmt(r.t_statistic)
            << "\np " << fmt(r.p_value) << "\n";
  return 0;
}

struct PlotArgs {
  int phase = 3;
  int window = 0;
  std::string split = "test", mode;
};

int cmd_plot(const Common& c, const PlotArgs& a) {
  const RunConfig cfg = load_with_overrides(c);
  fs::path dir = run_dir_of(cfg, c);
  if (!a.mode.empty()) dir /= mode_dir_name(parse_attention_mode(a.mode));
  const SeriesDataset data = load_dataset(cfg, config_base(c));
  require(a.split == "train" || a.split == "test", ErrorKind::InvalidArgument, "--split must be train or test");
  const Split split = a.split == "train" ? Split::Train : Split::Test;
  const auto& windows = data.windows(split);
  require(a.window >= 0 && static_cast<std::size_t>(a.window) < windows.size(), ErrorKind::InvalidArgument,
          "--window out of range (split has " + std::to_string(windows.size()) + " windows)");
  const Window& w = windows[static_cast<std::size_t>(a.window)];
  const Normalization& norm = data.normalization();
  auto denorm = [&](const TimeSeries& s) { return s.with_values(norm.invert(s.values())); };

  const Checkpoint ckpt = require_checkpoint(checkpoint_path(dir, a.phase));
  const auto model = GanModel::from_checkpoint(ckpt);
  const int factor = data.task().factor;

  OverlayPlot plot;
  plot.title = std::string(to_string(model->generator().config().attention_mode)) + ", phase " +
               std::to_string(a.phase) + ", " + a.split + " window " + std::to_string(a.window);
  if (data.has_reference())
    plot.series.push_back({"reference", denorm(data.reference(split, static_cast<std::size_t>(a.window))), "#999999"});
  plot.series.push_back({"linear", denorm(upsample_linear(w.input, factor)), "#2ca02c", false, true});
  plot.series.push_back({"gauss", denorm(upsample_gp(w.input, factor, cfg.gp)), "#9467bd", false, true});
  plot.series.push_back({"model", denorm(model->generator().generate(w.input, data.task())), "#d62728"});
  plot.series.push_back({"input", denorm(w.input), "#1f77b4", true});
  const fs::path dest = dir / "plots" / (a.split + "_window" + std::to_string(a.window) + "_phase" +
                                         std::to_string(a.phase) + ".svg");
  write_svg(dest, plot);
  std::cout << "wrote " << dest.string() << "\n";
  return 0;
}

}  // namespace

int run(int argc, char** argv) {
  CLI::App app{"tssr: self-supervised time-series super-resolution"};
  app.require_subcommand(1);
  Common common;

  auto* prepare = app.add_subcommand("prepare", "window the configured series and cache it under the run directory");
  add_common(prepare, common, true);

  std::string phase = "all";
  auto* train = app.add_subcommand("train", "train phases 1, 2, 3 or all");
  add_common(train, common, true);
  train->add_option("--phase", phase, "1, 2, 3 or all")->capture_default_str();

  UpsampleArgs up;
  auto* upsample = app.add_subcommand("upsample", "upsample a coarse CSV with a checkpoint");
  upsample->add_option("--checkpoint", up.checkpoint, "phase<k>/best.ckpt")->required();
  upsample->add_option("--input", up.input, "coarse CSV")->required();
  upsample->add_option("--column", up.column, "value column")->capture_default_str();
  upsample->add_option("--output", up.output, "output CSV (default: <run>/upsampled.csv)");
  upsample->add_option("--method", up.method, "model, linear or gp")->capture_default_str();

  EvaluateArgs ev;
  auto* evaluate = app.add_subcommand("evaluate", "metrics of a prediction CSV, or of every method in a run");
  add_common(evaluate, common, false);
  evaluate->add_option("--prediction", ev.prediction, "predicted CSV");
  evaluate->add_option("--reference", ev.reference, "reference CSV");
  evaluate->add_option("--column", ev.column, "value column")->capture_default_str();
  evaluate->add_option("--reference-column", ev.reference_column, "reference value column (default: --column)");

  auto* ablate = app.add_subcommand("ablate", "every attention mode through all three phases");
  add_common(ablate, common, true);

  std::string sig_a, sig_b, metric = "rmse";
  auto* significance = app.add_subcommand("significance", "paired t-test between two per-run metric files");
  significance->add_option("--a", sig_a, "CSV of per-run metrics, method A")->required();
  significance->add_option("--b", sig_b, "CSV of per-run metrics, method B")->required();
  significance->add_option("--metric", metric, "column to compare")->capture_default_str();
  significance->add_option("--out", common.out, "directory for significance.json (default: next to --a)");

  PlotArgs pa;
  auto* plot = app.add_subcommand("plot", "SVG overlay of input, prediction, reference and baselines");
  add_common(plot, common, true);
  plot->add_option("--phase", pa.phase, "checkpoint phase")->capture_default_str();
  plot->add_option("--window", pa.window, "window index")->capture_default_str();
  plot->add_option("--split", pa.split, "train or test")->capture_default_str();
  plot->add_option("--mode", pa.mode, "attention mode subdirectory of an ablation run");

  auto* schema = app.add_subcommand("schema", "print the configuration schema");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? 0 : 2;
  }

  try {
    if (*prepare) return cmd_prepare(common);
    if (*train) return cmd_train(common, phase);
    if (*upsample) return cmd_upsample(up);
    if (*evaluate) return cmd_evaluate(common, ev);
    if (*ablate) return cmd_ablate(common);
    if (*significance) return cmd_significance(common, sig_a, sig_b, metric);
    if (*plot) return cmd_plot(common, pa);
    if (*schema) {
      std::cout << config_schema().dump(2) << "\n";
      return 0;
    }
  } catch (const Error& e) {
    std::cerr << "tssr: " << to_string(e.kind()) << " error: " << e.what() << "\n";
    return exit_code(e.kind());
  } catch (const std::exception& e) {
    std::cerr << "tssr: error: " << e.what() << "\n";
    return 1;
  }
  return 1;
}

}  // namespace tssr::cli
