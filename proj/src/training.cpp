#include "tssr/training.hpp"

#include "tssr/errors.hpp"
#include "tssr/serialization.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numeric>
#include <random>

namespace tssr {

namespace {

constexpr LossComponent kAllComponents[] = {LossComponent::Mse, LossComponent::Smoothness, LossComponent::Gradient,
                                            LossComponent::FeatureMatching};

std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t salt) {
  // splitmix64 finalizer
  std::uint64_t z = seed + 0x9E3779B97F4A7C15ULL * (salt + 1);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

}  // namespace

// ---------------------------------------------------------------------------
// GanModel

GanModel::GanModel(const GeneratorConfig& gen, const DiscriminatorConfig& disc, std::uint64_t seed)
    : seed_(seed),
      gen_(std::make_unique<Generator>(gen, mix_seed(seed, 1))),
      disc_(std::make_unique<Discriminator>(disc, mix_seed(seed, 2))),
      weights_(loss_params_, std::vector<LossComponent>(std::begin(kAllComponents), std::end(kAllComponents))) {}

GanModel::Snapshot GanModel::snapshot() const {
  return Snapshot{gen_->parameters().snapshot(), disc_->parameters().snapshot(), loss_params_.snapshot(),
                  discriminator_phase};
}

void GanModel::restore(const Snapshot& s) {
  gen_->parameters().restore(s.generator);
  disc_->parameters().restore(s.discriminator);
  loss_params_.restore(s.loss);
  discriminator_phase = s.discriminator_phase;
}

Checkpoint GanModel::to_checkpoint(const nlohmann::json& metadata) const {
  Checkpoint ckpt;
  ckpt.config = {{"generator", to_json(gen_->config())},
                 {"discriminator", to_json(disc_->config())},
                 {"seed", seed_}};
  ckpt.metadata = metadata;
  ckpt.metadata["discriminator_phase"] = discriminator_phase;
  ckpt.store(gen_->parameters());
  ckpt.store(disc_->parameters());
  ckpt.store(loss_params_);
  return ckpt;
}

void GanModel::load(const Checkpoint& ckpt) {
  ckpt.load_into(gen_->parameters());
  ckpt.load_into(disc_->parameters());
  ckpt.load_into(loss_params_);
  discriminator_phase = ckpt.metadata.value("discriminator_phase", 0);
}

std::unique_ptr<GanModel> GanModel::from_checkpoint(const Checkpoint& ckpt) {
  GeneratorConfig g;
  DiscriminatorConfig d;
  from_json(ckpt.config.at("generator"), g, "checkpoint.generator");
  from_json(ckpt.config.at("discriminator"), d, "checkpoint.discriminator");
  auto model = std::make_unique<GanModel>(g, d, ckpt.config.value("seed", std::uint64_t{0}));
  model->load(ckpt);
  return model;
}

// ---------------------------------------------------------------------------
// PhasePlan

PhasePlan PhasePlan::defaults(int phase, bool retain_phase1) {
  PhasePlan p;
  p.phase = phase;
  const std::vector<LossComponent> base{LossComponent::Mse, LossComponent::Smoothness, LossComponent::Gradient};
  switch (phase) {
    case 1: p.components = base; break;
    case 2:
      p.components = base;
      p.components.push_back(LossComponent::FeatureMatching);
      break;
    case 3:
      p.components = {LossComponent::FeatureMatching};
      if (retain_phase1) p.components.insert(p.components.end(), base.begin(), base.end());
      break;
    default: fail(ErrorKind::Config, "phase must be 1, 2 or 3, got " + std::to_string(phase));
  }
  return p;
}

void PhasePlan::validate() const {
  require(phase >= 1 && phase <= 3, ErrorKind::Config, "phase must be 1, 2 or 3");
  require(epochs >= 1, ErrorKind::Config, "epochs must be positive");
  require(batch_size >= 1, ErrorKind::Config, "batch_size must be positive");
  require(lr_generator > 0 && lr_discriminator > 0, ErrorKind::Config, "learning rates must be positive");
  require(weight_decay >= 0, ErrorKind::Config, "weight_decay must be non-negative");
  require(!components.empty(), ErrorKind::Config, "phase " + std::to_string(phase) + " has no loss components");
  require(patience >= 1, ErrorKind::Config, "patience must be positive");
  if (phase == 1)
    require(!uses(LossComponent::FeatureMatching), ErrorKind::Config,
            "phase 1 cannot use feature matching: the discriminator is not trained yet");
}

bool PhasePlan::uses(LossComponent c) const { return std::find(components.begin(), components.end(), c) != components.end(); }

// ---------------------------------------------------------------------------
// RunHistory

void RunHistory::append(EpochRecord record) { records_.push_back(std::move(record)); }

std::vector<EpochRecord> RunHistory::phase_records(int phase) const {
  std::vector<EpochRecord> out;
  for (const auto& r : records_)
    if (r.phase == phase) out.push_back(r);
  return out;
}

bool RunHistory::has_phase(int phase) const {
  return std::any_of(records_.begin(), records_.end(), [&](const EpochRecord& r) { return r.phase == phase; });
}

std::optional<int> RunHistory::best_epoch(int phase) const {
  std::optional<int> best;
  double best_loss = 0.0;
  for (const auto& r : records_) {
    if (r.phase != phase) continue;
    if (!best || r.test_total < best_loss) {
      best = r.epoch;
      best_loss = r.test_total;
    }
  }
  return best;
}

double RunHistory::best_test(int phase) const {
  const auto e = best_epoch(phase);
  require(e.has_value(), ErrorKind::Precondition, "history has no epochs for phase " + std::to_string(phase));
  for (const auto& r : records_)
    if (r.phase == phase && r.epoch == *e) return r.test_total;
  fail(ErrorKind::Precondition, "inconsistent history");
}

namespace {

std::string format_double(double v) {
  if (std::isnan(v)) return "";
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::string lookup(const LossBreakdown& b, std::string_view name, bool weight) {
  for (std::size_t i = 0; i < b.names.size(); ++i)
    if (b.names[i] == name) return format_double(weight ? b.weights[i] : b.values[i]);
  return "";
}

}  // namespace

void RunHistory::write_csv(const std::filesystem::path& path) const {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::trunc);
  require(out.good(), ErrorKind::Io, "cannot write " + path.string());
  out << "phase,epoch,train_objective";
  for (LossComponent c : kAllComponents) out << ",train_" << to_string(c);
  for (LossComponent c : kAllComponents) out << ",lambda_" << to_string(c);
  out << ",test_objective";
  for (LossComponent c : kAllComponents) out << ",test_" << to_string(c);
  out << ",test_total,disc_loss,best\n";
  for (const auto& r : records_) {
    out << r.phase << ',' << r.epoch << ',' << format_double(r.train.total);
    for (LossComponent c : kAllComponents) out << ',' << lookup(r.train, to_string(c), false);
    for (LossComponent c : kAllComponents) out << ',' << lookup(r.test, to_string(c), true);  // end-of-epoch weights
    out << ',' << format_double(r.test.total);
    for (LossComponent c : kAllComponents) out << ',' << lookup(r.test, to_string(c), false);
    out << ',' << format_double(r.test_total) << ',' << format_double(r.discriminator_loss) << ',' << (best_epoch(r.phase) == r.epoch ? 1 : 0) << '\n';
  }
}

void RunHistory::write_timing_csv(const std::filesystem::path& path) const {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::trunc);
  require(out.good(), ErrorKind::Io, "cannot write " + path.string());
  out << "phase,epoch,wall_seconds\n";
  for (const auto& r : records_) out << r.phase << ',' << r.epoch << ',' << format_double(r.wall_seconds) << '\n';
}

int select_best(const RunHistory& history, int phase) {
  const auto e = history.best_epoch(phase);
  require(e.has_value(), ErrorKind::Precondition, "select_best: phase " + std::to_string(phase) + " has no epochs");
  return *e;
}

bool should_early_stop(const RunHistory& history, double phase2_best, int patience) {
  require(patience >= 1, ErrorKind::InvalidArgument, "should_early_stop: patience must be positive");
  int streak = 0;
  for (const auto& r : history.records()) {
    if (r.phase != 3) continue;
    streak = r.test_total < phase2_best ? 0 : streak + 1;
  }
  return streak >= patience;
}

// ---------------------------------------------------------------------------
// Losses for one window

namespace {

struct WindowLoss {
  CombinedLoss combined;
  Var p_real, p_fake;
};

WindowLoss build_window_loss(Tape& tape, const GanModel& model, const Window& w, int factor, const PhasePlan& plan,
                             bool want_probabilities, Rng* dropout_rng) {
  const Var out = model.generator().forward(tape, w.input.values(), factor, dropout_rng);
  const Var x_in = tape.constant(w.input.values());
  std::vector<std::pair<LossComponent, Var>> parts;
  WindowLoss wl;

  const bool fm = plan.uses(LossComponent::FeatureMatching);
  std::vector<Var> taps_in, taps_out;
  if (fm || want_probabilities) {
    const Discriminator& d = model.discriminator();
    if (want_probabilities) {
      wl.p_real = d.probability(tape, x_in, &taps_in);
      wl.p_fake = d.probability(tape, out, &taps_out);
    } else {
      taps_in = d.feature_taps(tape, x_in);
      taps_out = d.feature_taps(tape, out);
    }
  }
  for (LossComponent c : plan.components) {
    switch (c) {
      case LossComponent::Mse: parts.emplace_back(c, loss_mse(out, x_in, factor, plan.window_mode)); break;
      case LossComponent::Smoothness: parts.emplace_back(c, loss_smoothness(out)); break;
      case LossComponent::Gradient: parts.emplace_back(c, loss_gradient(out, x_in, factor, plan.window_mode)); break;
      case LossComponent::FeatureMatching: {
        Var total;
        for (std::size_t i = 0; i < taps_in.size(); ++i) {
          const Var term = loss_feature_matching(taps_in[i], taps_out[i]);
          total = total.valid() ? add(total, term) : term;
        }
        parts.emplace_back(c, total);
        break;
      }
    }
  }
  wl.combined = combine_total(tape, parts, model.weights());
  return wl;
}

void add_scaled(LossBreakdown& acc, const LossBreakdown& b, double w) {
  if (acc.names.empty()) {
    acc.names = b.names;
    acc.values.assign(b.values.size(), 0.0);
    acc.weights.assign(b.weights.size(), 0.0);
    acc.total = 0.0;
  }
  for (std::size_t i = 0; i < b.values.size(); ++i) {
    acc.values[i] += w * b.values[i];
    acc.weights[i] += w * b.weights[i];
  }
  acc.total += w * b.total;
}

}  // namespace

double data_total(const LossBreakdown& b) {
  double total = 0.0;
  for (LossComponent c : {LossComponent::Mse, LossComponent::Smoothness, LossComponent::Gradient}) {
    const auto it = std::find(b.names.begin(), b.names.end(), to_string(c));
    require(it != b.names.end(), ErrorKind::InvalidArgument,
            "data_total: breakdown lacks '" + std::string(to_string(c)) + "'");
    const auto i = static_cast<std::size_t>(it - b.names.begin());
    total += b.weights[i] * b.values[i];
  }
  return total;
}

LossBreakdown evaluate_window(const GanModel& model, const Window& window, int factor, const PhasePlan& plan,
                              double* discriminator_loss) {
  PhasePlan full = plan;
  for (LossComponent c : {LossComponent::Mse, LossComponent::Smoothness, LossComponent::Gradient})
    if (!full.uses(c)) full.components.push_back(c);
  Tape tape(false);
  const auto wl = build_window_loss(tape, model, window, factor, full, discriminator_loss != nullptr, nullptr);
  if (discriminator_loss != nullptr) *discriminator_loss = loss_discriminator(wl.p_real, wl.p_fake).scalar();
  LossBreakdown b = wl.combined.breakdown;
  b.total = 0.0;
  for (std::size_t i = 0; i < b.names.size(); ++i)
    if (plan.uses(parse_loss_component(b.names[i]))) b.total += b.weights[i] * b.values[i];
  return b;
}

LossBreakdown evaluate_split(const GanModel& model, const SeriesDataset& data, Split split, const PhasePlan& plan,
                             double* discriminator_loss) {
  const auto& windows = data.windows(split);
  require(!windows.empty(), ErrorKind::Data, "evaluate_split: split is empty");
  LossBreakdown acc;
  double d_acc = 0.0;
  const double w = 1.0 / static_cast<double>(windows.size());
  for (const auto& win : windows) {
    double d = 0.0;
    add_scaled(acc, evaluate_window(model, win, data.task().factor, plan, discriminator_loss ? &d : nullptr), w);
    d_acc += w * d;
  }
  if (discriminator_loss != nullptr) *discriminator_loss = d_acc;
  return acc;
}

// ---------------------------------------------------------------------------
// run_phase

PhaseResult run_phase(const PhasePlan& plan, GanModel& model, const SeriesDataset& data, RunHistory& history,
                      const PhaseOptions& options) {
  plan.validate();
  require(!data.train().empty(), ErrorKind::Precondition, "run_phase: training split is empty");
  require(!data.test().empty(), ErrorKind::Precondition, "run_phase: test split is empty");
  if (plan.phase == 3)
    require(model.discriminator_phase >= 2, ErrorKind::Precondition,
            "phase 3 requires a discriminator trained in phase 2; load a phase-2 checkpoint first");

  const int factor = data.task().factor;
  const LossPathGuard guard;

  AdamW opt_g(AdamWConfig{plan.lr_generator, 0.9, 0.999, 1e-8, plan.weight_decay});
  opt_g.add(model.generator().parameters());
  opt_g.add(model.loss_parameters());
  AdamW opt_d(AdamWConfig{plan.lr_discriminator, 0.9, 0.999, 1e-8, plan.weight_decay});
  opt_d.add(model.discriminator().parameters());

  Rng shuffle_rng(mix_seed(plan.seed, 100 + static_cast<std::uint64_t>(plan.phase)));
  Rng dropout_rng(mix_seed(plan.seed, 200 + static_cast<std::uint64_t>(plan.phase)));
  Rng* drop = model.generator().config().attention_dropout > 0 ? &dropout_rng : nullptr;

  std::optional<double> baseline = options.early_stop_baseline;
  if (!baseline && plan.phase == 3 && history.has_phase(2)) baseline = history.best_test(2);

  std::optional<std::filesystem::path> ckpt_path;
  if (options.run_dir) ckpt_path = *options.run_dir / ("phase" + std::to_string(plan.phase)) / "best.ckpt";

  const auto last_good = [&]() -> std::string {
    return ckpt_path && std::filesystem::exists(*ckpt_path) ? ckpt_path->string() : std::string("none");
  };
  const auto check_finite = [&](bool ok, const std::string& what, int epoch) {
    require(ok, ErrorKind::Numerical,
            "phase " + std::to_string(plan.phase) + " epoch " + std::to_string(epoch) + ": non-finite " + what +
                "; training aborted, last good checkpoint: " + last_good());
  };

  const bool train_disc = plan.phase == 2;
  if (train_disc) model.discriminator_phase = 2;

  RunHistory phase_history;
  GanModel::Snapshot best = model.snapshot();
  std::optional<double> best_loss;
  PhaseResult result;
  result.phase = plan.phase;

  std::vector<std::size_t> order(data.train().size());
  std::iota(order.begin(), order.end(), std::size_t{0});

  for (int epoch = 1; epoch <= plan.epochs; ++epoch) {
    const auto t0 = std::chrono::steady_clock::now();
    if (plan.shuffle) std::shuffle(order.begin(), order.end(), shuffle_rng);

    EpochRecord rec;
    rec.phase = plan.phase;
    rec.epoch = epoch;
    double d_sum = 0.0;
    const double per_sample = 1.0 / static_cast<double>(order.size());

    for (std::size_t start = 0; start < order.size(); start += static_cast<std::size_t>(plan.batch_size)) {
      const std::size_t end = std::min(order.size(), start + static_cast<std::size_t>(plan.batch_size));
      const double bw = 1.0 / static_cast<double>(end - start);

      if (train_disc) {
        // Generator output enters as a constant: no gradient reaches the generator.
        GradientAccumulator acc;
        for (std::size_t i = start; i < end; ++i) {
          const Window& w = data.train()[order[i]];
          Tape inference(false);
          const Matrix fake = model.generator().forward(inference, w.input.values(), factor, drop).value();
          Tape tape;
          const Var p_real = model.discriminator().probability(tape, tape.constant(w.input.values()));
          const Var p_fake = model.discriminator().probability(tape, tape.constant(fake));
          const Var ld = loss_discriminator(p_real, p_fake);
          check_finite(std::isfinite(ld.scalar()), "discriminator loss", epoch);
          tape.backward(ld);
          acc.accumulate(tape, bw);
          d_sum += per_sample * ld.scalar();
        }
        check_finite(acc.all_finite(), "discriminator gradient", epoch);
        opt_d.step(acc);
      }

      GradientAccumulator acc;
      for (std::size_t i = start; i < end; ++i) {
        const Window& w = data.train()[order[i]];
        Tape tape;
        const bool probs = plan.phase == 3;
        const auto wl = build_window_loss(tape, model, w, factor, plan, probs, drop);
        check_finite(std::isfinite(wl.combined.breakdown.total), "generator loss", epoch);
        tape.backward(wl.combined.total);
        acc.accumulate(tape, bw);
        add_scaled(rec.train, wl.combined.breakdown, per_sample);
        if (probs) d_sum += per_sample * loss_discriminator(wl.p_real, wl.p_fake).scalar();
      }
      check_finite(acc.all_finite(), "generator gradient", epoch);
      opt_g.step(acc);
    }
    if (plan.phase >= 2) rec.discriminator_loss = d_sum;

    rec.test = evaluate_split(model, data, Split::Test, plan);
    rec.test_total = data_total(rec.test);
    check_finite(std::isfinite(rec.test.total) && std::isfinite(rec.test_total), "test loss", epoch);
    rec.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();

    if (!best_loss || rec.test_total < *best_loss) {
      best_loss = rec.test_total;
      best = model.snapshot();
      result.best_epoch = epoch;
      if (ckpt_path) {
        nlohmann::json meta = options.run_metadata;
        meta["phase"] = plan.phase;
        meta["epoch"] = epoch;
        meta["test_total"] = rec.test_total;
        meta["task"] = to_json(data.task());
        meta["normalization"] = to_json(data.normalization());
        save_checkpoint(*ckpt_path, model.to_checkpoint(meta));
      }
    }
    history.append(rec);
    phase_history.append(rec);
    result.epochs_run = epoch;
    if (options.on_epoch) options.on_epoch(rec);

    if (plan.phase == 3 && baseline && should_early_stop(phase_history, *baseline, plan.patience)) {
      result.stopped_early = true;
      break;
    }
  }

  model.restore(best);
  result.best_test = *best_loss;
  result.checkpoint = ckpt_path;
  return result;
}

}  // namespace tssr
