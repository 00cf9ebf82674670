#include "tssr/discriminator.hpp"

#include "tssr/errors.hpp"

namespace tssr {

void DiscriminatorConfig::validate() const {
  require(!channels.empty(), ErrorKind::Config, "discriminator: need at least one conv block");
  for (int c : channels) require(c >= 1, ErrorKind::Config, "discriminator: channel counts must be positive");
  require(kernel >= 1 && kernel % 2 == 1, ErrorKind::Config, "discriminator: kernel must be odd");
  require(head_hidden >= 1, ErrorKind::Config, "discriminator: head_hidden must be positive");
  require(!fm_taps.empty(), ErrorKind::Config, "discriminator: need at least one feature-matching tap");
  const int n = static_cast<int>(channels.size());
  for (int t : fm_taps) require(t == -1 || (t >= 0 && t < n), ErrorKind::Config, "discriminator: tap out of range");
  require(leak >= 0.0 && leak < 1.0, ErrorKind::Config, "discriminator: leak must lie in [0, 1)");
}

FeatureStats feature_stats(const Matrix& features) {
  require(features.rows() >= 1, ErrorKind::Shape, "feature_stats: empty feature map");
  FeatureStats s;
  s.mu = features.colwise().mean().transpose();
  const Matrix centered = features.rowwise() - s.mu.transpose();
  s.sigma = (centered.array().square().colwise().sum() / static_cast<double>(features.rows())).sqrt().transpose();
  return s;
}

namespace {

std::vector<Conv1d> make_blocks(ParameterSet& params, const DiscriminatorConfig& cfg, Rng& rng) {
  cfg.validate();
  std::vector<Conv1d> blocks;
  Index in = 1;
  for (std::size_t i = 0; i < cfg.channels.size(); ++i) {
    blocks.emplace_back(params, "disc.block" + std::to_string(i), in, cfg.channels[i], cfg.kernel, rng,
                        Padding::Circular);
    in = cfg.channels[i];
  }
  return blocks;
}

}  // namespace

Discriminator::Discriminator(const DiscriminatorConfig& cfg, std::uint64_t seed)
    : cfg_(cfg),
      rng_(seed),
      blocks_(make_blocks(params_, cfg_, rng_)),
      hidden_(params_, "disc.head.hidden", 2 * cfg_.channels.back(), cfg_.head_hidden, rng_),
      output_(params_, "disc.head.out", cfg_.head_hidden, 1, rng_) {}

Var Discriminator::features(Tape& tape, Var series, std::vector<Var>* blocks) const {
  require(series.cols() == 1, ErrorKind::Shape, "discriminator: series must be a single column");
  require(series.rows() >= cfg_.kernel, ErrorKind::Shape,
          "discriminator: series of " + std::to_string(series.rows()) + " samples is shorter than the kernel");
  Var x = series;
  for (const auto& block : blocks_) {
    x = leaky_swish(block(tape, x), cfg_.leak);
    if (blocks != nullptr) blocks->push_back(x);
  }
  return x;
}

std::vector<Var> Discriminator::select_taps(const std::vector<Var>& blocks) const {
  std::vector<Var> taps;
  for (int t : cfg_.fm_taps) taps.push_back(t < 0 ? blocks.back() : blocks[static_cast<std::size_t>(t)]);
  return taps;
}

std::vector<Var> Discriminator::feature_taps(Tape& tape, Var series) const {
  std::vector<Var> blocks;
  features(tape, series, &blocks);
  return select_taps(blocks);
}

Var Discriminator::head(Tape& tape, Var f) const {
  const Var stats[] = {col_mean(f), col_std(f)};
  return sigmoid(output_(tape, leaky_swish(hidden_(tape, concat_cols(stats)), cfg_.leak)));
}

Var Discriminator::probability(Tape& tape, Var series, std::vector<Var>* taps) const {
  std::vector<Var> blocks;
  const Var f = features(tape, series, &blocks);
  if (taps != nullptr) *taps = select_taps(blocks);
  return head(tape, f);
}

Matrix Discriminator::extract_features(const TimeSeries& s) const {
  Tape tape(false);
  return features(tape, tape.constant(s.values())).value();
}

double Discriminator::discriminate(const TimeSeries& s) const {
  Tape tape(false);
  return probability(tape, tape.constant(s.values())).scalar();
}

}  // namespace tssr
