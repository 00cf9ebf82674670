#include "tssr/losses.hpp"

#include "tssr/errors.hpp"

#include <cmath>
#include <numbers>

namespace tssr {

std::string_view to_string(LossComponent c) {
  switch (c) {
    case LossComponent::Mse: return "mse";
    case LossComponent::Smoothness: return "smoothness";
    case LossComponent::Gradient: return "gradient";
    case LossComponent::FeatureMatching: return "fm";
  }
  return "?";
}

LossComponent parse_loss_component(std::string_view text) {
  if (text == "mse") return LossComponent::Mse;
  if (text == "smoothness") return LossComponent::Smoothness;
  if (text == "gradient") return LossComponent::Gradient;
  if (text == "fm") return LossComponent::FeatureMatching;
  fail(ErrorKind::InvalidArgument, "unknown loss component '" + std::string(text) + "'");
}

Var window_align(Var fine, int factor, BlockMode mode) {
  require(factor >= 1, ErrorKind::InvalidArgument, "window_align: factor must be positive");
  require(fine.cols() == 1, ErrorKind::Shape, "window_align: expected a single column");
  require(fine.rows() % factor == 0, ErrorKind::Shape,
          "window_align: length " + std::to_string(fine.rows()) + " not divisible by factor " + std::to_string(factor));
  const Index n = fine.rows() / factor;
  if (mode == BlockMode::Point) {
    std::vector<Index> rows(static_cast<std::size_t>(n));
    for (Index k = 0; k < n; ++k) rows[static_cast<std::size_t>(k)] = k * factor;
    return gather_rows(fine, std::move(rows));
  }
  Matrix avg = Matrix::Zero(n, fine.rows());
  for (Index k = 0; k < n; ++k) avg.block(k, k * factor, 1, factor).setConstant(1.0 / factor);
  return matmul(fine.tape()->constant(std::move(avg)), fine);
}

Var first_difference(Var x) {
  require(x.rows() >= 2, ErrorKind::Shape, "first_difference: need >= 2 rows");
  return sub(slice_rows(x, 1, x.rows() - 1), slice_rows(x, 0, x.rows() - 1));
}

namespace {
void check_lengths(Var x_out, Var x_in, int factor, const char* op) {
  require(x_out.cols() == 1 && x_in.cols() == 1, ErrorKind::Shape, std::string(op) + ": expected column series");
  require(x_out.rows() == x_in.rows() * factor, ErrorKind::Shape,
          std::string(op) + ": output length " + std::to_string(x_out.rows()) + " != input length " +
              std::to_string(x_in.rows()) + " * factor " + std::to_string(factor));
}
}  // namespace

Var loss_mse(Var x_out, Var x_in, int factor, BlockMode mode) {
  check_lengths(x_out, x_in, factor, "loss_mse");
  return mean(square(sub(window_align(x_out, factor, mode), x_in)));
}

Var loss_smoothness(Var x_out) {
  require(x_out.rows() >= 3, ErrorKind::Shape, "loss_smoothness: need >= 3 samples");
  return mean(square(first_difference(first_difference(x_out))));
}

Var loss_gradient(Var x_out, Var x_in, int factor, BlockMode mode) {
  check_lengths(x_out, x_in, factor, "loss_gradient");
  require(x_in.rows() >= 2, ErrorKind::Shape, "loss_gradient: need >= 2 input samples");
  return mean(square(sub(first_difference(window_align(x_out, factor, mode)), first_difference(x_in))));
}

Var loss_feature_matching(Var f_in, Var f_out) {
  require(f_in.cols() == f_out.cols(), ErrorKind::Shape,
          "loss_feature_matching: channel mismatch " + std::to_string(f_in.cols()) + " vs " +
              std::to_string(f_out.cols()));
  return add(sum(square(sub(col_mean(f_in), col_mean(f_out)))), sum(square(sub(col_std(f_in), col_std(f_out)))));
}

Var loss_discriminator(Var p_real, Var p_fake) {
  const Var real_term = mean(log_clamped(p_real, kProbabilityEps));
  const Var fake_term = mean(log_clamped(add_scalar(scale(p_fake, -1.0), 1.0), kProbabilityEps));
  return scale(add(real_term, fake_term), -1.0);
}

double loss_mse(const TimeSeries& x_out, const TimeSeries& x_in, int factor, BlockMode mode) {
  Tape t(false);
  return loss_mse(t.constant(x_out.values()), t.constant(x_in.values()), factor, mode).scalar();
}

double loss_smoothness(const TimeSeries& x_out) {
  Tape t(false);
  return loss_smoothness(t.constant(x_out.values())).scalar();
}

double loss_gradient(const TimeSeries& x_out, const TimeSeries& x_in, int factor, BlockMode mode) {
  Tape t(false);
  return loss_gradient(t.constant(x_out.values()), t.constant(x_in.values()), factor, mode).scalar();
}

double loss_feature_matching(const Matrix& f_in, const Matrix& f_out) {
  Tape t(false);
  return loss_feature_matching(t.constant(f_in), t.constant(f_out)).scalar();
}

double loss_discriminator(const Vector& p_real, const Vector& p_fake) {
  Tape t(false);
  return loss_discriminator(t.constant(p_real), t.constant(p_fake)).scalar();
}

double softplus(double alpha) { return alpha > 0 ? alpha + std::log1p(std::exp(-alpha)) : std::log1p(std::exp(alpha)); }

double unit_weight_alpha() { return std::log(std::numbers::e - 1.0); }

// ---------------------------------------------------------------------------

LossWeights::LossWeights(ParameterSet& params, std::vector<LossComponent> components, double initial_alpha)
    : components_(std::move(components)) {
  for (LossComponent c : components_)
    alphas_.push_back(&params.add("loss.alpha." + std::string(to_string(c)), Matrix::Constant(1, 1, initial_alpha), false));
}

bool LossWeights::contains(LossComponent c) const {
  return std::find(components_.begin(), components_.end(), c) != components_.end();
}

Parameter& LossWeights::alpha(LossComponent c) const {
  for (std::size_t i = 0; i < components_.size(); ++i)
    if (components_[i] == c) return *alphas_[i];
  fail(ErrorKind::InvalidArgument, "no loss weight for component '" + std::string(to_string(c)) + "'");
}

double LossWeights::lambda(LossComponent c) const { return softplus(alpha(c).value(0, 0)); }

double LossBreakdown::value(std::string_view name) const {
  for (std::size_t i = 0; i < names.size(); ++i)
    if (names[i] == name) return values[i];
  fail(ErrorKind::InvalidArgument, "no loss component named '" + std::string(name) + "'");
}

CombinedLoss combine_total(Tape& tape, std::span<const std::pair<LossComponent, Var>> components,
                           const LossWeights& weights) {
  require(!components.empty(), ErrorKind::InvalidArgument, "combine_total: no components");
  require(components.size() <= weights.components().size(), ErrorKind::Shape,
          "combine_total: more components than loss weights");
  CombinedLoss out;
  Var total;
  for (const auto& [component, value] : components) {
    require(weights.contains(component), ErrorKind::Shape,
            "combine_total: no weight for component '" + std::string(to_string(component)) + "'");
    const Var lambda = softplus(tape.parameter(weights.alpha(component)));
    const Var term = hadamard(lambda, value);
    total = total.valid() ? add(total, term) : term;
    out.breakdown.names.emplace_back(to_string(component));
    out.breakdown.values.push_back(value.scalar());
    out.breakdown.weights.push_back(lambda.scalar());
  }
  out.total = total;
  out.breakdown.total = total.scalar();
  return out;
}

LossBreakdown combine_total(std::span<const std::pair<std::string, double>> components, std::span<const double> alphas) {
  require(components.size() == alphas.size(), ErrorKind::Shape,
          "combine_total: " + std::to_string(components.size()) + " components but " + std::to_string(alphas.size()) +
              " weights");
  LossBreakdown b;
  for (std::size_t i = 0; i < components.size(); ++i) {
    const double lambda = softplus(alphas[i]);
    b.names.push_back(components[i].first);
    b.values.push_back(components[i].second);
    b.weights.push_back(lambda);
    b.total += lambda * components[i].second;
  }
  return b;
}

}  // namespace tssr
