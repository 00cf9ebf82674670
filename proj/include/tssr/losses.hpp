#pragma once

// Training objectives. Every loss has a differentiable tape form used by the
// trainer and a value form for evaluation and tests.

#include "tssr/autodiff.hpp"
#include "tssr/timeseries.hpp"

#include <span>
#include <string>
#include <utility>
#include <vector>

namespace tssr {

enum class LossComponent { Mse, Smoothness, Gradient, FeatureMatching };

[[nodiscard]] std::string_view to_string(LossComponent c);
[[nodiscard]] LossComponent parse_loss_component(std::string_view text);

inline constexpr double kProbabilityEps = 1e-7;

/// Window operator on the tape: (T*factor) x 1 -> T x 1.
Var window_align(Var fine, int factor, BlockMode mode);
/// x_{t+1} - x_t along rows.
Var first_difference(Var x);

Var loss_mse(Var x_out, Var x_in, int factor, BlockMode mode = BlockMode::Point);
Var loss_smoothness(Var x_out);
Var loss_gradient(Var x_out, Var x_in, int factor, BlockMode mode = BlockMode::Point);
/// ||mu(F_in) - mu(F_out)||^2 + ||sigma(F_in) - sigma(F_out)||^2; time lengths may differ.
Var loss_feature_matching(Var f_in, Var f_out);
/// -mean(log p_real) - mean(log(1 - p_fake)) with probabilities clamped to [eps, 1 - eps].
Var loss_discriminator(Var p_real, Var p_fake);

[[nodiscard]] double loss_mse(const TimeSeries& x_out, const TimeSeries& x_in, int factor,
                              BlockMode mode = BlockMode::Point);
[[nodiscard]] double loss_smoothness(const TimeSeries& x_out);
[[nodiscard]] double loss_gradient(const TimeSeries& x_out, const TimeSeries& x_in, int factor,
                                   BlockMode mode = BlockMode::Point);
[[nodiscard]] double loss_feature_matching(const Matrix& f_in, const Matrix& f_out);
[[nodiscard]] double loss_discriminator(const Vector& p_real, const Vector& p_fake);

[[nodiscard]] double softplus(double alpha);
/// alpha giving lambda = 1, i.e. ln(e - 1).
[[nodiscard]] double unit_weight_alpha();

/// Learnable raw weights alpha_i; the loss weight is lambda_i = softplus(alpha_i).
class LossWeights {
 public:
  LossWeights(ParameterSet& params, std::vector<LossComponent> components, double initial_alpha = unit_weight_alpha());

  [[nodiscard]] const std::vector<LossComponent>& components() const { return components_; }
  [[nodiscard]] bool contains(LossComponent c) const;
  [[nodiscard]] Parameter& alpha(LossComponent c) const;
  [[nodiscard]] double lambda(LossComponent c) const;

 private:
  std::vector<LossComponent> components_;
  std::vector<Parameter*> alphas_;
};

struct LossBreakdown {
  std::vector<std::string> names;
  std::vector<double> values;
  std::vector<double> weights;
  double total = 0.0;

  [[nodiscard]] double value(std::string_view name) const;
};

struct CombinedLoss {
  Var total;
  LossBreakdown breakdown;
};

/// total = sum_i softplus(alpha_i) * L_i, with alpha_i on the tape.
CombinedLoss combine_total(Tape& tape, std::span<const std::pair<LossComponent, Var>> components,
                           const LossWeights& weights);

/// Value form: one alpha per component, in order.
[[nodiscard]] LossBreakdown combine_total(std::span<const std::pair<std::string, double>> components,
                                          std::span<const double> alphas);

}  // namespace tssr
