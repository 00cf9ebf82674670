#pragma once

// Static upsampling references: linear interpolation and Gaussian-process
// regression with a squared-exponential kernel.

#include "tssr/timeseries.hpp"

namespace tssr {

[[nodiscard]] inline TimeSeries upsample_linear(const TimeSeries& s, int factor) { return linear_init(s, factor); }

struct GpConfig {
  double length_scale = 0.0;  // seconds; <= 0 means one input step
  double signal_variance = 1.0;
  double noise_variance = 1e-6;
  bool optimize = false;  // gradient ascent on the log marginal likelihood
  int optimize_steps = 100;
  double optimize_rate = 0.05;

  void validate() const;
};

struct GpFit {
  TimeSeries mean;
  double jitter = 0.0;  // extra diagonal that made the kernel factorizable
  double length_scale = 0.0;
  double signal_variance = 0.0;
  double noise_variance = 0.0;
  double log_marginal_likelihood = 0.0;
};

/// Posterior mean on the fine grid. Observations are centered on their
/// sample mean, which serves as the prior mean, so the result is affine
/// equivariant. Points after the last anchor hold its value.
[[nodiscard]] GpFit fit_gp(const TimeSeries& s, int factor, const GpConfig& cfg = {});
[[nodiscard]] inline TimeSeries upsample_gp(const TimeSeries& s, int factor, const GpConfig& cfg = {}) {
  return fit_gp(s, factor, cfg).mean;
}

}  // namespace tssr
