#pragma once

#include "tssr/autodiff.hpp"
#include "tssr/layers.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <initializer_list>
#include <random>
#include <vector>

namespace tssr::test {

inline Matrix random_matrix(Index rows, Index cols, std::uint64_t seed, double scale = 1.0) {
  Rng rng(seed);
  std::normal_distribution<double> n(0.0, scale);
  Matrix m(rows, cols);
  for (Index i = 0; i < m.size(); ++i) m.data()[i] = n(rng);
  return m;
}

inline Vector random_vector(Index n, std::uint64_t seed, double scale = 1.0) {
  return random_matrix(n, 1, seed, scale);
}

/// Largest |analytic - numeric| / max(|analytic|, |numeric|, floor) over every
/// entry of every parameter, with central differences of step h.
inline double gradcheck(std::initializer_list<ParameterSet*> sets, const std::function<Var(Tape&)>& build,
                        double h = 1e-5, double floor = 1e-3) {
  Tape tape;
  const Var root = build(tape);
  tape.backward(root);
  double worst = 0.0;
  for (ParameterSet* set : sets) {
    for (Parameter& p : *set) {
      const Matrix analytic = tape.gradient(p);
      for (Index i = 0; i < p.value.size(); ++i) {
        const double saved = p.value.data()[i];
        p.value.data()[i] = saved + h;
        Tape tp(false);
        const double up = build(tp).scalar();
        p.value.data()[i] = saved - h;
        Tape tm(false);
        const double down = build(tm).scalar();
        p.value.data()[i] = saved;
        const double numeric = (up - down) / (2.0 * h);
        const double a = analytic.size() ? analytic.data()[i] : 0.0;
        const double denom = std::max({std::abs(a), std::abs(numeric), floor});
        worst = std::max(worst, std::abs(a - numeric) / denom);
      }
    }
  }
  return worst;
}

}  // namespace tssr::test
