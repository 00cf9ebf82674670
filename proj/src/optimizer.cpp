#include "tssr/optimizer.hpp"

#include <cmath>

namespace tssr {

void GradientAccumulator::accumulate(const Tape& tape, double weight) {
  for (auto& [param, grad] : tape.parameter_gradients()) {
    auto it = grads_.find(param);
    if (it == grads_.end())
      grads_.emplace(param, weight * grad);
    else
      it->second += weight * grad;
  }
}

const Matrix* GradientAccumulator::find(const Parameter* p) const {
  const auto it = grads_.find(p);
  return it == grads_.end() ? nullptr : &it->second;
}

bool GradientAccumulator::all_finite() const {
  for (const auto& [p, g] : grads_)
    if (!g.allFinite()) return false;
  return true;
}

void AdamW::add(ParameterSet& params) {
  for (auto& p : params)
    slots_.push_back(Slot{&p, Matrix::Zero(p.value.rows(), p.value.cols()), Matrix::Zero(p.value.rows(), p.value.cols())});
}

void AdamW::step(const GradientAccumulator& grads) {
  ++t_;
  const double bc1 = 1.0 - std::pow(cfg_.beta1, static_cast<double>(t_));
  const double bc2 = 1.0 - std::pow(cfg_.beta2, static_cast<double>(t_));
  for (auto& s : slots_) {
    const Matrix* g = grads.find(s.param);
    if (g == nullptr) continue;
    s.m = cfg_.beta1 * s.m + (1.0 - cfg_.beta1) * *g;
    s.v = cfg_.beta2 * s.v + (1.0 - cfg_.beta2) * g->cwiseAbs2();
    if (s.param->decay && cfg_.weight_decay > 0.0) s.param->value *= 1.0 - cfg_.lr * cfg_.weight_decay;
    s.param->value.array() -= cfg_.lr * (s.m.array() / bc1) / ((s.v.array() / bc2).sqrt() + cfg_.eps);
  }
}

}  // namespace tssr
