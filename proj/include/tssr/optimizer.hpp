#pragma once

#include "tssr/autodiff.hpp"

#include <unordered_map>
#include <vector>

namespace tssr {

/// Sums parameter gradients over several tapes (one per example in a batch).
class GradientAccumulator {
 public:
  void accumulate(const Tape& tape, double weight = 1.0);
  [[nodiscard]] const Matrix* find(const Parameter* p) const;
  void clear() { grads_.clear(); }
  [[nodiscard]] bool all_finite() const;

 private:
  std::unordered_map<const Parameter*, Matrix> grads_;
};

struct AdamWConfig {
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  double weight_decay = 1e-4;
};

/// Adam with decoupled weight decay; decay applies only to parameters flagged for it.
class AdamW {
 public:
  explicit AdamW(AdamWConfig cfg) : cfg_(cfg) {}

  void add(ParameterSet& params);
  void step(const GradientAccumulator& grads);
  [[nodiscard]] long steps() const { return t_; }

 private:
  struct Slot {
    Parameter* param;
    Matrix m;
    Matrix v;
  };
  AdamWConfig cfg_;
  std::vector<Slot> slots_;
  long t_ = 0;
};

}  // namespace tssr
