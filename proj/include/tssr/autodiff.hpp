#pragma once

// Reverse-mode automatic differentiation over dense Eigen matrices.
//
// A Tape records every operation applied to Var handles. Calling backward()
// on a 1x1 result propagates adjoints to all leaves; gradients of Parameter
// leaves are then read back with Tape::gradient(). A tape constructed with
// record=false only evaluates values, which is what inference uses.

#include <Eigen/Dense>

#include <deque>
#include <functional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace tssr {

using Scalar = double;
using Matrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;
using RowVector = Eigen::Matrix<Scalar, 1, Eigen::Dynamic>;
using Index = Eigen::Index;

struct Parameter {
  std::string name;
  Matrix value;
  bool decay = true;  // participates in decoupled weight decay
};

/// Owns the learnable tensors of a model. Element addresses are stable, so
/// layers keep raw pointers into the set.
class ParameterSet {
 public:
  ParameterSet() = default;
  ParameterSet(const ParameterSet&) = delete;
  ParameterSet& operator=(const ParameterSet&) = delete;

  Parameter& add(std::string name, Matrix init, bool decay = true);

  [[nodiscard]] Parameter* find(std::string_view name);
  [[nodiscard]] const Parameter* find(std::string_view name) const;
  [[nodiscard]] std::size_t size() const { return params_.size(); }
  [[nodiscard]] Index scalar_count() const;

  auto begin() { return params_.begin(); }
  auto end() { return params_.end(); }
  auto begin() const { return params_.begin(); }
  auto end() const { return params_.end(); }

  [[nodiscard]] std::vector<Matrix> snapshot() const;
  void restore(const std::vector<Matrix>& values);
  [[nodiscard]] bool all_finite() const;

 private:
  std::deque<Parameter> params_;
};

class Tape;

class Var {
 public:
  Var() = default;
  [[nodiscard]] const Matrix& value() const;
  [[nodiscard]] Index rows() const { return value().rows(); }
  [[nodiscard]] Index cols() const { return value().cols(); }
  [[nodiscard]] Scalar scalar() const { return value()(0, 0); }
  [[nodiscard]] Tape* tape() const { return tape_; }
  [[nodiscard]] int id() const { return id_; }
  [[nodiscard]] bool valid() const { return tape_ != nullptr; }

 private:
  friend class Tape;
  Var(Tape* tape, int id) : tape_(tape), id_(id) {}
  Tape* tape_ = nullptr;
  int id_ = -1;
};

class Tape {
 public:
  using Backward = std::function<void(Tape&, const Matrix& out_grad)>;

  explicit Tape(bool record = true) : record_(record) {}
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  [[nodiscard]] bool recording() const { return record_; }

  Var constant(Matrix value);
  /// Leaf whose adjoint is kept; used for gradient checks on raw inputs.
  Var variable(Matrix value);
  Var parameter(Parameter& p, bool trainable = true);

  void backward(Var root);

  [[nodiscard]] const Matrix& value(int id) const { return nodes_[id].value; }
  /// Adjoint of a node after backward(); zero-filled if never reached.
  [[nodiscard]] Matrix grad(Var v) const;
  /// Gradient with respect to a parameter, summed over every use on this tape.
  [[nodiscard]] Matrix gradient(const Parameter& p) const;
  [[nodiscard]] std::vector<std::pair<Parameter*, Matrix>> parameter_gradients() const;

  // Op-implementation interface.
  [[nodiscard]] bool needs_grad(Var v) const { return record_ && nodes_[v.id_].needs_grad; }
  Var push(Matrix value, std::initializer_list<Var> inputs, Backward fn);
  Var push(Matrix value, std::span<const Var> inputs, Backward fn);
  Matrix& grad_ref(Var v);

  [[nodiscard]] std::size_t size() const { return nodes_.size(); }

 private:
  struct Node {
    Matrix value;
    Matrix grad;
    Backward backward;
    Parameter* param = nullptr;
    bool needs_grad = false;
  };
  bool record_;
  std::deque<Node> nodes_;  // deque: values stay put as the tape grows
};

// ---------------------------------------------------------------------------
// Operations. All shapes are (rows x cols); time runs along rows.

Var add(Var a, Var b);
Var sub(Var a, Var b);
Var hadamard(Var a, Var b);
Var scale(Var a, Scalar s);
Var add_scalar(Var a, Scalar s);
Var matmul(Var a, Var b);
/// a * b^T
Var matmul_nt(Var a, Var b);
Var transpose(Var a);

/// a (T x C) + row (1 x C) on every row
Var add_row(Var a, Var row);
/// a (T x C) .* row (1 x C) on every row
Var mul_row(Var a, Var row);
/// a (T x C) .* col (T x 1) on every column
Var mul_col(Var a, Var col);

Var sum(Var a);
Var mean(Var a);
Var square(Var a);
Var sigmoid(Var a);
Var softplus(Var a);
Var gelu(Var a);
/// leak * x + (1 - leak) * x * sigmoid(x)
Var leaky_swish(Var a, Scalar leak);
/// log(clamp(x, eps, 1 - eps))
Var log_clamped(Var a, Scalar eps);

Var softmax_rows(Var a);
/// Per-row standardization across columns (no affine part).
Var layer_norm_rows(Var a, Scalar eps = 1e-5);

Var slice_rows(Var a, Index start, Index count);
Var slice_cols(Var a, Index start, Index count);
Var concat_cols(std::span<const Var> parts);
Var concat_rows(std::span<const Var> parts);
Var gather_rows(Var a, std::vector<Index> rows);

/// Reductions over time (rows) -> 1 x C.
Var col_mean(Var a);
Var col_max(Var a);
/// Population standard deviation over rows -> 1 x C.
Var col_std(Var a);
/// Reductions over channels (cols) -> T x 1.
Var row_mean(Var a);
Var row_max(Var a);

enum class Padding { Zero, Circular };

/// 1-D cross-correlation along rows with "same" output length.
/// x: T x Cin, weight: (kernel*Cin) x Cout (tap-major), bias: 1 x Cout or invalid.
Var conv1d(Var x, Var weight, Var bias, int kernel, Padding padding = Padding::Zero);

inline Var operator+(Var a, Var b) { return add(a, b); }
inline Var operator-(Var a, Var b) { return sub(a, b); }
inline Var operator*(Scalar s, Var a) { return scale(a, s); }

}  // namespace tssr
