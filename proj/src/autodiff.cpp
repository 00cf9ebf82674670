#include "tssr/autodiff.hpp"

#include "tssr/errors.hpp"

#include <cmath>
#include <numbers>

namespace tssr {

std::string_view to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::InvalidArgument: return "invalid-argument";
    case ErrorKind::Shape: return "shape";
    case ErrorKind::Data: return "data";
    case ErrorKind::Degenerate: return "degenerate-input";
    case ErrorKind::Audit: return "audit";
    case ErrorKind::Numerical: return "numerical";
    case ErrorKind::Precondition: return "precondition";
    case ErrorKind::Config: return "config";
    case ErrorKind::Io: return "io";
  }
  return "unknown";
}

// ---------------------------------------------------------------------------
// ParameterSet

Parameter& ParameterSet::add(std::string name, Matrix init, bool decay) {
  require(find(name) == nullptr, ErrorKind::InvalidArgument, "duplicate parameter name: " + name);
  params_.push_back(Parameter{std::move(name), std::move(init), decay});
  return params_.back();
}

Parameter* ParameterSet::find(std::string_view name) {
  for (auto& p : params_)
    if (p.name == name) return &p;
  return nullptr;
}

const Parameter* ParameterSet::find(std::string_view name) const {
  for (const auto& p : params_)
    if (p.name == name) return &p;
  return nullptr;
}

Index ParameterSet::scalar_count() const {
  Index n = 0;
  for (const auto& p : params_) n += p.value.size();
  return n;
}

std::vector<Matrix> ParameterSet::snapshot() const {
  std::vector<Matrix> out;
  out.reserve(params_.size());
  for (const auto& p : params_) out.push_back(p.value);
  return out;
}

void ParameterSet::restore(const std::vector<Matrix>& values) {
  require(values.size() == params_.size(), ErrorKind::Shape, "snapshot parameter count mismatch");
  for (std::size_t i = 0; i < values.size(); ++i) {
    require(values[i].rows() == params_[i].value.rows() && values[i].cols() == params_[i].value.cols(),
            ErrorKind::Shape, "snapshot shape mismatch for " + params_[i].name);
    params_[i].value = values[i];
  }
}

bool ParameterSet::all_finite() const {
  for (const auto& p : params_)
    if (!p.value.allFinite()) return false;
  return true;
}

// ---------------------------------------------------------------------------
// Tape

const Matrix& Var::value() const { return tape_->value(id_); }

Var Tape::constant(Matrix value) {
  nodes_.push_back(Node{std::move(value), {}, {}, nullptr, false});
  return Var(this, static_cast<int>(nodes_.size()) - 1);
}

Var Tape::variable(Matrix value) {
  nodes_.push_back(Node{std::move(value), {}, {}, nullptr, record_});
  return Var(this, static_cast<int>(nodes_.size()) - 1);
}

Var Tape::parameter(Parameter& p, bool trainable) {
  nodes_.push_back(Node{p.value, {}, {}, trainable ? &p : nullptr, record_ && trainable});
  return Var(this, static_cast<int>(nodes_.size()) - 1);
}

Var Tape::push(Matrix value, std::span<const Var> inputs, Backward fn) {
  bool ng = false;
  if (record_)
    for (const Var& v : inputs) ng = ng || nodes_[v.id_].needs_grad;
  nodes_.push_back(Node{std::move(value), {}, ng ? std::move(fn) : Backward{}, nullptr, ng});
  return Var(this, static_cast<int>(nodes_.size()) - 1);
}

Var Tape::push(Matrix value, std::initializer_list<Var> inputs, Backward fn) {
  return push(std::move(value), std::span<const Var>(inputs.begin(), inputs.size()), std::move(fn));
}

Matrix& Tape::grad_ref(Var v) {
  Node& n = nodes_[v.id_];
  if (n.grad.size() == 0) n.grad = Matrix::Zero(n.value.rows(), n.value.cols());
  return n.grad;
}

void Tape::backward(Var root) {
  require(record_, ErrorKind::Precondition, "backward on a non-recording tape");
  require(root.tape_ == this, ErrorKind::InvalidArgument, "root belongs to another tape");
  require(root.rows() == 1 && root.cols() == 1, ErrorKind::Shape, "backward root must be a scalar");
  for (auto& n : nodes_) n.grad.resize(0, 0);
  grad_ref(root)(0, 0) = 1.0;
  for (int i = root.id_; i >= 0; --i) {
    Node& n = nodes_[i];
    // Backward functions only touch grads of earlier nodes, so n.grad stays put.
    if (n.backward && n.grad.size() != 0) n.backward(*this, n.grad);
  }
}

Matrix Tape::grad(Var v) const {
  const Node& n = nodes_[v.id_];
  if (n.grad.size() == 0) return Matrix::Zero(n.value.rows(), n.value.cols());
  return n.grad;
}

Matrix Tape::gradient(const Parameter& p) const {
  Matrix g = Matrix::Zero(p.value.rows(), p.value.cols());
  for (const auto& n : nodes_)
    if (n.param == &p && n.grad.size() != 0) g += n.grad;
  return g;
}

std::vector<std::pair<Parameter*, Matrix>> Tape::parameter_gradients() const {
  std::vector<std::pair<Parameter*, Matrix>> out;
  for (const auto& n : nodes_) {
    if (n.param == nullptr || n.grad.size() == 0) continue;
    auto it = std::find_if(out.begin(), out.end(), [&](const auto& e) { return e.first == n.param; });
    if (it == out.end())
      out.emplace_back(n.param, n.grad);
    else
      it->second += n.grad;
  }
  return out;
}

// ---------------------------------------------------------------------------
// Operations

namespace {

void check_same_shape(const Var& a, const Var& b, const char* op) {
  require(a.rows() == b.rows() && a.cols() == b.cols(), ErrorKind::Shape,
          std::string(op) + ": shape mismatch (" + std::to_string(a.rows()) + "x" + std::to_string(a.cols()) +
              " vs " + std::to_string(b.rows()) + "x" + std::to_string(b.cols()) + ")");
}

Scalar sigmoid_scalar(Scalar x) {
  if (x >= 0) return 1.0 / (1.0 + std::exp(-x));
  const Scalar e = std::exp(x);
  return e / (1.0 + e);
}

Scalar softplus_scalar(Scalar x) { return x > 0 ? x + std::log1p(std::exp(-x)) : std::log1p(std::exp(x)); }

Index wrap_index(Index i, Index n) { return ((i % n) + n) % n; }

}  // namespace

Var add(Var a, Var b) {
  check_same_shape(a, b, "add");
  Tape& t = *a.tape();
  return t.push(a.value() + b.value(), {a, b}, [a, b](Tape& t, const Matrix& g) {
    if (t.needs_grad(a)) t.grad_ref(a) += g;
    if (t.needs_grad(b)) t.grad_ref(b) += g;
  });
}

Var sub(Var a, Var b) {
  check_same_shape(a, b, "sub");
  Tape& t = *a.tape();
  return t.push(a.value() - b.value(), {a, b}, [a, b](Tape& t, const Matrix& g) {
    if (t.needs_grad(a)) t.grad_ref(a) += g;
    if (t.needs_grad(b)) t.grad_ref(b) -= g;
  });
}

Var hadamard(Var a, Var b) {
  check_same_shape(a, b, "hadamard");
  Tape& t = *a.tape();
  return t.push(a.value().cwiseProduct(b.value()), {a, b}, [a, b](Tape& t, const Matrix& g) {
    if (t.needs_grad(a)) t.grad_ref(a) += g.cwiseProduct(b.value());
    if (t.needs_grad(b)) t.grad_ref(b) += g.cwiseProduct(a.value());
  });
}

Var scale(Var a, Scalar s) {
  Tape& t = *a.tape();
  return t.push(a.value() * s, {a}, [a, s](Tape& t, const Matrix& g) { t.grad_ref(a) += s * g; });
}

Var add_scalar(Var a, Scalar s) {
  Tape& t = *a.tape();
  return t.push(a.value().array() + s, {a}, [a](Tape& t, const Matrix& g) { t.grad_ref(a) += g; });
}

Var matmul(Var a, Var b) {
  require(a.cols() == b.rows(), ErrorKind::Shape,
          "matmul: inner dimensions " + std::to_string(a.cols()) + " vs " + std::to_string(b.rows()));
  Tape& t = *a.tape();
  Matrix out;
  out.noalias() = a.value() * b.value();
  return t.push(std::move(out), {a, b}, [a, b](Tape& t, const Matrix& g) {
    if (t.needs_grad(a)) t.grad_ref(a).noalias() += g * b.value().transpose();
    if (t.needs_grad(b)) t.grad_ref(b).noalias() += a.value().transpose() * g;
  });
}

Var matmul_nt(Var a, Var b) {
  require(a.cols() == b.cols(), ErrorKind::Shape, "matmul_nt: column mismatch");
  Tape& t = *a.tape();
  Matrix out;
  out.noalias() = a.value() * b.value().transpose();
  return t.push(std::move(out), {a, b}, [a, b](Tape& t, const Matrix& g) {
    if (t.needs_grad(a)) t.grad_ref(a).noalias() += g * b.value();
    if (t.needs_grad(b)) t.grad_ref(b).noalias() += g.transpose() * a.value();
  });
}

Var transpose(Var a) {
  Tape& t = *a.tape();
  return t.push(a.value().transpose(), {a}, [a](Tape& t, const Matrix& g) { t.grad_ref(a) += g.transpose(); });
}

Var add_row(Var a, Var row) {
  require(row.rows() == 1 && row.cols() == a.cols(), ErrorKind::Shape, "add_row: row shape mismatch");
  Tape& t = *a.tape();
  Matrix out = a.value().rowwise() + row.value().row(0);
  return t.push(std::move(out), {a, row}, [a, row](Tape& t, const Matrix& g) {
    if (t.needs_grad(a)) t.grad_ref(a) += g;
    if (t.needs_grad(row)) t.grad_ref(row) += g.colwise().sum();
  });
}

Var mul_row(Var a, Var row) {
  require(row.rows() == 1 && row.cols() == a.cols(), ErrorKind::Shape, "mul_row: row shape mismatch");
  Tape& t = *a.tape();
  Matrix out = a.value().array().rowwise() * row.value().row(0).array();
  return t.push(std::move(out), {a, row}, [a, row](Tape& t, const Matrix& g) {
    if (t.needs_grad(a)) t.grad_ref(a).array() += g.array().rowwise() * row.value().row(0).array();
    if (t.needs_grad(row)) t.grad_ref(row) += g.cwiseProduct(a.value()).colwise().sum();
  });
}

Var mul_col(Var a, Var col) {
  require(col.cols() == 1 && col.rows() == a.rows(), ErrorKind::Shape, "mul_col: column shape mismatch");
  Tape& t = *a.tape();
  Matrix out = a.value().array().colwise() * col.value().col(0).array();
  return t.push(std::move(out), {a, col}, [a, col](Tape& t, const Matrix& g) {
    if (t.needs_grad(a)) t.grad_ref(a).array() += g.array().colwise() * col.value().col(0).array();
    if (t.needs_grad(col)) t.grad_ref(col) += g.cwiseProduct(a.value()).rowwise().sum();
  });
}

Var sum(Var a) {
  Tape& t = *a.tape();
  Matrix out(1, 1);
  out(0, 0) = a.value().sum();
  return t.push(std::move(out), {a}, [a](Tape& t, const Matrix& g) { t.grad_ref(a).array() += g(0, 0); });
}

Var mean(Var a) {
  require(a.value().size() > 0, ErrorKind::Shape, "mean of empty matrix");
  Tape& t = *a.tape();
  Matrix out(1, 1);
  out(0, 0) = a.value().mean();
  const Scalar inv = 1.0 / static_cast<Scalar>(a.value().size());
  return t.push(std::move(out), {a}, [a, inv](Tape& t, const Matrix& g) { t.grad_ref(a).array() += g(0, 0) * inv; });
}

Var square(Var a) {
  Tape& t = *a.tape();
  return t.push(a.value().array().square().matrix(), {a}, [a](Tape& t, const Matrix& g) {
    t.grad_ref(a).array() += 2.0 * g.array() * a.value().array();
  });
}

Var sigmoid(Var a) {
  Tape& t = *a.tape();
  Matrix out = a.value().unaryExpr([](Scalar x) { return sigmoid_scalar(x); });
  const int id = static_cast<int>(t.size());
  return t.push(std::move(out), {a}, [a, id](Tape& t, const Matrix& g) {
    const Matrix& y = t.value(id);
    t.grad_ref(a).array() += g.array() * y.array() * (1.0 - y.array());
  });
}

Var softplus(Var a) {
  Tape& t = *a.tape();
  Matrix out = a.value().unaryExpr([](Scalar x) { return softplus_scalar(x); });
  return t.push(std::move(out), {a}, [a](Tape& t, const Matrix& g) {
    t.grad_ref(a).array() += g.array() * a.value().unaryExpr([](Scalar x) { return sigmoid_scalar(x); }).array();
  });
}

Var gelu(Var a) {
  Tape& t = *a.tape();
  Matrix out = a.value().unaryExpr([](Scalar x) { return 0.5 * x * (1.0 + std::erf(x * (1.0 / std::numbers::sqrt2))); });
  return t.push(std::move(out), {a}, [a](Tape& t, const Matrix& g) {
    const Scalar inv_sqrt_2pi = std::numbers::inv_sqrtpi * (1.0 / std::numbers::sqrt2);
    t.grad_ref(a).array() += g.array() * a.value()
                                             .unaryExpr([inv_sqrt_2pi](Scalar x) {
                                               const Scalar cdf = 0.5 * (1.0 + std::erf(x * (1.0 / std::numbers::sqrt2)));
                                               return cdf + x * inv_sqrt_2pi * std::exp(-0.5 * x * x);
                                             })
                                             .array();
  });
}

Var leaky_swish(Var a, Scalar leak) {
  Tape& t = *a.tape();
  Matrix out = a.value().unaryExpr([leak](Scalar x) { return leak * x + (1.0 - leak) * x * sigmoid_scalar(x); });
  return t.push(std::move(out), {a}, [a, leak](Tape& t, const Matrix& g) {
    t.grad_ref(a).array() += g.array() * a.value()
                                             .unaryExpr([leak](Scalar x) {
                                               const Scalar s = sigmoid_scalar(x);
                                               return leak + (1.0 - leak) * (s + x * s * (1.0 - s));
                                             })
                                             .array();
  });
}

Var log_clamped(Var a, Scalar eps) {
  Tape& t = *a.tape();
  Matrix out = a.value().unaryExpr([eps](Scalar x) { return std::log(std::clamp(x, eps, 1.0 - eps)); });
  return t.push(std::move(out), {a}, [a, eps](Tape& t, const Matrix& g) {
    t.grad_ref(a).array() +=
        g.array() * a.value().unaryExpr([eps](Scalar x) { return (x > eps && x < 1.0 - eps) ? 1.0 / x : 0.0; }).array();
  });
}

Var softmax_rows(Var a) {
  Tape& t = *a.tape();
  Matrix y = a.value();
  for (Index r = 0; r < y.rows(); ++r) {
    const Scalar m = y.row(r).maxCoeff();
    y.row(r) = (y.row(r).array() - m).exp().matrix();
    y.row(r) /= y.row(r).sum();
  }
  const int id = static_cast<int>(t.size());
  return t.push(std::move(y), {a}, [a, id](Tape& t, const Matrix& g) {
    const Matrix& y = t.value(id);
    const Vector dots = g.cwiseProduct(y).rowwise().sum();
    t.grad_ref(a).array() += y.array() * (g.colwise() - dots).array();
  });
}

Var layer_norm_rows(Var a, Scalar eps) {
  Tape& t = *a.tape();
  const Matrix& x = a.value();
  const Index c = x.cols();
  const Vector mu = x.rowwise().mean();
  Matrix centered = x.colwise() - mu;
  const Vector inv_std =
      (centered.array().square().rowwise().sum() / static_cast<Scalar>(c) + eps).rsqrt().matrix();
  Matrix y = centered.array().colwise() * inv_std.array();
  const int id = static_cast<int>(t.size());
  return t.push(std::move(y), {a}, [a, id, inv_std](Tape& t, const Matrix& g) {
    const Matrix& y = t.value(id);
    const Vector g_mean = g.rowwise().mean();
    const Vector gy_mean = g.cwiseProduct(y).rowwise().mean();
    Matrix dx = g.colwise() - g_mean;
    dx -= (y.array().colwise() * gy_mean.array()).matrix();
    t.grad_ref(a).array() += dx.array().colwise() * inv_std.array();
  });
}

Var slice_rows(Var a, Index start, Index count) {
  require(start >= 0 && count >= 0 && start + count <= a.rows(), ErrorKind::Shape, "slice_rows out of range");
  Tape& t = *a.tape();
  return t.push(a.value().middleRows(start, count), {a}, [a, start, count](Tape& t, const Matrix& g) {
    t.grad_ref(a).middleRows(start, count) += g;
  });
}

Var slice_cols(Var a, Index start, Index count) {
  require(start >= 0 && count >= 0 && start + count <= a.cols(), ErrorKind::Shape, "slice_cols out of range");
  Tape& t = *a.tape();
  return t.push(a.value().middleCols(start, count), {a}, [a, start, count](Tape& t, const Matrix& g) {
    t.grad_ref(a).middleCols(start, count) += g;
  });
}

Var concat_cols(std::span<const Var> parts) {
  require(!parts.empty(), ErrorKind::InvalidArgument, "concat_cols of nothing");
  const Index rows = parts[0].rows();
  Index cols = 0;
  for (const Var& p : parts) {
    require(p.rows() == rows, ErrorKind::Shape, "concat_cols: row count mismatch");
    cols += p.cols();
  }
  Matrix out(rows, cols);
  Index at = 0;
  for (const Var& p : parts) {
    out.middleCols(at, p.cols()) = p.value();
    at += p.cols();
  }
  std::vector<Var> inputs(parts.begin(), parts.end());
  Tape& t = *parts[0].tape();
  return t.push(std::move(out), parts, [inputs](Tape& t, const Matrix& g) {
    Index at = 0;
    for (const Var& p : inputs) {
      if (t.needs_grad(p)) t.grad_ref(p) += g.middleCols(at, p.cols());
      at += p.cols();
    }
  });
}

Var concat_rows(std::span<const Var> parts) {
  require(!parts.empty(), ErrorKind::InvalidArgument, "concat_rows of nothing");
  const Index cols = parts[0].cols();
  Index rows = 0;
  for (const Var& p : parts) {
    require(p.cols() == cols, ErrorKind::Shape, "concat_rows: column count mismatch");
    rows += p.rows();
  }
  Matrix out(rows, cols);
  Index at = 0;
  for (const Var& p : parts) {
    out.middleRows(at, p.rows()) = p.value();
    at += p.rows();
  }
  std::vector<Var> inputs(parts.begin(), parts.end());
  Tape& t = *parts[0].tape();
  return t.push(std::move(out), parts, [inputs](Tape& t, const Matrix& g) {
    Index at = 0;
    for (const Var& p : inputs) {
      if (t.needs_grad(p)) t.grad_ref(p) += g.middleRows(at, p.rows());
      at += p.rows();
    }
  });
}

Var gather_rows(Var a, std::vector<Index> rows) {
  Tape& t = *a.tape();
  Matrix out(static_cast<Index>(rows.size()), a.cols());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    require(rows[i] >= 0 && rows[i] < a.rows(), ErrorKind::Shape, "gather_rows index out of range");
    out.row(static_cast<Index>(i)) = a.value().row(rows[i]);
  }
  return t.push(std::move(out), {a}, [a, rows = std::move(rows)](Tape& t, const Matrix& g) {
    Matrix& ga = t.grad_ref(a);
    for (std::size_t i = 0; i < rows.size(); ++i) ga.row(rows[i]) += g.row(static_cast<Index>(i));
  });
}

Var col_mean(Var a) {
  Tape& t = *a.tape();
  const Scalar inv = 1.0 / static_cast<Scalar>(a.rows());
  return t.push(a.value().colwise().mean(), {a}, [a, inv](Tape& t, const Matrix& g) {
    t.grad_ref(a).rowwise() += g.row(0) * inv;
  });
}

Var row_mean(Var a) {
  Tape& t = *a.tape();
  const Scalar inv = 1.0 / static_cast<Scalar>(a.cols());
  return t.push(a.value().rowwise().mean(), {a}, [a, inv](Tape& t, const Matrix& g) {
    t.grad_ref(a).colwise() += g.col(0) * inv;
  });
}

Var col_max(Var a) {
  Tape& t = *a.tape();
  const Matrix& x = a.value();
  Matrix out(1, x.cols());
  std::vector<Index> arg(static_cast<std::size_t>(x.cols()));
  for (Index c = 0; c < x.cols(); ++c) {
    Index r;
    out(0, c) = x.col(c).maxCoeff(&r);
    arg[static_cast<std::size_t>(c)] = r;
  }
  return t.push(std::move(out), {a}, [a, arg = std::move(arg)](Tape& t, const Matrix& g) {
    Matrix& ga = t.grad_ref(a);
    for (Index c = 0; c < g.cols(); ++c) ga(arg[static_cast<std::size_t>(c)], c) += g(0, c);
  });
}

Var row_max(Var a) {
  Tape& t = *a.tape();
  const Matrix& x = a.value();
  Matrix out(x.rows(), 1);
  std::vector<Index> arg(static_cast<std::size_t>(x.rows()));
  for (Index r = 0; r < x.rows(); ++r) {
    Index c;
    out(r, 0) = x.row(r).maxCoeff(&c);
    arg[static_cast<std::size_t>(r)] = c;
  }
  return t.push(std::move(out), {a}, [a, arg = std::move(arg)](Tape& t, const Matrix& g) {
    Matrix& ga = t.grad_ref(a);
    for (Index r = 0; r < g.rows(); ++r) ga(r, arg[static_cast<std::size_t>(r)]) += g(r, 0);
  });
}

Var col_std(Var a) {
  Tape& t = *a.tape();
  const Matrix& x = a.value();
  const RowVector mu = x.colwise().mean();
  const Matrix centered = x.rowwise() - mu;
  const RowVector sd = (centered.array().square().colwise().sum() / static_cast<Scalar>(x.rows())).sqrt().matrix();
  return t.push(sd, {a}, [a, mu, sd](Tape& t, const Matrix& g) {
    const Matrix& x = t.value(a.id());
    const Scalar n = static_cast<Scalar>(x.rows());
    Matrix& ga = t.grad_ref(a);
    for (Index c = 0; c < x.cols(); ++c) {
      // d sigma / d x is singular for a constant channel; use the zero subgradient there.
      if (sd(c) < 1e-12) continue;
      ga.col(c).array() += g(0, c) * (x.col(c).array() - mu(c)) / (n * sd(c));
    }
  });
}

Var conv1d(Var x, Var weight, Var bias, int kernel, Padding padding) {
  require(kernel >= 1 && kernel % 2 == 1, ErrorKind::InvalidArgument, "conv1d kernel must be odd and >= 1");
  const Index rows = x.rows();
  const Index cin = x.cols();
  const Index k = kernel;
  require(weight.rows() == k * cin, ErrorKind::Shape,
          "conv1d: weight rows " + std::to_string(weight.rows()) + " != kernel*in_channels " + std::to_string(k * cin));
  if (bias.valid())
    require(bias.rows() == 1 && bias.cols() == weight.cols(), ErrorKind::Shape, "conv1d: bias shape mismatch");
  const Index half = k / 2;

  // im2col: column block j holds x shifted by (j - half) along time.
  Matrix cols = Matrix::Zero(rows, k * cin);
  const Matrix& xv = x.value();
  for (Index j = 0; j < k; ++j) {
    const Index shift = j - half;
    if (padding == Padding::Zero) {
      const Index lo = std::max<Index>(0, -shift);
      const Index hi = std::min<Index>(rows, rows - shift);
      if (hi > lo) cols.block(lo, j * cin, hi - lo, cin) = xv.middleRows(lo + shift, hi - lo);
    } else {
      for (Index r = 0; r < rows; ++r) cols.block(r, j * cin, 1, cin) = xv.row(wrap_index(r + shift, rows));
    }
  }
  Matrix out;
  out.noalias() = cols * weight.value();
  if (bias.valid()) out.rowwise() += bias.value().row(0);

  Tape& t = *x.tape();
  std::vector<Var> inputs{x, weight};
  if (bias.valid()) inputs.push_back(bias);
  if (!t.recording()) return t.push(std::move(out), std::span<const Var>(inputs), {});
  return t.push(std::move(out), std::span<const Var>(inputs),
                [x, weight, bias, cols = std::move(cols), k, cin, half, padding](Tape& t, const Matrix& g) {
                  if (t.needs_grad(weight)) t.grad_ref(weight).noalias() += cols.transpose() * g;
                  if (bias.valid() && t.needs_grad(bias)) t.grad_ref(bias) += g.colwise().sum();
                  if (!t.needs_grad(x)) return;
                  Matrix dcols;
                  dcols.noalias() = g * weight.value().transpose();
                  Matrix& gx = t.grad_ref(x);
                  const Index rows = gx.rows();
                  for (Index j = 0; j < k; ++j) {
                    const Index shift = j - half;
                    if (padding == Padding::Zero) {
                      const Index lo = std::max<Index>(0, -shift);
                      const Index hi = std::min<Index>(rows, rows - shift);
                      if (hi > lo) gx.middleRows(lo + shift, hi - lo) += dcols.block(lo, j * cin, hi - lo, cin);
                    } else {
                      for (Index r = 0; r < rows; ++r) gx.row(wrap_index(r + shift, rows)) += dcols.block(r, j * cin, 1, cin);
                    }
                  }
                });
}

}  // namespace tssr
