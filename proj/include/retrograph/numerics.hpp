#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "retrograph/rng.hpp"

namespace retrograph::nn {

using Matrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using Index = Eigen::Index;

/// A trainable tensor and its accumulated gradient.
struct Parameter {
  std::string name;
  Matrix value;
  mutable Matrix grad;

  Parameter() = default;
  Parameter(std::string n, Index rows, Index cols)
      : name(std::move(n)), value(Matrix::Zero(rows, cols)), grad(Matrix::Zero(rows, cols)) {}

  void zero_grad() const { grad.setZero(value.rows(), value.cols()); }
  Index size() const { return value.size(); }
};

using ParameterList = std::vector<Parameter*>;
using ConstParameterList = std::vector<const Parameter*>;

class Tape;

/// Handle to a value recorded on a Tape.
class Var {
 public:
  Var() = default;
  const Matrix& value() const;
  Index rows() const { return value().rows(); }
  Index cols() const { return value().cols(); }
  bool valid() const noexcept { return tape_ != nullptr; }

 private:
  friend class Tape;
  Var(Tape* tape, std::size_t id) : tape_(tape), id_(id) {}
  Tape* tape_ = nullptr;
  std::size_t id_ = 0;
};

/// Reverse-mode autodiff over dense row-major matrices. Every op checks its
/// output for NaN/Inf and throws NumericError.
///
/// With `record = false` no backward closures are kept (inference only).
class Tape {
 public:
  explicit Tape(bool record = true) : record_(record) {}
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  Var constant(Matrix m);
  /// Parameter leaves alias the parameter's storage; their gradients are
  /// accumulated straight into Parameter::grad by backward().
  Var param(const Parameter& p);

  Var matmul(Var a, Var b);
  Var add(Var a, Var b);
  /// a (n x m) + row (1 x m) broadcast over rows.
  Var add_row(Var a, Var row);
  Var mul(Var a, Var b);
  Var scale(Var a, double s);
  Var relu(Var a);
  /// Inverted dropout; identity when rate == 0.
  Var dropout(Var a, double rate, Rng& rng);
  Var concat_cols(const std::vector<Var>& parts);
  Var gather_rows(Var a, std::vector<std::uint32_t> idx);
  /// n_rows x cols result with row idx[i] += a.row(i).
  Var scatter_rows(Var a, std::vector<std::uint32_t> idx, Index n_rows);
  /// Mean of the rows of `a` grouped by segment id; empty segments give 0.
  Var segment_mean(Var a, std::vector<std::uint32_t> segment, Index n_segments);
  Var mean_rows(Var a);
  Var broadcast_rows(Var row, Index n);
  /// rows[i] lists the set positions of a binary row vector of width
  /// w.rows(); computes that sparse matrix times w.
  Var sparse_binary_matmul(std::vector<std::vector<std::uint32_t>> rows, Var w);
  Var sum(Var a);

  using Backward = std::function<void(const Matrix& out_grad, std::vector<Matrix>& in_grads)>;
  /// Op with a caller-supplied vector-Jacobian product. `in_grads` arrives
  /// sized and zeroed like the inputs; fill in the contributions.
  Var custom(Matrix value, const std::vector<Var>& inputs, Backward backward, const char* name);

  /// Seeds d(loss)/d(loss) = 1 and runs the recorded closures in reverse.
  /// `loss` must be 1 x 1.
  void backward(Var loss);

  const Matrix& value(Var v) const;
  /// Gradient of the last backward() w.r.t. a non-parameter value.
  const Matrix& grad(Var v) const;

 private:
  struct Entry {
    Matrix value;
    const Matrix* alias = nullptr;  // parameter leaves
    const Parameter* param = nullptr;
    Matrix grad;
    std::function<void(Tape&, std::size_t)> backward;
  };

  Var push(Matrix value, const char* op);
  Matrix& grad_ref(std::size_t id);
  void accumulate(std::size_t id, const Matrix& g);
  const Matrix& val(std::size_t id) const;

  bool record_;
  std::vector<Entry> entries_;
};

/// Affine layer y = x W + b with W (in x out).
struct Linear {
  Parameter weight;
  Parameter bias;

  Linear() = default;
  Linear(const std::string& name, Index in, Index out);
  Var forward(Tape& t, Var x) const;
  Index in_width() const { return weight.value.rows(); }
  Index out_width() const { return weight.value.cols(); }
  void collect(ParameterList& out) { out.push_back(&weight); out.push_back(&bias); }
  void collect(ConstParameterList& out) const { out.push_back(&weight); out.push_back(&bias); }
};

/// Three affine layers with ReLU, dropout after each ReLU, and a residual
/// connection:
///   h1 = L1(x); a1 = drop(relu(h1)); a2 = drop(relu(L2(a1)))
///   y  = skip + L3(a2),  skip = x if widths match, else h1.
struct MlpBlock {
  Linear l1, l2, l3;
  double dropout = 0.0;

  MlpBlock() = default;
  MlpBlock(const std::string& name, Index in, Index hidden, double dropout_rate);
  Var forward(Tape& t, Var x, bool training, Rng* rng) const;
  Index in_width() const { return l1.in_width(); }
  Index out_width() const { return l3.out_width(); }
  void collect(ParameterList& out) { l1.collect(out); l2.collect(out); l3.collect(out); }
  void collect(ConstParameterList& out) const { l1.collect(out); l2.collect(out); l3.collect(out); }
};

/// Uniform(-1/sqrt(fan_in), 1/sqrt(fan_in)) weights, zero biases.
void init_uniform_fan_in(ParameterList params, std::uint64_t seed);

struct AdamConfig {
  double lr = 1e-4;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

struct AdamState {
  AdamConfig config;
  std::int64_t step = 0;
  std::vector<Matrix> m;
  std::vector<Matrix> v;
};

AdamState make_adam(const ParameterList& params, AdamConfig config);
/// One bias-corrected Adam update from each parameter's accumulated grad.
void adam_step(AdamState& state, const ParameterList& params);

struct RbfConfig {
  double low = 0.0;
  double high = 10.0;
  int n = 64;
  double tau = 25.0;
};

/// Component i = exp(-(x - i (H - L) / N)^2 / tau), 0 <= i < N.
/// Throws NumericError for non-finite x, std::invalid_argument for a bad
/// configuration.
std::vector<double> rbf(double x, double low, double high, int n, double tau);
inline std::vector<double> rbf(double x, const RbfConfig& c) { return rbf(x, c.low, c.high, c.n, c.tau); }

double sigmoid(double x);
/// log(1 + exp(x)) without overflow.
double softplus(double x);

/// Softmax of a vector, stable under large logits.
std::vector<double> softmax(std::span<const double> logits);

/// Keeps large tape buffers in the process heap instead of mapping and
/// unmapping them on every allocation. No-op outside glibc. Call once at
/// program start.
void tune_allocator();

}  // namespace retrograph::nn
