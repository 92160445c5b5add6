#include "retrograph/numerics.hpp"

#include <cmath>
#if defined(__GLIBC__)
#include <malloc.h>
#endif
#include <stdexcept>

#include "retrograph/error.hpp"

namespace retrograph::nn {

namespace {

void check_finite(const Matrix& m, const char* op) {
  if (!m.allFinite()) throw NumericError(std::string("non-finite value produced by ") + op);
}

void check_same_shape(const Matrix& a, const Matrix& b, const char* op) {
  if (a.rows() != b.rows() || a.cols() != b.cols()) {
    throw NumericError(std::string(op) + ": shape mismatch " + std::to_string(a.rows()) + "x" +
                       std::to_string(a.cols()) + " vs " + std::to_string(b.rows()) + "x" +
                       std::to_string(b.cols()));
  }
}

}  // namespace

const Matrix& Var::value() const { return tape_->value(*this); }

const Matrix& Tape::val(std::size_t id) const {
  const Entry& e = entries_[id];
  return e.alias ? *e.alias : e.value;
}

const Matrix& Tape::value(Var v) const { return val(v.id_); }

const Matrix& Tape::grad(Var v) const { return entries_[v.id_].grad; }

Var Tape::push(Matrix value, const char* op) {
  check_finite(value, op);
  entries_.push_back(Entry{std::move(value), nullptr, nullptr, Matrix(), nullptr});
  return Var(this, entries_.size() - 1);
}

Matrix& Tape::grad_ref(std::size_t id) {
  Entry& e = entries_[id];
  if (e.param) return e.param->grad;
  const Matrix& v = val(id);
  if (e.grad.rows() != v.rows() || e.grad.cols() != v.cols()) e.grad = Matrix::Zero(v.rows(), v.cols());
  return e.grad;
}

void Tape::accumulate(std::size_t id, const Matrix& g) { grad_ref(id) += g; }

Var Tape::constant(Matrix m) { return push(std::move(m), "constant"); }

Var Tape::param(const Parameter& p) {
  check_finite(p.value, "parameter");
  if (p.grad.rows() != p.value.rows() || p.grad.cols() != p.value.cols()) p.zero_grad();
  entries_.push_back(Entry{Matrix(), &p.value, &p, Matrix(), nullptr});
  return Var(this, entries_.size() - 1);
}

Var Tape::matmul(Var a, Var b) {
  const Matrix& av = value(a);
  const Matrix& bv = value(b);
  if (av.cols() != bv.rows()) throw NumericError("matmul: inner dimensions differ");
  Var out = push(av * bv, "matmul");
  if (record_) {
    std::size_t ia = a.id_, ib = b.id_;
    entries_.back().backward = [ia, ib](Tape& t, std::size_t self) {
      const Matrix& g = t.entries_[self].grad;
      t.grad_ref(ia).noalias() += g * t.val(ib).transpose();
      t.grad_ref(ib).noalias() += t.val(ia).transpose() * g;
    };
  }
  return out;
}

Var Tape::add(Var a, Var b) {
  check_same_shape(value(a), value(b), "add");
  Var out = push(value(a) + value(b), "add");
  if (record_) {
    std::size_t ia = a.id_, ib = b.id_;
    entries_.back().backward = [ia, ib](Tape& t, std::size_t self) {
      const Matrix& g = t.entries_[self].grad;
      t.accumulate(ia, g);
      t.accumulate(ib, g);
    };
  }
  return out;
}

Var Tape::add_row(Var a, Var row) {
  const Matrix& av = value(a);
  const Matrix& rv = value(row);
  if (rv.rows() != 1 || rv.cols() != av.cols()) throw NumericError("add_row: bias shape mismatch");
  Matrix out = av;
  out.rowwise() += rv.row(0);
  Var res = push(std::move(out), "add_row");
  if (record_) {
    std::size_t ia = a.id_, ir = row.id_;
    entries_.back().backward = [ia, ir](Tape& t, std::size_t self) {
      const Matrix& g = t.entries_[self].grad;
      t.accumulate(ia, g);
      t.grad_ref(ir) += g.colwise().sum();
    };
  }
  return res;
}

Var Tape::mul(Var a, Var b) {
  check_same_shape(value(a), value(b), "mul");
  Var out = push(value(a).cwiseProduct(value(b)), "mul");
  if (record_) {
    std::size_t ia = a.id_, ib = b.id_;
    entries_.back().backward = [ia, ib](Tape& t, std::size_t self) {
      const Matrix& g = t.entries_[self].grad;
      Matrix ga = g.cwiseProduct(t.val(ib));
      Matrix gb = g.cwiseProduct(t.val(ia));
      t.accumulate(ia, ga);
      t.accumulate(ib, gb);
    };
  }
  return out;
}

Var Tape::scale(Var a, double s) {
  Var out = push(value(a) * s, "scale");
  if (record_) {
    std::size_t ia = a.id_;
    entries_.back().backward = [ia, s](Tape& t, std::size_t self) {
      t.grad_ref(ia) += t.entries_[self].grad * s;
    };
  }
  return out;
}

Var Tape::relu(Var a) {
  Var out = push(value(a).cwiseMax(0.0), "relu");
  if (record_) {
    std::size_t ia = a.id_;
    entries_.back().backward = [ia](Tape& t, std::size_t self) {
      const Matrix& g = t.entries_[self].grad;
      const Matrix& x = t.val(ia);
      t.grad_ref(ia).array() += (x.array() > 0.0).select(g.array(), 0.0);
    };
  }
  return out;
}

Var Tape::dropout(Var a, double rate, Rng& rng) {
  if (rate < 0.0 || rate >= 1.0) throw std::invalid_argument("dropout rate must be in [0, 1)");
  if (rate == 0.0) return a;
  const Matrix& av = value(a);
  Matrix mask(av.rows(), av.cols());
  const double keep = 1.0 - rate;
  for (Index i = 0; i < mask.size(); ++i) mask.data()[i] = rng.uniform() < keep ? 1.0 / keep : 0.0;
  Var out = push(av.cwiseProduct(mask), "dropout");
  if (record_) {
    std::size_t ia = a.id_;
    entries_.back().backward = [ia, mask = std::move(mask)](Tape& t, std::size_t self) {
      t.grad_ref(ia) += t.entries_[self].grad.cwiseProduct(mask);
    };
  }
  return out;
}

Var Tape::concat_cols(const std::vector<Var>& parts) {
  if (parts.empty()) throw NumericError("concat_cols: no inputs");
  const Index rows = value(parts[0]).rows();
  Index cols = 0;
  for (Var p : parts) {
    if (value(p).rows() != rows) throw NumericError("concat_cols: row counts differ");
    cols += value(p).cols();
  }
  Matrix out(rows, cols);
  Index c = 0;
  for (Var p : parts) {
    const Matrix& pv = value(p);
    out.middleCols(c, pv.cols()) = pv;
    c += pv.cols();
  }
  Var res = push(std::move(out), "concat_cols");
  if (record_) {
    std::vector<std::size_t> ids;
    for (Var p : parts) ids.push_back(p.id_);
    entries_.back().backward = [ids](Tape& t, std::size_t self) {
      const Matrix& g = t.entries_[self].grad;
      Index c0 = 0;
      for (std::size_t id : ids) {
        Index w = t.val(id).cols();
        t.grad_ref(id) += g.middleCols(c0, w);
        c0 += w;
      }
    };
  }
  return res;
}

Var Tape::gather_rows(Var a, std::vector<std::uint32_t> idx) {
  const Matrix& av = value(a);
  Matrix out(static_cast<Index>(idx.size()), av.cols());
  for (std::size_t i = 0; i < idx.size(); ++i) {
    if (idx[i] >= av.rows()) throw NumericError("gather_rows: index out of range");
    out.row(static_cast<Index>(i)) = av.row(idx[i]);
  }
  Var res = push(std::move(out), "gather_rows");
  if (record_) {
    std::size_t ia = a.id_;
    entries_.back().backward = [ia, idx = std::move(idx)](Tape& t, std::size_t self) {
      const Matrix& g = t.entries_[self].grad;
      Matrix& ga = t.grad_ref(ia);
      for (std::size_t i = 0; i < idx.size(); ++i) ga.row(idx[i]) += g.row(static_cast<Index>(i));
    };
  }
  return res;
}

Var Tape::scatter_rows(Var a, std::vector<std::uint32_t> idx, Index n_rows) {
  const Matrix& av = value(a);
  if (static_cast<Index>(idx.size()) != av.rows()) throw NumericError("scatter_rows: index count mismatch");
  Matrix out = Matrix::Zero(n_rows, av.cols());
  for (std::size_t i = 0; i < idx.size(); ++i) {
    if (idx[i] >= n_rows) throw NumericError("scatter_rows: index out of range");
    out.row(idx[i]) += av.row(static_cast<Index>(i));
  }
  Var res = push(std::move(out), "scatter_rows");
  if (record_) {
    std::size_t ia = a.id_;
    entries_.back().backward = [ia, idx = std::move(idx)](Tape& t, std::size_t self) {
      const Matrix& g = t.entries_[self].grad;
      Matrix& ga = t.grad_ref(ia);
      for (std::size_t i = 0; i < idx.size(); ++i) ga.row(static_cast<Index>(i)) += g.row(idx[i]);
    };
  }
  return res;
}

Var Tape::segment_mean(Var a, std::vector<std::uint32_t> segment, Index n_segments) {
  const Matrix& av = value(a);
  if (static_cast<Index>(segment.size()) != av.rows()) throw NumericError("segment_mean: segment count mismatch");
  std::vector<double> counts(static_cast<std::size_t>(n_segments), 0.0);
  for (auto s : segment) {
    if (s >= n_segments) throw NumericError("segment_mean: segment out of range");
    counts[s] += 1.0;
  }
  Matrix out = Matrix::Zero(n_segments, av.cols());
  for (std::size_t i = 0; i < segment.size(); ++i) out.row(segment[i]) += av.row(static_cast<Index>(i));
  for (Index s = 0; s < n_segments; ++s) {
    if (counts[static_cast<std::size_t>(s)] > 0) out.row(s) /= counts[static_cast<std::size_t>(s)];
  }
  Var res = push(std::move(out), "segment_mean");
  if (record_) {
    std::size_t ia = a.id_;
    entries_.back().backward = [ia, segment = std::move(segment), counts = std::move(counts)](
                                   Tape& t, std::size_t self) {
      const Matrix& g = t.entries_[self].grad;
      Matrix& ga = t.grad_ref(ia);
      for (std::size_t i = 0; i < segment.size(); ++i) {
        ga.row(static_cast<Index>(i)) += g.row(segment[i]) / counts[segment[i]];
      }
    };
  }
  return res;
}

Var Tape::mean_rows(Var a) {
  const Matrix& av = value(a);
  if (av.rows() == 0) throw NumericError("mean_rows: no rows");
  Var res = push(av.colwise().mean(), "mean_rows");
  if (record_) {
    std::size_t ia = a.id_;
    entries_.back().backward = [ia](Tape& t, std::size_t self) {
      const Matrix& g = t.entries_[self].grad;
      Matrix& ga = t.grad_ref(ia);
      const double inv = 1.0 / static_cast<double>(ga.rows());
      ga.rowwise() += g.row(0) * inv;
    };
  }
  return res;
}

Var Tape::broadcast_rows(Var row, Index n) {
  const Matrix& rv = value(row);
  if (rv.rows() != 1) throw NumericError("broadcast_rows: expected a row vector");
  Matrix out = rv.replicate(n, 1);
  Var res = push(std::move(out), "broadcast_rows");
  if (record_) {
    std::size_t ir = row.id_;
    entries_.back().backward = [ir](Tape& t, std::size_t self) {
      t.grad_ref(ir) += t.entries_[self].grad.colwise().sum();
    };
  }
  return res;
}

Var Tape::sparse_binary_matmul(std::vector<std::vector<std::uint32_t>> rows, Var w) {
  const Matrix& wv = value(w);
  Matrix out = Matrix::Zero(static_cast<Index>(rows.size()), wv.cols());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    for (auto j : rows[i]) {
      if (j >= wv.rows()) throw NumericError("sparse_binary_matmul: bit index out of range");
      out.row(static_cast<Index>(i)) += wv.row(j);
    }
  }
  Var res = push(std::move(out), "sparse_binary_matmul");
  if (record_) {
    std::size_t iw = w.id_;
    entries_.back().backward = [iw, rows = std::move(rows)](Tape& t, std::size_t self) {
      const Matrix& g = t.entries_[self].grad;
      Matrix& gw = t.grad_ref(iw);
      for (std::size_t i = 0; i < rows.size(); ++i) {
        for (auto j : rows[i]) gw.row(j) += g.row(static_cast<Index>(i));
      }
    };
  }
  return res;
}

Var Tape::sum(Var a) {
  Matrix out(1, 1);
  out(0, 0) = value(a).sum();
  Var res = push(std::move(out), "sum");
  if (record_) {
    std::size_t ia = a.id_;
    entries_.back().backward = [ia](Tape& t, std::size_t self) {
      t.grad_ref(ia).array() += t.entries_[self].grad(0, 0);
    };
  }
  return res;
}

Var Tape::custom(Matrix value, const std::vector<Var>& inputs, Backward backward, const char* name) {
  Var res = push(std::move(value), name);
  if (record_) {
    std::vector<std::size_t> ids;
    for (Var v : inputs) ids.push_back(v.id_);
    entries_.back().backward = [ids, fn = std::move(backward)](Tape& t, std::size_t self) {
      std::vector<Matrix> in_grads;
      in_grads.reserve(ids.size());
      for (std::size_t id : ids) {
        const Matrix& v = t.val(id);
        in_grads.push_back(Matrix::Zero(v.rows(), v.cols()));
      }
      fn(t.entries_[self].grad, in_grads);
      for (std::size_t k = 0; k < ids.size(); ++k) t.accumulate(ids[k], in_grads[k]);
    };
  }
  return res;
}

void Tape::backward(Var loss) {
  if (!record_) throw std::logic_error("backward() on a tape created without recording");
  const Matrix& lv = value(loss);
  if (lv.rows() != 1 || lv.cols() != 1) throw NumericError("backward: loss must be a 1x1 value");
  for (auto& e : entries_) {
    if (!e.param) e.grad.resize(0, 0);
  }
  grad_ref(loss.id_).setOnes();
  for (std::size_t i = loss.id_ + 1; i-- > 0;) {
    Entry& e = entries_[i];
    if (!e.backward || e.param) continue;
    if (e.grad.size() == 0) continue;
    if (!e.grad.allFinite()) throw NumericError("non-finite gradient during backward pass");
    e.backward(*this, i);
  }
  for (const auto& e : entries_) {
    if (e.param && !e.param->grad.allFinite()) {
      throw NumericError("non-finite gradient for parameter " + e.param->name);
    }
  }
}

// ---------------------------------------------------------------------------

Linear::Linear(const std::string& name, Index in, Index out)
    : weight(name + ".weight", in, out), bias(name + ".bias", 1, out) {}

Var Linear::forward(Tape& t, Var x) const { return t.add_row(t.matmul(x, t.param(weight)), t.param(bias)); }

MlpBlock::MlpBlock(const std::string& name, Index in, Index hidden, double dropout_rate)
    : l1(name + ".l1", in, hidden),
      l2(name + ".l2", hidden, hidden),
      l3(name + ".l3", hidden, hidden),
      dropout(dropout_rate) {}

Var MlpBlock::forward(Tape& t, Var x, bool training, Rng* rng) const {
  if (x.cols() != in_width()) {
    throw NumericError("MlpBlock: input width " + std::to_string(x.cols()) + " != " +
                       std::to_string(in_width()));
  }
  const bool drop = training && dropout > 0.0;
  if (drop && rng == nullptr) throw std::invalid_argument("MlpBlock: training dropout needs an rng");
  Var h1 = l1.forward(t, x);
  Var a1 = t.relu(h1);
  if (drop) a1 = t.dropout(a1, dropout, *rng);
  Var a2 = t.relu(l2.forward(t, a1));
  if (drop) a2 = t.dropout(a2, dropout, *rng);
  Var out = l3.forward(t, a2);
  Var skip = x.cols() == out.cols() ? x : h1;
  return t.add(skip, out);
}

void init_uniform_fan_in(ParameterList params, std::uint64_t seed) {
  Rng rng(seed);
  for (Parameter* p : params) {
    const bool is_bias = p->name.size() >= 5 && p->name.compare(p->name.size() - 5, 5, ".bias") == 0;
    if (is_bias) {
      p->value.setZero();
    } else {
      const double bound = 1.0 / std::sqrt(static_cast<double>(std::max<Index>(1, p->value.rows())));
      for (Index i = 0; i < p->value.size(); ++i) p->value.data()[i] = rng.uniform(-bound, bound);
    }
    p->zero_grad();
  }
}

AdamState make_adam(const ParameterList& params, AdamConfig config) {
  AdamState s;
  s.config = config;
  for (const Parameter* p : params) {
    s.m.push_back(Matrix::Zero(p->value.rows(), p->value.cols()));
    s.v.push_back(Matrix::Zero(p->value.rows(), p->value.cols()));
  }
  return s;
}

void adam_step(AdamState& state, const ParameterList& params) {
  if (params.size() != state.m.size()) throw std::invalid_argument("adam_step: parameter count changed");
  const auto& c = state.config;
  ++state.step;
  const double bc1 = 1.0 - std::pow(c.beta1, static_cast<double>(state.step));
  const double bc2 = 1.0 - std::pow(c.beta2, static_cast<double>(state.step));
  for (std::size_t k = 0; k < params.size(); ++k) {
    Parameter& p = *params[k];
    if (p.grad.rows() != p.value.rows() || p.grad.cols() != p.value.cols()) {
      throw std::invalid_argument("adam_step: gradient shape mismatch for " + p.name);
    }
    state.m[k] = c.beta1 * state.m[k] + (1.0 - c.beta1) * p.grad;
    state.v[k] = c.beta2 * state.v[k] + (1.0 - c.beta2) * p.grad.cwiseAbs2();
    auto mhat = state.m[k].array() / bc1;
    auto vhat = state.v[k].array() / bc2;
    p.value.array() -= c.lr * mhat / (vhat.sqrt() + c.eps);
  }
}

std::vector<double> rbf(double x, double low, double high, int n, double tau) {
  if (!std::isfinite(x)) throw NumericError("rbf: non-finite input");
  if (n < 1 || !(high > low) || !(tau > 0.0)) throw std::invalid_argument("rbf: need N >= 1, H > L, tau > 0");
  std::vector<double> out(static_cast<std::size_t>(n));
  const double step = (high - low) / n;
  for (int i = 0; i < n; ++i) {
    const double d = x - i * step;
    out[static_cast<std::size_t>(i)] = std::exp(-(d * d) / tau);
  }
  return out;
}

double sigmoid(double x) {
  if (x >= 0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

double softplus(double x) { return x > 0 ? x + std::log1p(std::exp(-x)) : std::log1p(std::exp(x)); }

std::vector<double> softmax(std::span<const double> logits) {
  std::vector<double> out(logits.size());
  if (logits.empty()) return out;
  double mx = logits[0];
  for (double l : logits) mx = std::max(mx, l);
  double total = 0.0;
  for (std::size_t i = 0; i < logits.size(); ++i) {
    out[i] = std::exp(logits[i] - mx);
    total += out[i];
  }
  for (double& o : out) o /= total;
  return out;
}

void tune_allocator() {
#if defined(__GLIBC__)
  mallopt(M_MMAP_THRESHOLD, 32 << 20);
  mallopt(M_TRIM_THRESHOLD, 256 << 20);
#endif
}

}  // namespace retrograph::nn
