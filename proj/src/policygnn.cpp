#include "retrograph/policygnn.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>

#include "retrograph/error.hpp"
#include "retrograph/weights_io.hpp"

namespace retrograph {

using nlohmann::json;
using nn::Index;
using nn::Matrix;
using nn::Tape;
using nn::Var;

namespace {

constexpr const char* kGnnKind = "gnn";

double clip(double x, double lo, double hi) {
  if (std::isnan(x)) throw NumericError("NaN cost in graph snapshot");
  return std::clamp(x, lo, hi);
}

void write_rbf(Matrix& m, Index row, Index col, double x, const nn::RbfConfig& c) {
  const auto v = nn::rbf(clip(x, c.low, c.high), c);
  for (std::size_t i = 0; i < v.size(); ++i) m(row, col + static_cast<Index>(i)) = v[i];
}

}  // namespace

void GnnConfig::validate() const {
  if (hidden < 2 || hidden % 2 != 0) throw ConfigError("gnn hidden width must be even and >= 2");
  if (rbf.n * 2 != hidden) throw ConfigError("gnn rbf.n must equal hidden / 2");
  if (!(rbf.high > rbf.low) || !(rbf.tau > 0.0)) throw ConfigError("gnn rbf needs high > low and tau > 0");
  if (layers < 1) throw ConfigError("gnn needs at least one layer");
  if (feature_bits < 8) throw ConfigError("gnn feature_bits must be >= 8");
  if (!(dropout >= 0.0 && dropout < 1.0)) throw ConfigError("gnn dropout must be in [0, 1)");
  if (!(margin > 0.0)) throw ConfigError("gnn margin must be positive");
}

json GnnConfig::to_json() const {
  return json{{"hidden", hidden},
              {"layers", layers},
              {"rbf", {{"low", rbf.low}, {"high", rbf.high}, {"n", rbf.n}, {"tau", rbf.tau}}},
              {"feature_bits", feature_bits},
              {"dropout", dropout},
              {"margin", margin}};
}

GnnConfig GnnConfig::from_json(const json& j) {
  GnnConfig c;
  try {
    c.hidden = j.value("hidden", c.hidden);
    c.layers = j.value("layers", c.layers);
    if (j.contains("rbf")) {
      const auto& r = j.at("rbf");
      c.rbf.low = r.value("low", c.rbf.low);
      c.rbf.high = r.value("high", c.rbf.high);
      c.rbf.n = r.value("n", c.hidden / 2);
      c.rbf.tau = r.value("tau", c.rbf.tau);
    } else {
      c.rbf.n = c.hidden / 2;
    }
    c.feature_bits = j.value("feature_bits", c.feature_bits);
    c.dropout = j.value("dropout", c.dropout);
    c.margin = j.value("margin", c.margin);
  } catch (const json::exception& e) {
    throw ConfigError(std::string("bad gnn config: ") + e.what());
  }
  c.validate();
  return c;
}

GnnConfig GnnConfig::with_hidden(int h) {
  GnnConfig c;
  c.hidden = h;
  c.rbf.n = h / 2;
  return c;
}

GnnParameters::GnnParameters(GnnConfig cfg) : config(cfg) {
  config.validate();
  const Index h = config.hidden;
  edge_direction = nn::Parameter("edge_direction", 2, h);
  feature_proj = nn::Linear("feature_proj", static_cast<Index>(config.feature_bits), config.rbf.n);
  for (int l = 0; l < config.layers; ++l) {
    const std::string p = "layer" + std::to_string(l + 1);
    layers.push_back(MetaLayerParams{
        nn::MlpBlock(p + ".edge", 4 * h, h, config.dropout),
        nn::MlpBlock(p + ".message", 2 * h, h, config.dropout),
        nn::MlpBlock(p + ".node", 3 * h, h, config.dropout),
        nn::MlpBlock(p + ".global", 2 * h, h, config.dropout),
    });
  }
  head = nn::Linear("head", h, 1);
}

GnnParameters GnnParameters::initialized(GnnConfig cfg, std::uint64_t seed) {
  GnnParameters p(cfg);
  nn::init_uniform_fan_in(p.parameters(), seed);
  return p;
}

nn::ParameterList GnnParameters::parameters() {
  nn::ParameterList out{&edge_direction};
  feature_proj.collect(out);
  for (auto& l : layers) {
    l.edge.collect(out);
    l.message.collect(out);
    l.node.collect(out);
    l.global.collect(out);
  }
  head.collect(out);
  return out;
}

nn::ConstParameterList GnnParameters::parameters() const {
  nn::ConstParameterList out{&edge_direction};
  feature_proj.collect(out);
  for (const auto& l : layers) {
    l.edge.collect(out);
    l.message.collect(out);
    l.node.collect(out);
    l.global.collect(out);
  }
  head.collect(out);
  return out;
}

std::string GnnParameters::encode() const { return encode_weights(kGnnKind, config.to_json(), parameters()); }

GnnParameters GnnParameters::decode(const std::string& bytes) {
  const json header = decode_weight_header(bytes);
  GnnParameters p(GnnConfig::from_json(header.at("hyper")));
  decode_weights(bytes, kGnnKind, p.parameters());
  return p;
}

void GnnParameters::save(const std::filesystem::path& path) const {
  save_weights(path, kGnnKind, config.to_json(), parameters());
}

GnnParameters GnnParameters::load(const std::filesystem::path& path) { return decode(read_file_bytes(path)); }

GnnTopology gnn_topology(const GraphSnapshot& s) {
  GnnTopology t;
  t.node_count = s.nodes.size();
  const std::size_t e = s.edges.size();
  t.src.reserve(2 * e);
  t.dst.reserve(2 * e);
  t.direction.reserve(2 * e);
  for (auto [a, b] : s.edges) {
    t.src.push_back(a);
    t.dst.push_back(b);
    t.direction.push_back(0);
  }
  for (auto [a, b] : s.edges) {
    t.src.push_back(b);
    t.dst.push_back(a);
    t.direction.push_back(1);
  }
  return t;
}

GraphEncoding init_encoding(Tape& t, const GraphSnapshot& s, const GnnParameters& p) {
  const auto& c = p.config;
  if (s.nodes.empty()) throw ContractViolation("cannot encode an empty graph");
  if (s.feature_bits != c.feature_bits) {
    throw ConfigError("snapshot fingerprint width " + std::to_string(s.feature_bits) + " != model width " +
                      std::to_string(c.feature_bits));
  }
  const Index n = static_cast<Index>(s.nodes.size());
  const Index w = c.rbf.n;
  Matrix hist(n, w);
  Matrix right = Matrix::Zero(n, w);
  std::vector<std::vector<std::uint32_t>> fps;
  std::vector<std::uint32_t> mol_rows;
  for (Index i = 0; i < n; ++i) {
    const SnapshotNode& node = s.nodes[static_cast<std::size_t>(i)];
    write_rbf(hist, i, 0, node.hist_cost, c.rbf);
    if (node.kind == NodeKind::Reaction) {
      write_rbf(right, i, 0, node.reaction_cost, c.rbf);
    } else {
      if (node.features.empty()) throw ConfigError("molecule node " + std::to_string(i) + " has no feature vector");
      for (auto b : node.features) {
        if (b >= c.feature_bits) throw ConfigError("feature bit out of range in node " + std::to_string(i));
      }
      fps.push_back(node.features);
      mol_rows.push_back(static_cast<std::uint32_t>(i));
    }
  }
  Var right_v = t.constant(std::move(right));
  if (!mol_rows.empty()) {
    Var proj = t.add_row(t.sparse_binary_matmul(std::move(fps), t.param(p.feature_proj.weight)),
                         t.param(p.feature_proj.bias));
    right_v = t.add(right_v, t.scatter_rows(proj, std::move(mol_rows), n));
  }
  GraphEncoding enc;
  enc.topology = gnn_topology(s);
  enc.nodes = t.concat_cols({t.constant(std::move(hist)), right_v});
  enc.edges = t.gather_rows(t.param(p.edge_direction), enc.topology.direction);
  enc.global = t.constant(Matrix::Zero(1, c.hidden));
  return enc;
}

GraphEncoding meta_layer(Tape& t, const GraphEncoding& enc, int layer, const GnnParameters& p, bool training,
                         Rng* rng) {
  if (layer < 1 || layer > static_cast<int>(p.layers.size())) {
    throw ContractViolation("meta layer index out of range");
  }
  const MetaLayerParams& lp = p.layers[static_cast<std::size_t>(layer - 1)];
  const auto& topo = enc.topology;
  const Index n = static_cast<Index>(topo.node_count);
  const Index m = static_cast<Index>(topo.src.size());

  GraphEncoding out;
  out.topology = topo;
  if (m > 0) {
    Var v_src = t.gather_rows(enc.nodes, topo.src);
    Var v_dst = t.gather_rows(enc.nodes, topo.dst);
    out.edges = lp.edge.forward(t, t.concat_cols({enc.edges, v_src, v_dst, t.broadcast_rows(enc.global, m)}),
                                training, rng);
    Var msg = lp.message.forward(t, t.concat_cols({v_src, enc.edges}), training, rng);
    Var agg = t.segment_mean(msg, topo.dst, n);
    out.nodes = lp.node.forward(t, t.concat_cols({enc.nodes, agg, t.broadcast_rows(enc.global, n)}), training, rng);
  } else {
    out.edges = enc.edges;
    Var agg = t.constant(Matrix::Zero(n, enc.nodes.cols()));
    out.nodes = lp.node.forward(t, t.concat_cols({enc.nodes, agg, t.broadcast_rows(enc.global, n)}), training, rng);
  }
  out.global = lp.global.forward(t, t.concat_cols({enc.global, t.mean_rows(out.nodes)}), training, rng);
  return out;
}

Var node_logits(Tape& t, const GraphSnapshot& s, const GnnParameters& p, bool training, Rng* rng) {
  GraphEncoding enc = init_encoding(t, s, p);
  for (int l = 1; l <= static_cast<int>(p.layers.size()); ++l) enc = meta_layer(t, enc, l, p, training, rng);
  return p.head.forward(t, enc.nodes);
}

std::vector<OpenNodeScore> score(const GraphSnapshot& s, const GnnParameters& p) {
  const auto open = s.open_nodes();
  if (open.empty()) throw ContractViolation("score: snapshot has no open nodes");
  Tape t(false);
  const Matrix& logits = node_logits(t, s, p, false, nullptr).value();
  std::vector<double> x;
  x.reserve(open.size());
  for (auto i : open) x.push_back(logits(i, 0));
  const auto soft = nn::softmax(x);
  std::vector<OpenNodeScore> out;
  out.reserve(open.size());
  for (std::size_t k = 0; k < open.size(); ++k) out.push_back({open[k], x[k], nn::sigmoid(x[k]), soft[k]});
  return out;
}

namespace {

/// Loss value and d(total)/d(logit) per open node.
GnnLoss loss_and_grad(std::span<const double> x, std::span<const Label> y, double margin, std::vector<double>* grad) {
  if (x.size() != y.size()) throw ContractViolation("loss: logit and label counts differ");
  if (x.empty()) throw ContractViolation("loss: no open nodes");
  const double n = static_cast<double>(x.size());
  GnnLoss r;
  if (grad) grad->assign(x.size(), 0.0);
  std::vector<std::size_t> pos, neg;
  for (std::size_t i = 0; i < x.size(); ++i) {
    if (y[i] != Label::Positive && y[i] != Label::Negative) throw ContractViolation("loss: open node without label");
    const double yi = y[i] == Label::Positive ? 1.0 : 0.0;
    r.bce += nn::softplus(x[i]) - yi * x[i];
    if (grad) (*grad)[i] += (nn::sigmoid(x[i]) - yi) / n;
    (y[i] == Label::Positive ? pos : neg).push_back(i);
  }
  r.bce /= n;
  if (!pos.empty() && !neg.empty()) {
    const double pairs = static_cast<double>(pos.size() * neg.size());
    for (auto a : pos) {
      for (auto b : neg) {
        const double slack = margin - (x[a] - x[b]);
        if (slack > 0.0) {
          r.rank += slack;
          if (grad) {
            (*grad)[a] -= 1.0 / pairs;
            (*grad)[b] += 1.0 / pairs;
          }
        }
      }
    }
    r.rank /= pairs;
  }
  r.total = r.bce + r.rank;
  return r;
}

void gather_open(const GraphSnapshot& s, const Matrix& logits, std::vector<std::uint32_t>& open,
                 std::vector<double>& x, std::vector<Label>& y) {
  open.clear();
  x.clear();
  y.clear();
  for (std::size_t i = 0; i < s.nodes.size(); ++i) {
    const auto& node = s.nodes[i];
    if (!node.open) {
      if (node.label != Label::None) throw ContractViolation("label on a node that is not open");
      continue;
    }
    if (node.label == Label::None) throw ContractViolation("open node " + std::to_string(i) + " has no label");
    open.push_back(static_cast<std::uint32_t>(i));
    x.push_back(logits(static_cast<Index>(i), 0));
    y.push_back(node.label);
  }
}

}  // namespace

GnnLoss loss(std::span<const double> logits, std::span<const Label> labels, double margin) {
  return loss_and_grad(logits, labels, margin, nullptr);
}

Var loss_var(Tape& t, Var logits, const GraphSnapshot& s, double margin, GnnLoss* parts) {
  if (logits.cols() != 1 || logits.rows() != static_cast<Index>(s.nodes.size())) {
    throw ContractViolation("loss: logits do not match the snapshot");
  }
  std::vector<std::uint32_t> open;
  std::vector<double> x;
  std::vector<Label> y;
  gather_open(s, logits.value(), open, x, y);
  std::vector<double> g;
  const GnnLoss l = loss_and_grad(x, y, margin, &g);
  if (parts) *parts = l;
  Matrix value(1, 1);
  value(0, 0) = l.total;
  return t.custom(
      std::move(value), {logits},
      [open = std::move(open), g = std::move(g)](const Matrix& out, std::vector<Matrix>& in) {
        for (std::size_t k = 0; k < open.size(); ++k) in[0](open[k], 0) += out(0, 0) * g[k];
      },
      "gnn_loss");
}

GnnLoss evaluate_loss(const GraphSnapshot& s, const GnnParameters& p) {
  Tape t(false);
  Var logits = node_logits(t, s, p, false, nullptr);
  std::vector<std::uint32_t> open;
  std::vector<double> x;
  std::vector<Label> y;
  gather_open(s, logits.value(), open, x, y);
  return loss_and_grad(x, y, p.config.margin, nullptr);
}

PairwiseAccuracy pairwise_accuracy(const std::vector<GraphSnapshot>& examples, const GnnParameters& p) {
  PairwiseAccuracy acc;
  for (const auto& s : examples) {
    Tape t(false);
    const Matrix& logits = node_logits(t, s, p, false, nullptr).value();
    for (std::size_t a = 0; a < s.nodes.size(); ++a) {
      if (s.nodes[a].label != Label::Positive) continue;
      for (std::size_t b = 0; b < s.nodes.size(); ++b) {
        if (s.nodes[b].label != Label::Negative) continue;
        ++acc.pairs;
        if (logits(static_cast<Index>(a), 0) > logits(static_cast<Index>(b), 0)) ++acc.correct;
      }
    }
  }
  return acc;
}

namespace {

GnnLoss mean_loss(const std::vector<GraphSnapshot>& data, const GnnParameters& p) {
  GnnLoss sum;
  for (const auto& s : data) {
    const GnnLoss l = evaluate_loss(s, p);
    sum.bce += l.bce;
    sum.rank += l.rank;
    sum.total += l.total;
  }
  if (!data.empty()) {
    const double n = static_cast<double>(data.size());
    sum.bce /= n;
    sum.rank /= n;
    sum.total /= n;
  }
  return sum;
}

EpochLog evaluate_epoch(int epoch, const std::vector<GraphSnapshot>& train, const std::vector<GraphSnapshot>& val,
                        const GnnParameters& p) {
  const GnnLoss tr = mean_loss(train, p);
  EpochLog e{epoch, tr.bce, tr.rank, tr.total, tr.rank};
  if (!val.empty()) e.val_rank = mean_loss(val, p).rank;
  return e;
}

}  // namespace

GnnTrainResult train_gnn(const std::vector<GraphSnapshot>& train, const std::vector<GraphSnapshot>& val,
                         const GnnParameters& init, const GnnTrainConfig& cfg) {
  if (train.empty()) throw ConfigError("training set is empty");
  if (cfg.epochs < 0) throw ConfigError("epochs must be >= 0");
  if (cfg.batch_size < 1) throw ConfigError("batch size must be >= 1");
  if (!(cfg.adam.lr >= 0.0)) throw ConfigError("learning rate must be >= 0");

  GnnParameters model = init;
  nn::ParameterList params = model.parameters();
  nn::AdamState adam = nn::make_adam(params, cfg.adam);

  GnnTrainResult result{model, 0, {}};
  result.log.push_back(evaluate_epoch(0, train, val, model));
  double best = result.log.back().val_rank;

  std::vector<std::size_t> order(train.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  Rng shuffler(hash_combine(cfg.seed, 0x5eed));

  for (int epoch = 1; epoch <= cfg.epochs; ++epoch) {
    shuffler.shuffle(order);
    std::size_t batch_index = 0;
    for (std::size_t start = 0; start < order.size(); start += cfg.batch_size, ++batch_index) {
      const std::size_t end = std::min(order.size(), start + cfg.batch_size);
      const double inv = 1.0 / static_cast<double>(end - start);
      for (nn::Parameter* p : params) p->zero_grad();
      try {
        for (std::size_t k = start; k < end; ++k) {
          const std::size_t ex = order[k];
          Rng drop(hash_combine(hash_combine(cfg.seed, static_cast<std::uint64_t>(epoch)), ex));
          Tape t(true);
          Var logits = node_logits(t, train[ex], model, true, &drop);
          Var l = loss_var(t, logits, train[ex], model.config.margin);
          t.backward(t.scale(l, inv));
        }
      } catch (const NumericError& e) {
        throw NumericError("training diverged at epoch " + std::to_string(epoch) + ", batch " +
                           std::to_string(batch_index) + ": " + e.what());
      }
      nn::adam_step(adam, params);
    }
    EpochLog e = evaluate_epoch(epoch, train, val, model);
    if (!std::isfinite(e.total) || !std::isfinite(e.val_rank)) {
      throw NumericError("training diverged at epoch " + std::to_string(epoch) + ": non-finite loss");
    }
    result.log.push_back(e);
    if (e.val_rank < best) {
      best = e.val_rank;
      result.best = model;
      result.best_epoch = epoch;
    }
  }
  return result;
}

std::string training_log_csv(const std::vector<EpochLog>& log) {
  std::string out = "epoch,bce,rank,total,val_rank\n";
  char buf[256];
  for (const auto& e : log) {
    std::snprintf(buf, sizeof buf, "%d,%.10g,%.10g,%.10g,%.10g\n", e.epoch, e.bce, e.rank, e.total, e.val_rank);
    out += buf;
  }
  return out;
}

}  // namespace retrograph
