#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "json.hpp"
#include "retrograph/numerics.hpp"
#include "retrograph/snapshot.hpp"

namespace retrograph {

struct GnnConfig {
  int hidden = 128;
  int layers = 3;
  /// rbf.n must be hidden / 2: node states start as two RBF-width halves.
  nn::RbfConfig rbf{};
  std::size_t feature_bits = 2048;
  double dropout = 0.1;
  double margin = 4.0;

  /// Throws ConfigError.
  void validate() const;
  nlohmann::json to_json() const;
  static GnnConfig from_json(const nlohmann::json& j);

  /// Config with the given hidden width and rbf.n = hidden / 2.
  static GnnConfig with_hidden(int hidden);
};

struct MetaLayerParams {
  nn::MlpBlock edge;     // e ⊕ v_src ⊕ v_dst ⊕ u -> e'
  nn::MlpBlock message;  // v_src ⊕ e -> m
  nn::MlpBlock node;     // v ⊕ mean(m) ⊕ u -> v'
  nn::MlpBlock global;   // u ⊕ mean(v') -> u'
};

/// All weights of the policy network.
struct GnnParameters {
  GnnConfig config;
  nn::Parameter edge_direction;  // 2 x hidden: forward, backward
  nn::Linear feature_proj;       // feature_bits x rbf.n
  std::vector<MetaLayerParams> layers;
  nn::Linear head;               // hidden x 1

  explicit GnnParameters(GnnConfig cfg = {});
  /// Seeded fan-in uniform initialization.
  static GnnParameters initialized(GnnConfig cfg, std::uint64_t seed);

  nn::ParameterList parameters();
  nn::ConstParameterList parameters() const;

  std::string encode() const;
  static GnnParameters decode(const std::string& bytes);
  void save(const std::filesystem::path& path) const;
  static GnnParameters load(const std::filesystem::path& path);
};

/// Every snapshot edge appears twice: as given (direction 0) and reversed
/// (direction 1).
struct GnnTopology {
  std::size_t node_count = 0;
  std::vector<std::uint32_t> src;
  std::vector<std::uint32_t> dst;
  std::vector<std::uint32_t> direction;
};

GnnTopology gnn_topology(const GraphSnapshot& s);

struct GraphEncoding {
  GnnTopology topology;
  nn::Var nodes;   // node_count x hidden
  nn::Var edges;   // 2|E| x hidden
  nn::Var global;  // 1 x hidden
};

/// Layer-0 encoding. Costs are clipped to the RBF range; infinite historical
/// costs map to the upper bound. Throws ConfigError on a missing or
/// out-of-range fingerprint.
GraphEncoding init_encoding(nn::Tape& t, const GraphSnapshot& s, const GnnParameters& p);

/// Applies meta layer `layer` (1-based).
GraphEncoding meta_layer(nn::Tape& t, const GraphEncoding& enc, int layer, const GnnParameters& p,
                         bool training, Rng* rng);

/// Per-node logits (node_count x 1) after all layers and the head.
nn::Var node_logits(nn::Tape& t, const GraphSnapshot& s, const GnnParameters& p, bool training,
                    Rng* rng);

struct OpenNodeScore {
  std::uint32_t node = 0;
  double logit = 0.0;
  double probability = 0.0;  // sigmoid(logit)
  double normalized = 0.0;   // softmax over open nodes
};

/// Inference-mode scores for the open nodes, ascending node index.
/// Throws ContractViolation when no node is open.
std::vector<OpenNodeScore> score(const GraphSnapshot& s, const GnnParameters& p);

struct GnnLoss {
  double bce = 0.0;
  double rank = 0.0;
  double total = 0.0;
};

/// Loss over the open nodes: `logits[i]` carries `labels[i]` (Positive or
/// Negative). The rank term is 0 without at least one of each label.
GnnLoss loss(std::span<const double> logits, std::span<const Label> labels, double margin);

/// Differentiable version over a snapshot's labels. Throws ContractViolation
/// unless the labels cover exactly the open nodes.
nn::Var loss_var(nn::Tape& t, nn::Var logits, const GraphSnapshot& s, double margin,
                 GnnLoss* parts = nullptr);

/// Inference-mode loss of one labeled snapshot.
GnnLoss evaluate_loss(const GraphSnapshot& s, const GnnParameters& p);

struct PairwiseAccuracy {
  std::size_t correct = 0;
  std::size_t pairs = 0;
  double rate() const { return pairs == 0 ? 0.0 : static_cast<double>(correct) / static_cast<double>(pairs); }
};

/// Counts (positive, negative) pairs within each example whose positive
/// logit is strictly larger.
PairwiseAccuracy pairwise_accuracy(const std::vector<GraphSnapshot>& examples, const GnnParameters& p);

struct GnnTrainConfig {
  int epochs = 20;
  std::size_t batch_size = 32;
  nn::AdamConfig adam{};
  std::uint64_t seed = 0;
};

/// Epoch 0 is the evaluation before any update. Losses are inference-mode
/// means over the training set; val_rank over the validation set.
struct EpochLog {
  int epoch = 0;
  double bce = 0.0;
  double rank = 0.0;
  double total = 0.0;
  double val_rank = 0.0;
};

struct GnnTrainResult {
  GnnParameters best;
  int best_epoch = 0;
  std::vector<EpochLog> log;
};

/// Minibatch Adam; keeps the checkpoint with the lowest validation rank
/// loss (the training rank loss when `val` is empty). Throws NumericError
/// with the epoch and batch on divergence.
GnnTrainResult train_gnn(const std::vector<GraphSnapshot>& train, const std::vector<GraphSnapshot>& val,
                         const GnnParameters& init, const GnnTrainConfig& cfg);

std::string training_log_csv(const std::vector<EpochLog>& log);

}  // namespace retrograph
