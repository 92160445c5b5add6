#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "json.hpp"
#include "retrograph/numerics.hpp"

namespace retrograph {

struct ValueNetConfig {
  std::size_t feature_bits = 2048;
  int hidden = 64;

  void validate() const;
  nlohmann::json to_json() const;
  static ValueNetConfig from_json(const nlohmann::json& j);
};

/// One regression example: fingerprint of a molecule and the cost of the
/// route subtree that made it.
struct ValueExample {
  std::vector<std::uint32_t> features;
  double cost = 0.0;
};

/// Two-layer regressor: fingerprint -> ReLU hidden -> remaining cost.
struct ValueNet {
  ValueNetConfig config;
  nn::Linear l1;
  nn::Linear l2;

  explicit ValueNet(ValueNetConfig cfg = {});
  static ValueNet initialized(ValueNetConfig cfg, std::uint64_t seed);

  nn::ParameterList parameters();
  nn::ConstParameterList parameters() const;

  nn::Var forward(nn::Tape& t, const std::vector<std::vector<std::uint32_t>>& rows) const;
  /// Raw network output.
  double predict(const std::vector<std::uint32_t>& features) const;

  std::string encode() const;
  static ValueNet decode(const std::string& bytes);
  void save(const std::filesystem::path& path) const;
  static ValueNet load(const std::filesystem::path& path);
};

struct ValueTrainConfig {
  int epochs = 30;
  std::size_t batch_size = 32;
  nn::AdamConfig adam{1e-3};
  std::uint64_t seed = 0;
};

struct ValueTrainResult {
  ValueNet model;
  /// Mean squared error on the training set, epoch 0 before any update.
  std::vector<double> mse;
};

double mean_squared_error(const ValueNet& net, const std::vector<ValueExample>& data);

ValueTrainResult train_value_net(const std::vector<ValueExample>& data, const ValueNet& init,
                                 const ValueTrainConfig& cfg);

}  // namespace retrograph
