#include "retrograph/valuenet.hpp"

#include <algorithm>

#include "retrograph/error.hpp"
#include "retrograph/weights_io.hpp"

namespace retrograph {

using nlohmann::json;
using nn::Index;
using nn::Matrix;
using nn::Tape;
using nn::Var;

namespace {
constexpr const char* kValueKind = "value";
}

void ValueNetConfig::validate() const {
  if (feature_bits < 8) throw ConfigError("value net feature_bits must be >= 8");
  if (hidden < 1) throw ConfigError("value net hidden width must be >= 1");
}

json ValueNetConfig::to_json() const { return json{{"feature_bits", feature_bits}, {"hidden", hidden}}; }

ValueNetConfig ValueNetConfig::from_json(const json& j) {
  ValueNetConfig c;
  try {
    c.feature_bits = j.value("feature_bits", c.feature_bits);
    c.hidden = j.value("hidden", c.hidden);
  } catch (const json::exception& e) {
    throw ConfigError(std::string("bad value net config: ") + e.what());
  }
  c.validate();
  return c;
}

ValueNet::ValueNet(ValueNetConfig cfg) : config(cfg) {
  config.validate();
  l1 = nn::Linear("l1", static_cast<Index>(config.feature_bits), config.hidden);
  l2 = nn::Linear("l2", config.hidden, 1);
}

ValueNet ValueNet::initialized(ValueNetConfig cfg, std::uint64_t seed) {
  ValueNet v(cfg);
  nn::init_uniform_fan_in(v.parameters(), seed);
  return v;
}

nn::ParameterList ValueNet::parameters() {
  nn::ParameterList out;
  l1.collect(out);
  l2.collect(out);
  return out;
}

nn::ConstParameterList ValueNet::parameters() const {
  nn::ConstParameterList out;
  l1.collect(out);
  l2.collect(out);
  return out;
}

Var ValueNet::forward(Tape& t, const std::vector<std::vector<std::uint32_t>>& rows) const {
  for (const auto& r : rows) {
    for (auto b : r) {
      if (b >= config.feature_bits) throw ConfigError("value net: feature bit out of range");
    }
  }
  Var h = t.relu(t.add_row(t.sparse_binary_matmul(rows, t.param(l1.weight)), t.param(l1.bias)));
  return l2.forward(t, h);
}

double ValueNet::predict(const std::vector<std::uint32_t>& features) const {
  Tape t(false);
  return forward(t, {features}).value()(0, 0);
}

std::string ValueNet::encode() const { return encode_weights(kValueKind, config.to_json(), parameters()); }

ValueNet ValueNet::decode(const std::string& bytes) {
  const json header = decode_weight_header(bytes);
  ValueNet v(ValueNetConfig::from_json(header.at("hyper")));
  decode_weights(bytes, kValueKind, v.parameters());
  return v;
}

void ValueNet::save(const std::filesystem::path& path) const {
  save_weights(path, kValueKind, config.to_json(), parameters());
}

ValueNet ValueNet::load(const std::filesystem::path& path) { return decode(read_file_bytes(path)); }

double mean_squared_error(const ValueNet& net, const std::vector<ValueExample>& data) {
  if (data.empty()) return 0.0;
  std::vector<std::vector<std::uint32_t>> rows;
  rows.reserve(data.size());
  for (const auto& e : data) rows.push_back(e.features);
  Tape t(false);
  const Matrix& out = net.forward(t, rows).value();
  double sum = 0.0;
  for (std::size_t i = 0; i < data.size(); ++i) {
    const double d = out(static_cast<Index>(i), 0) - data[i].cost;
    sum += d * d;
  }
  return sum / static_cast<double>(data.size());
}

ValueTrainResult train_value_net(const std::vector<ValueExample>& data, const ValueNet& init,
                                 const ValueTrainConfig& cfg) {
  if (data.empty()) throw ConfigError("value net training set is empty");
  if (cfg.batch_size < 1) throw ConfigError("batch size must be >= 1");
  ValueTrainResult r{init, {}};
  nn::ParameterList params = r.model.parameters();
  nn::AdamState adam = nn::make_adam(params, cfg.adam);
  r.mse.push_back(mean_squared_error(r.model, data));

  std::vector<std::size_t> order(data.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  Rng shuffler(hash_combine(cfg.seed, 0x7a1e));
  for (int epoch = 1; epoch <= cfg.epochs; ++epoch) {
    shuffler.shuffle(order);
    for (std::size_t start = 0; start < order.size(); start += cfg.batch_size) {
      const std::size_t end = std::min(order.size(), start + cfg.batch_size);
      std::vector<std::vector<std::uint32_t>> rows;
      Matrix target(static_cast<Index>(end - start), 1);
      for (std::size_t k = start; k < end; ++k) {
        rows.push_back(data[order[k]].features);
        target(static_cast<Index>(k - start), 0) = data[order[k]].cost;
      }
      for (nn::Parameter* p : params) p->zero_grad();
      Tape t(true);
      Var pred = r.model.forward(t, rows);
      Var diff = t.add(pred, t.constant(-target));
      Var loss = t.scale(t.sum(t.mul(diff, diff)), 1.0 / static_cast<double>(end - start));
      t.backward(loss);
      nn::adam_step(adam, params);
    }
    r.mse.push_back(mean_squared_error(r.model, data));
  }
  return r;
}

}  // namespace retrograph
