#include "retrograph/weights_io.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <sstream>

#include "retrograph/error.hpp"

namespace retrograph {

using nlohmann::json;

namespace {

void append_le(std::string& out, double v) {
  std::uint64_t bits = std::bit_cast<std::uint64_t>(v);
  for (int i = 0; i < 8; ++i) out.push_back(static_cast<char>((bits >> (8 * i)) & 0xff));
}

double read_le(const char* p) {
  std::uint64_t bits = 0;
  for (int i = 0; i < 8; ++i) bits |= static_cast<std::uint64_t>(static_cast<unsigned char>(p[i])) << (8 * i);
  return std::bit_cast<double>(bits);
}

}  // namespace

std::string encode_weights(const std::string& kind, const json& hyper, const nn::ConstParameterList& params) {
  json tensors = json::array();
  std::size_t count = 0;
  for (const nn::Parameter* p : params) {
    tensors.push_back({{"name", p->name}, {"shape", {p->value.rows(), p->value.cols()}}});
    count += static_cast<std::size_t>(p->value.size());
  }
  json header{{"format", "retrograph-weights"},
              {"version", kWeightFormatVersion},
              {"kind", kind},
              {"hyper", hyper},
              {"tensors", tensors},
              {"count", count}};
  std::string out = header.dump();
  out.push_back('\n');
  out.reserve(out.size() + count * 8);
  for (const nn::Parameter* p : params) {
    for (nn::Index i = 0; i < p->value.size(); ++i) append_le(out, p->value.data()[i]);
  }
  return out;
}

json decode_weight_header(const std::string& bytes) {
  auto nl = bytes.find('\n');
  if (nl == std::string::npos) throw ConfigError("weight file has no header line");
  json header;
  try {
    header = json::parse(bytes.substr(0, nl));
  } catch (const std::exception& e) {
    throw ConfigError(std::string("weight file header is not JSON: ") + e.what());
  }
  if (header.value("format", "") != "retrograph-weights") throw ConfigError("not a retrograph weight file");
  if (header.value("version", 0) != kWeightFormatVersion) throw ConfigError("unsupported weight file version");
  return header;
}

json decode_weights(const std::string& bytes, const std::string& kind, const nn::ParameterList& params) {
  json header = decode_weight_header(bytes);
  if (header.at("kind").get<std::string>() != kind) {
    throw ConfigError("weight file holds a '" + header.at("kind").get<std::string>() + "' model, expected '" +
                      kind + "'");
  }
  const auto& tensors = header.at("tensors");
  if (tensors.size() != params.size()) throw ConfigError("weight file tensor count does not match model");
  const std::size_t count = header.at("count").get<std::size_t>();
  const std::size_t offset = bytes.find('\n') + 1;
  if (bytes.size() != offset + count * 8) throw ConfigError("weight file is truncated or has trailing bytes");
  const char* p = bytes.data() + offset;
  for (std::size_t k = 0; k < params.size(); ++k) {
    nn::Parameter& param = *params[k];
    const auto& t = tensors[k];
    if (t.at("name").get<std::string>() != param.name || t.at("shape").at(0).get<nn::Index>() != param.value.rows() ||
        t.at("shape").at(1).get<nn::Index>() != param.value.cols()) {
      throw ConfigError("weight tensor '" + t.at("name").get<std::string>() + "' does not match model layout");
    }
    for (nn::Index i = 0; i < param.value.size(); ++i, p += 8) param.value.data()[i] = read_le(p);
    param.zero_grad();
  }
  return header;
}

void save_weights(const std::filesystem::path& path, const std::string& kind, const json& hyper,
                  const nn::ConstParameterList& params) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ConfigError("cannot write weight file " + path.string());
  const std::string bytes = encode_weights(kind, hyper, params);
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw ConfigError("failed writing weight file " + path.string());
}

std::string read_file_bytes(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace retrograph
