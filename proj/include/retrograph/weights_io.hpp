#pragma once

#include <filesystem>
#include <string>

#include "json.hpp"
#include "retrograph/numerics.hpp"

namespace retrograph {

/// Weight file layout: one line of compact JSON header (format tag, version,
/// model kind, hyperparameters, tensor names and shapes, value count), a
/// '\n', then every tensor's values as little-endian IEEE-754 doubles in
/// header order, row-major.
inline constexpr int kWeightFormatVersion = 1;

std::string encode_weights(const std::string& kind, const nlohmann::json& hyper,
                           const nn::ConstParameterList& params);

/// Parses the header only.
nlohmann::json decode_weight_header(const std::string& bytes);

/// Fills `params` (which must match the stored names and shapes) and returns
/// the header. Throws ConfigError on mismatch or truncation.
nlohmann::json decode_weights(const std::string& bytes, const std::string& kind,
                              const nn::ParameterList& params);

void save_weights(const std::filesystem::path& path, const std::string& kind,
                  const nlohmann::json& hyper, const nn::ConstParameterList& params);
std::string read_file_bytes(const std::filesystem::path& path);

}  // namespace retrograph
