#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "alst/model.hpp"

namespace alst {

inline constexpr char kModelMagic[6] = {'A', 'L', 'S', 'T', 'M', '1'};
inline constexpr std::uint32_t kModelFormatVersion = 1;

/// Binary model file:
///   magic "ALSTM1" | u32 version | u32 n + n bytes UTF-8 JSON metadata |
///   u32 tensor count | per tensor: u32 name length, name, u32 rank,
///   rank x u32 dims, product(dims) x f64 row-major values.
/// All integers and floats little-endian.
std::vector<std::uint8_t> serialize_model(const ModelParams& m);
ModelParams deserialize_model(std::span<const std::uint8_t> bytes);

void save_model(const ModelParams& m, const std::string& path);
ModelParams load_model(const std::string& path);

}  // namespace alst
