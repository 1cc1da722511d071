#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "rewardlab/nn.hpp"

namespace rewardlab {

// Binary parameter file:
//   "NRLB1" | u64 layer count L | L x u64 layer sizes | u64 value count K |
//   K x f64 values
// All integers and floats little-endian. Values may extend past the network
// parameters (e.g. a policy's log-std).
struct ParameterBlob {
  std::vector<int> layer_sizes;
  Vector values;
};

std::string encode_parameters(const ParameterBlob& blob);
// Throws std::runtime_error on a bad magic, truncation or trailing bytes.
ParameterBlob decode_parameters(const std::string& bytes);

void save_parameters(const std::filesystem::path& path, const ParameterBlob& blob);
ParameterBlob load_parameters(const std::filesystem::path& path);

}  // namespace rewardlab
