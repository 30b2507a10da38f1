#pragma once

#include <filesystem>

#include "pofsm/network.hpp"

namespace pofsm {

// Binary weight snapshots. Layout (all integers little-endian):
//   "PSMW" | u32 version | u64 architecture digest | u32 spec text length |
//   spec text | u64 float count | float32 data, parameterized layers in
//   network order, weights then biases per layer.
// Float32 storage round-trips Network<float> parameters exactly.
void save_weights(const Network<float>& net, const std::filesystem::path& path);

// Fills `net` from `path`. Digest mismatch -> ConfigError (incompatible
// architecture); truncated or malformed file -> DataError.
void load_weights(Network<float>& net, const std::filesystem::path& path);

// Reconstructs the network from the spec text embedded in the file.
Network<float> load_network(const std::filesystem::path& path);

}  // namespace pofsm
