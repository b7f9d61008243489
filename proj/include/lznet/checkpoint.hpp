#pragma once

#include <cstdint>
#include <map>
#include <string>

#include "lznet/tensor.hpp"

namespace lznet::io {

inline constexpr std::uint32_t kCheckpointVersion = 1;

/// Named-tensor container with a config echo and the trainer RNG state.
/// Binary layout: magic, version, config echo, RNG state, then each tensor
/// as a length-prefixed name, rank, dims and little-endian doubles.
/// Save/load round trips are byte-exact.
struct Checkpoint {
    std::uint32_t version = kCheckpointVersion;
    std::string config_echo;
    std::string rng_state;
    std::map<std::string, ad::Tensor> tensors;
};

void save_checkpoint(const std::string& path, const Checkpoint& ckpt);
Checkpoint load_checkpoint(const std::string& path);

}  // namespace lznet::io
