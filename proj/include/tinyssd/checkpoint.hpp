#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "tinyssd/net.hpp"
#include "tinyssd/tensor.hpp"

namespace tinyssd {

// On-disk model snapshot. Binary little-endian layout:
//   magic "SSDT" | u32 version | u64 step | u64 seed | u64 record count |
//   records: u32 name length | name bytes | u32 rank | u64 extents[rank] |
//            f32 data[numel]
struct Checkpoint {
  uint32_t version = 1;
  uint64_t step = 0;
  uint64_t seed = 0;
  std::vector<std::pair<std::string, Tensor<float>>> tensors;
};

void save_checkpoint(const Checkpoint& ckpt, const std::string& path);
Checkpoint load_checkpoint(const std::string& path);

Checkpoint checkpoint_from(const NetParams<float>& params, uint64_t step,
                           uint64_t seed);
// Copies tensors into the (already shaped) parameter set; throws on any
// missing name or shape mismatch.
void checkpoint_into(const Checkpoint& ckpt, NetParams<float>& params);

}  // namespace tinyssd
