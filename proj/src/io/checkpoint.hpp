#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "core/rng.hpp"
#include "network/network.hpp"

namespace lnm {

// "LNM1" checkpoint, all fields little-endian:
//   char[4]  magic "LNM1"
//   u32      format version (1)
//   u64      training epoch
//   u64[4]   rng state
//   u32      tensor count, then per tensor:
//              u32 name length, name bytes, u32 rank, u64 dims[rank],
//              f64 values[product(dims)]
// Tensor names are layer<i>.weight, layer<i>.bias and layer<i>.theta.
inline constexpr std::uint32_t kCheckpointVersion = 1;

struct NamedTensor {
  std::string name;
  Tensor tensor;
};

struct Checkpoint {
  std::uint64_t epoch = 0;
  Rng::State rng{};
  std::vector<NamedTensor> tensors;
};

Checkpoint make_checkpoint(const Network &net, std::uint64_t epoch, const Rng::State &rng);
std::vector<std::uint8_t> encode_checkpoint(const Checkpoint &ckpt);
// Throws DataError with the byte offset on a bad magic, version, or truncation.
Checkpoint decode_checkpoint(std::span<const std::uint8_t> bytes);

// Overwrite the parameters of a network built from the matching spec. A
// theta tensor may carry a different degree (reduced checkpoints); the
// layer spec follows it. Missing, unknown, or mis-shaped tensors are
// DataErrors.
void apply_checkpoint(Network &net, const Checkpoint &ckpt);

void save_checkpoint(const std::filesystem::path &path, const Network &net, std::uint64_t epoch,
                     const Rng::State &rng);
Checkpoint load_checkpoint(const std::filesystem::path &path);

} // namespace lnm
