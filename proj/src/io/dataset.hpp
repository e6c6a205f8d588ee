#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include "io/config.hpp"
#include "training/training.hpp"

namespace lnm {

// Raw contents of an unsigned-byte IDX file (magic 0x0000 08 NN, big-endian
// u32 dimensions).
struct IdxArray {
  Shape dims;
  std::vector<std::uint8_t> data;
};

// Throws DataError (with the byte offset) on a bad magic or truncation.
IdxArray parse_idx(std::span<const std::uint8_t> bytes);
IdxArray read_idx(const std::filesystem::path &path);

// Images [N,H,W] (or [N,C,H,W]) scaled to [0,1] as [N,C,H,W] plus labels.
Dataset load_idx(const std::filesystem::path &images, const std::filesystem::path &labels);
// Pre-framed event tensors [N,T,...] scaled to [0,1], temporal.
Dataset load_framed_events(const std::filesystem::path &frames,
                           const std::filesystem::path &labels);

struct SyntheticTemporalParams {
  std::size_t classes = 8;
  std::size_t samples = 100;
  int timesteps = 6;
  double noise = 0.0;
  std::uint64_t seed = 1;
};

// Two-phase cue task with 2*classes input channels. In the first half of
// the sequence a random cue a lights channel a; in the second half channel
// classes + (a + label) mod classes lights. Every timestep on its own is
// uniformly distributed regardless of the label, so the label is only
// recoverable by relating the two phases over time. Each input bit is then
// flipped with probability `noise`.
Dataset gen_synthetic_temporal(const SyntheticTemporalParams &p);

struct DataSplit {
  Dataset train;
  Dataset val;
};

// Materialize the descriptor and check it against the network's input
// shape, timesteps, and class count (ConfigError / DataError).
DataSplit load_dataset(const DatasetDescriptor &d, const NetworkSpec &spec);

} // namespace lnm
