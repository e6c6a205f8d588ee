#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <string>

#include "analysis/analysis.hpp"
#include "network/network.hpp"
#include "training/training.hpp"

namespace lnm {

enum class DatasetKind { idx_images, synthetic_temporal, framed_events };

struct DatasetDescriptor {
  DatasetKind kind = DatasetKind::synthetic_temporal;
  // synthetic_temporal
  std::size_t classes = 8;
  std::size_t train_samples = 2000;
  std::size_t val_samples = 500;
  double noise = 0.0;
  std::uint64_t seed = 1;
  // idx_images, framed_events
  std::string train_images;
  std::string train_labels;
  std::string val_images;
  std::string val_labels;
  double val_fraction = 0.0;  // held out from the training files when no val files are given

  friend bool operator==(const DatasetDescriptor &, const DatasetDescriptor &) = default;
};

struct EnergyOptions {
  double e_ac = 0.9;
  double e_mac = 4.6;
  bool lif_decay_is_mac = true;
  std::size_t samples = 256;  // samples forwarded to measure firing rates

  EnergyModel model() const { return {e_ac, e_mac, lif_decay_is_mac}; }
  friend bool operator==(const EnergyOptions &, const EnergyOptions &) = default;
};

struct GradCheckConfig {
  double h = 1e-5;
  double tol = 1e-4;
  std::size_t batch = 4;
  std::size_t max_entries = 32;  // per tensor; 0 checks all

  friend bool operator==(const GradCheckConfig &, const GradCheckConfig &) = default;
};

struct ReduceConfig {
  int target_degree = 2;
  int samples = kReductionSamples;

  friend bool operator==(const ReduceConfig &, const ReduceConfig &) = default;
};

struct DumpConfig {
  int samples = 101;

  friend bool operator==(const DumpConfig &, const DumpConfig &) = default;
};

struct RunConfig {
  NetworkSpec network;
  TrainConfig train;
  DatasetDescriptor dataset;
  std::string output_dir = "out";
  std::uint64_t seed = 0;
  std::string checkpoint;  // optional input checkpoint for eval/energy/dump-models/reduce
  EnergyOptions energy;
  GradCheckConfig grad_check;
  ReduceConfig reduce;
  DumpConfig dump;

  friend bool operator==(const RunConfig &, const RunConfig &) = default;
};

// Strict parse: unknown keys, wrong types, and invalid values raise
// ConfigError with the JSON path of the offending field.
RunConfig parse_run_config(const std::string &json_text);
RunConfig load_run_config(const std::filesystem::path &path);

// Every field, defaults included; parse_run_config(to_json_text(c)) == c.
std::string to_json_text(const RunConfig &cfg);

} // namespace lnm
