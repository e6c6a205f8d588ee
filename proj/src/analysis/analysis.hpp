#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "network/network.hpp"
#include "neuron/neuron.hpp"

namespace lnm {

// Energy per operation, picojoules (32-bit float, 45nm).
struct EnergyModel {
  double e_ac = 0.9;
  double e_mac = 4.6;
  // Count the LIF decay multiply as one MAC per neuron per timestep.
  bool lif_decay_is_mac = true;
};

struct LayerOpCount {
  double op_ac = 0.0;   // accumulates per timestep
  double op_mac = 0.0;  // multiply-accumulates per timestep
  double fr = 0.0;      // average firing rate scaling the AC term
  bool is_first_layer = false;
};

// E = T (fr E_AC OP_AC + E_MAC OP_MAC), picojoules.
double layer_energy(const LayerOpCount &c, int timesteps, const EnergyModel &model);

// Fan-in accumulates of a weight layer.
double synaptic_ops(std::size_t fan_in, std::size_t outputs);
// Neuron-update MACs per timestep: degree per neuron for the polynomial
// model (Horner), one per neuron for LIF (zero if the decay is free).
double lnm_update_macs(std::size_t neurons, int degree);
double lif_update_macs(std::size_t neurons, const EnergyModel &model);

struct LayerEnergyRow {
  std::size_t layer = 0;
  std::string kind;
  double op_ac = 0.0;
  double op_mac_lif = 0.0;
  double op_mac_lnm = 0.0;
  double fr = 0.0;
  bool is_first_layer = false;
  double e_lif = 0.0;  // pJ
  double e_lnm = 0.0;  // pJ
};

struct EnergyReport {
  std::vector<LayerEnergyRow> layers;
  double total_lif = 0.0;  // pJ
  double total_lnm = 0.0;  // pJ
  double overhead = 0.0;   // (lnm - lif) / lif

  double overhead_percent() const { return 100.0 * overhead; }
};

// Operation counts per layer under both neuron models, assuming the firing
// rates measured in stats for both. A weight layer fed by real values (no
// spiking layer upstream) is counted as MACs; otherwise as ACs at the rate
// of the nearest upstream spiking layer.
std::vector<LayerEnergyRow> count_ops(const Network &net, const SpikeStats &stats,
                                      const EnergyModel &model);

EnergyReport energy_report(const Network &net, const SpikeStats &stats,
                           const EnergyModel &model);

struct ModelDumpRow {
  std::size_t layer;
  double u;
  double f;
};

// f(u) on a uniform grid over [-1, 1] for every spiking layer.
std::vector<ModelDumpRow> dump_models(const Network &net, int samples);

struct Reduction {
  LnmParams params;
  double max_error = 0.0;  // max |p - q| on the fitting grid
  double rms_error = 0.0;  // the quantity least squares minimises
};

inline constexpr int kReductionSamples = 1024;

// Least-squares fit of a degree-`target_degree` polynomial with zero constant
// term to `params` on a uniform grid over [-1, 1] (normal equations,
// Cholesky). Throws ConfigError for a target outside [1, degree] and
// NumericalError if the normal matrix is not positive definite.
Reduction reduce_degree(const LnmParams &params, int target_degree,
                        int samples = kReductionSamples);

} // namespace lnm
