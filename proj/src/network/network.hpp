#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "core/rng.hpp"
#include "core/tensor.hpp"
#include "neuron/neuron.hpp"

namespace lnm {

enum class LayerKind { dense, conv2d, spiking, avgpool, flatten, decoder };

const char *to_string(LayerKind kind);
LayerKind parse_layer_kind(const std::string &name);

struct LayerSpec {
  LayerKind kind = LayerKind::dense;
  // dense
  std::size_t units = 0;
  // conv2d
  std::size_t filters = 0;
  std::size_t kernel = 3;
  std::size_t stride = 1;
  std::size_t padding = 0;
  // avgpool
  std::size_t pool = 2;
  // dense, conv2d
  bool bias = true;
  // spiking
  double threshold = 0.5;
  SurrogateConfig surrogate;
  int degree = 3;
  double lif_decay = 0.5;

  friend bool operator==(const LayerSpec &, const LayerSpec &) = default;
};

struct NetworkSpec {
  Shape input_shape;  // per sample, per timestep
  std::vector<LayerSpec> layers;
  int timesteps = 4;
  std::size_t num_classes = 10;

  friend bool operator==(const NetworkSpec &, const NetworkSpec &) = default;
};

// Per-layer input shapes plus the final output shape (size layers+1).
// Throws ConfigError on any structural problem.
std::vector<Shape> infer_shapes(const NetworkSpec &spec);

struct Layer {
  LayerSpec spec;
  Shape in_shape;
  Shape out_shape;
  Tensor weight;  // dense/decoder [out, in]; conv2d [F, C, K, K]
  Tensor bias;    // dense [out]; conv2d [F]
  LayerNeuronConfig neuron;  // spiking only; neuron.params is learned

  bool has_weight() const {
    return spec.kind == LayerKind::dense || spec.kind == LayerKind::conv2d ||
           spec.kind == LayerKind::decoder;
  }
};

struct Network {
  NetworkSpec spec;
  std::vector<Layer> layers;

  std::size_t spiking_layer_count() const;
  friend bool operator==(const Network &a, const Network &b);
};

// Kaiming fan-in normal weights, zero biases, LIF-initialized neuron models.
Network build(const NetworkSpec &spec, Rng &rng);

enum class SpikeMode {
  hard,     // Heaviside spikes
  relaxed,  // spikes replaced by the surrogate's antiderivative; reset stays hard
};

struct LayerTape {
  std::vector<Tensor> inputs;      // weight layers: input batch per timestep
  std::vector<StepRecord> steps;    // spiking layers: one record per timestep
};

struct Tape {
  int timesteps = 0;
  std::size_t batch = 0;
  SpikeMode mode = SpikeMode::hard;
  std::vector<LayerTape> layers;
};

struct SpikeStats {
  std::vector<double> spikes;        // per layer, total spikes emitted
  std::vector<double> neuron_steps;  // per layer, neurons x timesteps x samples

  // Average firing rate of layer l; 0 for non-spiking layers.
  double rate(std::size_t l) const;
  void merge(const SpikeStats &other);
};

struct ForwardOptions {
  SpikeMode mode = SpikeMode::hard;
  bool record_tape = true;
};

struct ForwardResult {
  Tensor logits;  // [B, m]
  Tape tape;
  SpikeStats stats;
};

// input_sequence is [T, B, ...input_shape].
ForwardResult forward(const Network &net, const Tensor &input_sequence,
                      const ForwardOptions &options = {});

// Direct encoding: [B, ...] -> [T, B, ...], the image repeated every step.
Tensor encode_static(const Tensor &image, int timesteps);

} // namespace lnm
