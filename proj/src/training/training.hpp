#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "core/rng.hpp"
#include "network/network.hpp"
#include "stbp/stbp.hpp"
#include "training/loss.hpp"

namespace lnm {

struct TrainConfig {
  int epochs = 10;
  std::size_t batch_size = 32;
  double lr_weights = 0.1;
  double lr_lnm = 0.1;
  double momentum = 0.9;
  double weight_decay = 5e-4;
  double label_smoothing = 0.0;
  int warmup_epochs = 0;
  std::string scheduler = "cosine";
  double grad_clip = 0.0;  // global-norm clip; 0 disables
  std::uint64_t seed = 0;

  friend bool operator==(const TrainConfig &, const TrainConfig &) = default;
};

// Throws ConfigError. Learning rates of 0 are accepted and freeze the group.
void validate(const TrainConfig &cfg);

struct Dataset {
  // [N, T, ...] when temporal, otherwise [N, ...] static frames.
  Tensor inputs;
  std::vector<int> labels;
  bool temporal = false;

  std::size_t size() const noexcept { return labels.size(); }
  Shape sample_shape() const;  // per timestep, without N and T
};

// Gathers samples into the [T, B, ...] layout forward() expects.
Batch make_batch(const Dataset &data, std::span<const std::size_t> indices, int timesteps);

struct SgdSettings {
  double lr_weights = 0.1;
  double lr_lnm = 0.1;
  double momentum = 0.9;
  double weight_decay = 0.0;
};

// v <- momentum v + g + wd p;  p <- p - lr v. Neuron coefficients use lr_lnm,
// take no weight decay, and get their constant term re-zeroed afterwards.
void sgd_step(Network &net, const GradientSet &grads, GradientSet &velocity,
              const SgdSettings &s);

// Linear warmup to base_lr over `warmup` epochs, then half-cosine decay.
double cosine_lr(int epoch, int total, double base_lr, int warmup);

struct EpochMetrics {
  int epoch = 0;
  double lr_weights = 0.0;
  double lr_lnm = 0.0;
  double train_loss = 0.0;
  double train_acc = 0.0;
  double val_acc = 0.0;
  std::vector<double> firing_rates;         // per spiking layer
  std::vector<std::vector<double>> theta;   // per spiking layer

  friend bool operator==(const EpochMetrics &, const EpochMetrics &) = default;
};

struct Metrics {
  std::vector<EpochMetrics> epochs;
  int best_epoch = -1;
  double best_val_acc = 0.0;

  friend bool operator==(const Metrics &, const Metrics &) = default;
};

struct TrainResult {
  Network network;  // best-validation checkpoint (last epoch without validation data)
  Network last;
  Metrics metrics;
};

// Called after every optimizer step with the updated network.
using StepObserver = std::function<void(const Network &, std::size_t step)>;

// Deterministic given the network, data, config, and rng state. Numerical
// failures surface as NumericalError with the epoch in the message.
TrainResult train(Network net, const Dataset &train_data, const Dataset *val_data,
                  const TrainConfig &cfg, Rng &rng, const StepObserver &observer = {});

struct EvalResult {
  double top1 = 0.0;
  double loss = 0.0;
  SpikeStats stats;
};

EvalResult evaluate(const Network &net, const Dataset &data, std::size_t batch_size,
                    double label_smoothing = 0.0);

std::size_t count_correct(const Tensor &logits, std::span<const int> labels);

} // namespace lnm
