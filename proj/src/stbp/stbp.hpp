#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "network/network.hpp"

namespace lnm {

struct LayerGrad {
  Tensor weight;
  Tensor bias;
  Tensor theta;  // [degree + 1]; entry 0 is always zero
};

struct GradientSet {
  std::vector<LayerGrad> layers;

  // Zero gradients shaped like the parameters of net.
  static GradientSet zeros_like(const Network &net);
  void axpy(double s, const GradientSet &other);
  double squared_norm() const;
  void scale(double s);
};

enum class ParamGroup { weight, bias, theta };
const char *to_string(ParamGroup g);

struct ParamView {
  std::string name;  // e.g. "layer2.theta"
  std::size_t layer;
  ParamGroup group;
  std::span<double> values;
};

// Every trainable tensor of net, in layer order (weight, bias, theta).
std::vector<ParamView> parameters(Network &net);
// The matching gradient tensor for a parameter view.
std::span<double> gradient_of(GradientSet &grads, const ParamView &p);
std::span<const double> gradient_of(const GradientSet &grads, const ParamView &p);

// Reverse sweep over the unrolled tape. loss_grad is d loss / d logits.
GradientSet backward(const Network &net, const Tape &tape, const Tensor &loss_grad);

// Re-run every recorded neuron update from its recorded inputs and compare
// bit-for-bit with what the tape holds.
bool replay_matches(const Network &net, const Tape &tape);

struct Batch {
  Tensor inputs;  // [T, B, ...]
  std::vector<int> labels;
};

struct CheckOptions {
  double h = 1e-5;
  double tol = 1e-4;
  double label_smoothing = 0.0;
  double abs_floor = 1e-6;            // denominator floor of the relative error
  std::size_t max_entries_per_tensor = 0;  // 0 checks every entry
  std::uint64_t seed = 0;             // picks entries when sampling
};

struct GroupReport {
  std::string name;
  std::size_t checked = 0;
  std::size_t excluded = 0;  // perturbation crossed a kink of the relaxed model
  double max_rel_error = 0.0;
  std::size_t worst_index = 0;
  std::vector<std::size_t> flagged;
  bool passed = true;
};

struct CheckReport {
  std::vector<GroupReport> groups;
  double max_rel_error = 0.0;
  std::size_t checked = 0;
  std::size_t excluded = 0;
  bool passed = true;
};

// Analytic gradients of the relaxed model (SpikeMode::relaxed).
GradientSet relaxed_gradients(const Network &net, const Batch &batch, double label_smoothing);
double relaxed_loss(const Network &net, const Batch &batch, double label_smoothing);

// Central finite differences of the relaxed loss against a supplied
// gradient set; entries whose perturbation changes the kink regime of any
// recorded membrane value are excluded rather than compared.
CheckReport compare_with_finite_differences(const Network &net, const Batch &batch,
                                            const GradientSet &analytic,
                                            const CheckOptions &options);

// relaxed_gradients followed by compare_with_finite_differences. Failures
// are reported, not thrown.
CheckReport grad_check(const Network &net, const Batch &batch, const CheckOptions &options);

} // namespace lnm
