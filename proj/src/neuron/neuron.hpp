#pragma once

#include <algorithm>
#include <cstddef>
#include <span>
#include <vector>

#include "core/tensor.hpp"

namespace lnm {

// Coefficients of the subthreshold dynamics f(u) = sum_i coeffs[i] u^i for
// one spiking layer. coeffs[0] is pinned to zero so that f(0) = 0.
class LnmParams {
public:
  LnmParams() : coeffs_{0.0, 0.0} {}
  // Throws ConfigError if coeffs.size() < 2. A non-zero constant term is
  // cleared.
  explicit LnmParams(std::vector<double> coeffs);

  int degree() const noexcept { return static_cast<int>(coeffs_.size()) - 1; }
  std::span<const double> coeffs() const noexcept { return coeffs_; }
  std::span<double> mutable_coeffs() noexcept { return coeffs_; }
  double operator[](std::size_t i) const { return coeffs_[i]; }

  // Re-establish f(0) = 0 after an external update.
  void enforce_zero_origin() noexcept { coeffs_[0] = 0.0; }

  friend bool operator==(const LnmParams &, const LnmParams &) = default;

private:
  std::vector<double> coeffs_;
};

enum class SurrogateKind { rectangle, triangle };

struct SurrogateConfig {
  SurrogateKind kind = SurrogateKind::rectangle;
  double width = 1.0;

  friend bool operator==(const SurrogateConfig &, const SurrogateConfig &) = default;
};

struct LayerNeuronConfig {
  double threshold = 0.5;
  SurrogateConfig surrogate;
  LnmParams params;
};

// Throws ConfigError on threshold <= 0 or width <= 0.
void validate(const LayerNeuronConfig &cfg);

struct NeuronState {
  Tensor membrane;
  Tensor spikes;

  static NeuronState resting(const Shape &shape) { return {Tensor(shape), Tensor(shape)}; }
};

// Quantities of one membrane update kept for the backward pass.
struct StepRecord {
  Tensor u_prev;  // u(t)
  Tensor u_next;  // u(t+1)
  Tensor o_prev;  // o(t), the reset mask
  Tensor o_next;  // o(t+1)
  Tensor input;   // I(t)
};

inline constexpr double kClipLo = -1.0;
inline constexpr double kClipHi = 1.0;

// Horner evaluation: N multiply-adds for degree N. Generic over the scalar
// so the operation count can be instrumented.
template <class Real>
Real horner(std::span<const double> coeffs, Real x) {
  const std::size_t n = coeffs.size() - 1;
  Real acc = Real(coeffs[n]);
  for (std::size_t i = n; i-- > 0;)
    acc = acc * x + Real(coeffs[i]);
  return acc;
}

// d/dx of the polynomial, also by Horner.
template <class Real>
Real horner_derivative(std::span<const double> coeffs, Real x) {
  const std::size_t n = coeffs.size() - 1;
  Real acc = Real(static_cast<double>(n) * coeffs[n]);
  for (std::size_t i = n - 1; i >= 1; --i)
    acc = acc * x + Real(static_cast<double>(i) * coeffs[i]);
  return acc;
}

// f(clip(u)) for a scalar.
inline double eval_poly(const LnmParams &p, double u) {
  return horner(p.coeffs(), std::clamp(u, kClipLo, kClipHi));
}

// f'(clip(u)) times the clip subgradient (0 outside [-1, 1]).
inline double eval_poly_slope(const LnmParams &p, double u) {
  if (u < kClipLo || u > kClipHi)
    return 0.0;
  return horner_derivative(p.coeffs(), u);
}

Tensor eval_poly_horner(const LnmParams &params, const Tensor &u);
Tensor eval_poly_derivative(const LnmParams &params, const Tensor &u);

// u(t+1) = [u(t) + f(clip(u(t)))] (1 - o(t)) + I(t),  o(t+1) = H(u(t+1) - u_th).
// Throws NumericalError naming layer/timestep if the membrane turns non-finite.
NeuronState step(const NeuronState &state, const Tensor &input, const LayerNeuronConfig &cfg,
                 StepRecord *record = nullptr, int layer = -1, int timestep = -1);

// d o(t+1) / d u(t+1) surrogate.
double surrogate_grad(double u_next, const LayerNeuronConfig &cfg);
Tensor surrogate_grad(const Tensor &u_next, const LayerNeuronConfig &cfg);

// Antiderivative of the surrogate: a smoothed Heaviside used as the spike
// function of the relaxed model that gradient checks differentiate.
double relaxed_spike(double u_next, const LayerNeuronConfig &cfg);

// u(t+1) values where the relaxed model is not smooth (threshold, surrogate
// window edges); the clip kinks at +-1 apply to u(t).
std::vector<double> kink_points(const LayerNeuronConfig &cfg);

// LIF dynamics: f(u) = -decay * u.
LnmParams lif_init(int degree, double decay = 0.5);

} // namespace lnm
