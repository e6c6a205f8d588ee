#include "neuron/neuron.hpp"

#include <cmath>
#include <string>

#include "core/error.hpp"

namespace lnm {

LnmParams::LnmParams(std::vector<double> coeffs) : coeffs_(std::move(coeffs)) {
  if (coeffs_.size() < 2)
    throw ConfigError("LNM polynomial needs degree >= 1, got " +
                      std::to_string(static_cast<int>(coeffs_.size()) - 1));
  coeffs_[0] = 0.0;
}

void validate(const LayerNeuronConfig &cfg) {
  if (!(cfg.threshold > 0.0))
    throw ConfigError("spiking threshold must be > 0");
  if (!(cfg.surrogate.width > 0.0))
    throw ConfigError("surrogate width must be > 0");
  if (cfg.params.degree() < 1)
    throw ConfigError("LNM degree must be >= 1");
}

Tensor eval_poly_horner(const LnmParams &params, const Tensor &u) {
  Tensor out(u.shape());
  for (std::size_t i = 0; i < u.size(); ++i)
    out[i] = eval_poly(params, u[i]);
  return out;
}

Tensor eval_poly_derivative(const LnmParams &params, const Tensor &u) {
  Tensor out(u.shape());
  for (std::size_t i = 0; i < u.size(); ++i)
    out[i] = eval_poly_slope(params, u[i]);
  return out;
}

NeuronState step(const NeuronState &state, const Tensor &input, const LayerNeuronConfig &cfg,
                 StepRecord *record, int layer, int timestep) {
  if (state.membrane.shape() != input.shape() || state.spikes.shape() != input.shape())
    throw DimensionError("neuron step: state " + shape_string(state.membrane.shape()) +
                         " vs input " + shape_string(input.shape()));
  NeuronState next{Tensor(input.shape()), Tensor(input.shape())};
  const double *u = state.membrane.data();
  const double *o = state.spikes.data();
  const double *in = input.data();
  double *un = next.membrane.data();
  double *on = next.spikes.data();
  bool finite = true;
  for (std::size_t i = 0; i < input.size(); ++i) {
    const double carried = (u[i] + eval_poly(cfg.params, u[i])) * (1.0 - o[i]);
    const double v = carried + in[i];
    finite = finite && std::isfinite(v);
    un[i] = v;
    on[i] = v - cfg.threshold < 0.0 ? 0.0 : 1.0;
  }
  if (!finite)
    throw NumericalError("membrane potential diverged in layer " + std::to_string(layer) +
                             " at timestep " + std::to_string(timestep),
                         layer, timestep);
  if (record) {
    record->u_prev = state.membrane;
    record->o_prev = state.spikes;
    record->u_next = next.membrane;
    record->o_next = next.spikes;
    record->input = input;
  }
  return next;
}

double surrogate_grad(double u_next, const LayerNeuronConfig &cfg) {
  const double alpha = cfg.surrogate.width;
  const double x = std::abs(u_next - cfg.threshold);
  switch (cfg.surrogate.kind) {
  case SurrogateKind::rectangle:
    return x < 0.5 * alpha ? 1.0 / alpha : 0.0;
  case SurrogateKind::triangle:
    return x < alpha ? (1.0 / alpha) * (1.0 - x / alpha) : 0.0;
  }
  return 0.0;
}

Tensor surrogate_grad(const Tensor &u_next, const LayerNeuronConfig &cfg) {
  Tensor out(u_next.shape());
  for (std::size_t i = 0; i < u_next.size(); ++i)
    out[i] = surrogate_grad(u_next[i], cfg);
  return out;
}

double relaxed_spike(double u_next, const LayerNeuronConfig &cfg) {
  const double alpha = cfg.surrogate.width;
  const double x = u_next - cfg.threshold;
  switch (cfg.surrogate.kind) {
  case SurrogateKind::rectangle:
    if (x <= -0.5 * alpha)
      return 0.0;
    if (x >= 0.5 * alpha)
      return 1.0;
    return (x + 0.5 * alpha) / alpha;
  case SurrogateKind::triangle: {
    if (x <= -alpha)
      return 0.0;
    if (x >= alpha)
      return 1.0;
    const double a2 = 2.0 * alpha * alpha;
    if (x < 0.0)
      return (x + alpha) * (x + alpha) / a2;
    return 1.0 - (alpha - x) * (alpha - x) / a2;
  }
  }
  return 0.0;
}

std::vector<double> kink_points(const LayerNeuronConfig &cfg) {
  const double th = cfg.threshold;
  const double half = cfg.surrogate.kind == SurrogateKind::rectangle ? 0.5 * cfg.surrogate.width
                                                                     : cfg.surrogate.width;
  return {th - half, th, th + half};
}

LnmParams lif_init(int degree, double decay) {
  if (degree < 1)
    throw ConfigError("LNM degree must be >= 1, got " + std::to_string(degree));
  std::vector<double> c(static_cast<std::size_t>(degree) + 1, 0.0);
  c[1] = -decay;
  return LnmParams(std::move(c));
}

} // namespace lnm
