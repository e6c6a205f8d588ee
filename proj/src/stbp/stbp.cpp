#include "stbp/stbp.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "core/error.hpp"
#include "training/loss.hpp"

namespace lnm {

GradientSet GradientSet::zeros_like(const Network &net) {
  GradientSet g;
  g.layers.resize(net.layers.size());
  for (std::size_t l = 0; l < net.layers.size(); ++l) {
    const Layer &layer = net.layers[l];
    if (!layer.weight.empty())
      g.layers[l].weight = Tensor(layer.weight.shape());
    if (!layer.bias.empty())
      g.layers[l].bias = Tensor(layer.bias.shape());
    if (layer.spec.kind == LayerKind::spiking)
      g.layers[l].theta = Tensor({layer.neuron.params.coeffs().size()});
  }
  return g;
}

void GradientSet::axpy(double s, const GradientSet &other) {
  if (other.layers.size() != layers.size())
    throw InternalError("gradient sets of different networks");
  for (std::size_t l = 0; l < layers.size(); ++l) {
    lnm::axpy(s, other.layers[l].weight, layers[l].weight);
    lnm::axpy(s, other.layers[l].bias, layers[l].bias);
    lnm::axpy(s, other.layers[l].theta, layers[l].theta);
  }
}

double GradientSet::squared_norm() const {
  double acc = 0.0;
  for (const auto &l : layers)
    for (const Tensor *t : {&l.weight, &l.bias, &l.theta})
      for (double v : t->values())
        acc += v * v;
  return acc;
}

void GradientSet::scale(double s) {
  for (auto &l : layers)
    for (Tensor *t : {&l.weight, &l.bias, &l.theta})
      for (double &v : t->values())
        v *= s;
}

const char *to_string(ParamGroup g) {
  switch (g) {
  case ParamGroup::weight:
    return "weight";
  case ParamGroup::bias:
    return "bias";
  case ParamGroup::theta:
    return "theta";
  }
  return "?";
}

std::vector<ParamView> parameters(Network &net) {
  std::vector<ParamView> out;
  for (std::size_t l = 0; l < net.layers.size(); ++l) {
    Layer &layer = net.layers[l];
    const std::string prefix = "layer" + std::to_string(l) + ".";
    if (!layer.weight.empty())
      out.push_back({prefix + "weight", l, ParamGroup::weight, layer.weight.values()});
    if (!layer.bias.empty())
      out.push_back({prefix + "bias", l, ParamGroup::bias, layer.bias.values()});
    if (layer.spec.kind == LayerKind::spiking)
      out.push_back({prefix + "theta", l, ParamGroup::theta, layer.neuron.params.mutable_coeffs()});
  }
  return out;
}

namespace {

template <class G> auto &grad_tensor(G &grads, const ParamView &p) {
  auto &lg = grads.layers.at(p.layer);
  switch (p.group) {
  case ParamGroup::weight:
    return lg.weight;
  case ParamGroup::bias:
    return lg.bias;
  case ParamGroup::theta:
    break;
  }
  return lg.theta;
}

} // namespace

std::span<double> gradient_of(GradientSet &grads, const ParamView &p) {
  return grad_tensor(grads, p).values();
}
std::span<const double> gradient_of(const GradientSet &grads, const ParamView &p) {
  return grad_tensor(grads, p).values();
}

namespace {

void check_tape(const Network &net, const Tape &tape, const Tensor &loss_grad) {
  const std::size_t T = static_cast<std::size_t>(net.spec.timesteps);
  if (tape.timesteps != net.spec.timesteps || tape.layers.size() != net.layers.size())
    throw InternalError("tape does not match the network (" + std::to_string(tape.layers.size()) +
                        " layers, " + std::to_string(tape.timesteps) + " steps)");
  for (std::size_t l = 0; l < net.layers.size(); ++l) {
    const Layer &layer = net.layers[l];
    const LayerTape &lt = tape.layers[l];
    if (layer.has_weight() && lt.inputs.size() != T)
      throw InternalError("tape for layer " + std::to_string(l) + " holds " +
                          std::to_string(lt.inputs.size()) + " of " + std::to_string(T) +
                          " inputs");
    if (layer.spec.kind == LayerKind::spiking && lt.steps.size() != T)
      throw InternalError("tape for layer " + std::to_string(l) + " holds " +
                          std::to_string(lt.steps.size()) + " of " + std::to_string(T) +
                          " neuron steps");
  }
  if (loss_grad.shape() != Shape{tape.batch, net.spec.num_classes})
    throw DimensionError("loss gradient " + shape_string(loss_grad.shape()) +
                         " does not match decoder output [" + std::to_string(tape.batch) + "x" +
                         std::to_string(net.spec.num_classes) + "]");
}

Tensor avgpool_backward(const Tensor &g, const Shape &in_shape, std::size_t k) {
  Tensor out(in_shape);
  const std::size_t BC = in_shape[0] * in_shape[1], H = in_shape[2], W = in_shape[3];
  const std::size_t Ho = H / k, Wo = W / k;
  const double inv = 1.0 / static_cast<double>(k * k);
  for (std::size_t bc = 0; bc < BC; ++bc) {
    const double *src = g.data() + bc * Ho * Wo;
    double *dst = out.data() + bc * H * W;
    for (std::size_t i = 0; i < H; ++i)
      for (std::size_t j = 0; j < W; ++j)
        dst[i * W + j] = src[(i / k) * Wo + j / k] * inv;
  }
  return out;
}

Shape with_batch(std::size_t b, const Shape &s) {
  Shape out{b};
  out.insert(out.end(), s.begin(), s.end());
  return out;
}

} // namespace

GradientSet backward(const Network &net, const Tape &tape, const Tensor &loss_grad) {
  check_tape(net, tape, loss_grad);
  const std::size_t T = static_cast<std::size_t>(net.spec.timesteps);
  const std::size_t L = net.layers.size();
  const std::size_t B = tape.batch;
  GradientSet grads = GradientSet::zeros_like(net);

  // d loss / d u(t+1) flowing back through the membrane carry, per layer.
  std::vector<Tensor> carry(L);
  for (std::size_t l = 0; l < L; ++l)
    if (net.layers[l].spec.kind == LayerKind::spiking)
      carry[l] = Tensor(with_batch(B, net.layers[l].in_shape));

  const Tensor per_step = scale(loss_grad, 1.0 / static_cast<double>(T));
  for (std::size_t t = T; t-- > 0;) {
    Tensor g = per_step;
    for (std::size_t l = L; l-- > 0;) {
      const Layer &layer = net.layers[l];
      LayerGrad &lg = grads.layers[l];
      const bool need_input_grad = l > 0;
      switch (layer.spec.kind) {
      case LayerKind::decoder: {
        const Tensor &x = tape.layers[l].inputs[t];
        matmul_at_accumulate(g, x, lg.weight);
        if (need_input_grad)
          g = matmul(g, layer.weight);
        break;
      }
      case LayerKind::dense: {
        const Tensor &x = tape.layers[l].inputs[t];
        matmul_at_accumulate(g, x, lg.weight);
        if (!lg.bias.empty()) {
          const std::size_t n = lg.bias.size();
          for (std::size_t i = 0; i < g.size(); ++i)
            lg.bias[i % n] += g[i];
        }
        if (need_input_grad)
          g = matmul(g, layer.weight);
        break;
      }
      case LayerKind::conv2d: {
        const Tensor &x = tape.layers[l].inputs[t];
        conv2d_backward_kernel(g, x, lg.weight, layer.spec.stride, layer.spec.padding);
        if (!lg.bias.empty()) {
          const std::size_t F = g.dim(1), plane = g.dim(2) * g.dim(3);
          for (std::size_t b = 0; b < g.dim(0); ++b)
            for (std::size_t f = 0; f < F; ++f) {
              const double *p = g.data() + (b * F + f) * plane;
              double acc = 0.0;
              for (std::size_t i = 0; i < plane; ++i)
                acc += p[i];
              lg.bias[f] += acc;
            }
        }
        if (need_input_grad)
          g = conv2d_backward_input(g, layer.weight, x.shape(), layer.spec.stride,
                                    layer.spec.padding);
        break;
      }
      case LayerKind::avgpool:
        g = avgpool_backward(g, with_batch(B, layer.in_shape), layer.spec.pool);
        break;
      case LayerKind::flatten:
        g.reshape(with_batch(B, layer.in_shape));
        break;
      case LayerKind::spiking: {
        const StepRecord &rec = tape.layers[l].steps[t];
        const LnmParams &params = layer.neuron.params;
        const std::size_t N = static_cast<std::size_t>(params.degree());
        Tensor &c = carry[l];
        Tensor du(g.shape());
        bool finite = true;
        for (std::size_t i = 0; i < du.size(); ++i) {
          // spatial path through the surrogate plus the temporal carry
          const double d = g[i] * surrogate_grad(rec.u_next[i], layer.neuron) + c[i];
          finite = finite && std::isfinite(d);
          du[i] = d;
          const double keep = 1.0 - rec.o_prev[i];
          const double r = d * keep;
          if (r != 0.0) {
            const double x = std::clamp(rec.u_prev[i], kClipLo, kClipHi);
            double pw = x;
            for (std::size_t k = 1; k <= N; ++k) {
              lg.theta[k] += r * pw;
              pw *= x;
            }
          }
          c[i] = d * (1.0 + eval_poly_slope(params, rec.u_prev[i])) * keep;
        }
        if (!finite)
          throw NumericalError("non-finite gradient in layer " + std::to_string(l) +
                                   " at timestep " + std::to_string(t),
                               static_cast<int>(l), static_cast<int>(t));
        g = std::move(du);
        break;
      }
      }
    }
  }
  for (auto &lg : grads.layers)
    if (!lg.theta.empty())
      lg.theta[0] = 0.0;
  for (std::size_t l = 0; l < L; ++l) {
    const LayerGrad &lg = grads.layers[l];
    if (!lg.weight.all_finite() || !lg.bias.all_finite() || !lg.theta.all_finite())
      throw NumericalError("non-finite parameter gradient in layer " + std::to_string(l),
                           static_cast<int>(l));
  }
  return grads;
}

bool replay_matches(const Network &net, const Tape &tape) {
  if (tape.layers.size() != net.layers.size())
    return false;
  for (std::size_t l = 0; l < net.layers.size(); ++l) {
    const Layer &layer = net.layers[l];
    if (layer.spec.kind != LayerKind::spiking)
      continue;
    const auto &steps = tape.layers[l].steps;
    if (steps.size() != static_cast<std::size_t>(tape.timesteps))
      return false;
    NeuronState state = NeuronState::resting(steps.front().u_prev.shape());
    for (const auto &rec : steps) {
      if (!(state.membrane == rec.u_prev) || !(state.spikes == rec.o_prev))
        return false;
      state = step(state, rec.input, layer.neuron);
      if (!(state.membrane == rec.u_next) || !(state.spikes == rec.o_next))
        return false;
    }
  }
  return true;
}

GradientSet relaxed_gradients(const Network &net, const Batch &batch, double label_smoothing) {
  const ForwardResult fr = forward(net, batch.inputs, {SpikeMode::relaxed, true});
  const LossResult loss = cross_entropy_smoothed(fr.logits, batch.labels, label_smoothing);
  return backward(net, fr.tape, loss.grad);
}

double relaxed_loss(const Network &net, const Batch &batch, double label_smoothing) {
  const ForwardResult fr = forward(net, batch.inputs, {SpikeMode::relaxed, false});
  return cross_entropy_smoothed(fr.logits, batch.labels, label_smoothing).loss;
}

namespace {

int region(double v, std::span<const double> kinks) {
  int r = 0;
  for (double k : kinks)
    r += v >= k;
  return r;
}

// Which smooth piece of the relaxed model every recorded membrane value
// falls in. Equal signatures mean the loss is smooth between the two points.
std::vector<std::uint8_t> regime_signature(const Network &net, const Tape &tape) {
  std::vector<std::uint8_t> sig;
  const double clip_kinks[] = {kClipLo, kClipHi};
  for (std::size_t l = 0; l < net.layers.size(); ++l) {
    const Layer &layer = net.layers[l];
    if (layer.spec.kind != LayerKind::spiking)
      continue;
    const auto kinks = kink_points(layer.neuron);
    for (const auto &rec : tape.layers[l].steps) {
      for (double v : rec.u_next.values())
        sig.push_back(static_cast<std::uint8_t>(region(v, kinks)));
      for (double v : rec.u_prev.values())
        sig.push_back(static_cast<std::uint8_t>(region(v, clip_kinks)));
    }
  }
  return sig;
}

struct Probe {
  double loss;
  std::vector<std::uint8_t> signature;
};

Probe probe(const Network &net, const Batch &batch, double smoothing) {
  const ForwardResult fr = forward(net, batch.inputs, {SpikeMode::relaxed, true});
  return {cross_entropy_smoothed(fr.logits, batch.labels, smoothing).loss,
          regime_signature(net, fr.tape)};
}

} // namespace

CheckReport compare_with_finite_differences(const Network &net, const Batch &batch,
                                            const GradientSet &analytic,
                                            const CheckOptions &options) {
  Network work = net;
  const auto base = probe(work, batch, options.label_smoothing);
  Rng pick(options.seed);
  CheckReport report;
  for (const ParamView &p : parameters(work)) {
    GroupReport g;
    g.name = p.name;
    const auto grad = gradient_of(analytic, p);
    std::vector<std::size_t> entries;
    if (options.max_entries_per_tensor == 0 || p.values.size() <= options.max_entries_per_tensor) {
      for (std::size_t i = 0; i < p.values.size(); ++i)
        entries.push_back(i);
    } else {
      auto perm = pick.permutation(p.values.size());
      perm.resize(options.max_entries_per_tensor);
      std::sort(perm.begin(), perm.end());
      entries = std::move(perm);
    }
    for (std::size_t i : entries) {
      if (p.group == ParamGroup::theta && i == 0)
        continue;  // f(0) = 0 is a constraint, not a free parameter
      const double saved = p.values[i];
      p.values[i] = saved + options.h;
      const auto plus = probe(work, batch, options.label_smoothing);
      p.values[i] = saved - options.h;
      const auto minus = probe(work, batch, options.label_smoothing);
      p.values[i] = saved;
      if (plus.signature != base.signature || minus.signature != base.signature) {
        ++g.excluded;
        continue;
      }
      const double numeric = (plus.loss - minus.loss) / (2.0 * options.h);
      const double a = grad[i];
      const double denom = std::max({std::abs(a), std::abs(numeric), options.abs_floor});
      const double rel = std::abs(a - numeric) / denom;
      ++g.checked;
      if (rel > g.max_rel_error) {
        g.max_rel_error = rel;
        g.worst_index = i;
      }
      if (!(rel <= options.tol)) {
        g.flagged.push_back(i);
        g.passed = false;
      }
    }
    report.max_rel_error = std::max(report.max_rel_error, g.max_rel_error);
    report.checked += g.checked;
    report.excluded += g.excluded;
    report.passed = report.passed && g.passed;
    report.groups.push_back(std::move(g));
  }
  return report;
}

CheckReport grad_check(const Network &net, const Batch &batch, const CheckOptions &options) {
  if (!(options.h >= 1e-7 && options.h <= 1e-3))
    throw ConfigError("grad_check: step h must lie in [1e-7, 1e-3]");
  const GradientSet analytic = relaxed_gradients(net, batch, options.label_smoothing);
  return compare_with_finite_differences(net, batch, analytic, options);
}

} // namespace lnm
