#include "analysis/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "core/error.hpp"

namespace lnm {

double layer_energy(const LayerOpCount &c, int timesteps, const EnergyModel &model) {
  return static_cast<double>(timesteps) *
         (c.fr * model.e_ac * c.op_ac + model.e_mac * c.op_mac);
}

double synaptic_ops(std::size_t fan_in, std::size_t outputs) {
  return static_cast<double>(fan_in) * static_cast<double>(outputs);
}

double lnm_update_macs(std::size_t neurons, int degree) {
  return static_cast<double>(neurons) * static_cast<double>(degree);
}

double lif_update_macs(std::size_t neurons, const EnergyModel &model) {
  return model.lif_decay_is_mac ? static_cast<double>(neurons) : 0.0;
}

std::vector<LayerEnergyRow> count_ops(const Network &net, const SpikeStats &stats,
                                      const EnergyModel &model) {
  std::vector<LayerEnergyRow> rows;
  bool seen_spikes = false;
  double upstream_rate = 1.0;
  for (std::size_t l = 0; l < net.layers.size(); ++l) {
    const Layer &layer = net.layers[l];
    LayerEnergyRow row;
    row.layer = l;
    row.kind = to_string(layer.spec.kind);
    auto synapses = [&](double connections) {
      if (seen_spikes) {
        row.op_ac = connections;
        row.fr = upstream_rate;
      } else {
        // real-valued input: floating-point MACs on every connection
        row.op_mac_lif = row.op_mac_lnm = connections;
        row.fr = 1.0;
        row.is_first_layer = true;
      }
    };
    switch (layer.spec.kind) {
    case LayerKind::dense:
    case LayerKind::decoder:
      synapses(synaptic_ops(layer.in_shape[0], layer.out_shape[0]));
      break;
    case LayerKind::conv2d: {
      const std::size_t fan_in = layer.in_shape[0] * layer.spec.kernel * layer.spec.kernel;
      synapses(synaptic_ops(fan_in, shape_size(layer.out_shape)));
      break;
    }
    case LayerKind::avgpool:
      if (seen_spikes) {
        row.op_ac = static_cast<double>(shape_size(layer.in_shape));
        row.fr = upstream_rate;
      }
      break;
    case LayerKind::flatten:
      break;
    case LayerKind::spiking: {
      const std::size_t neurons = shape_size(layer.in_shape);
      row.op_mac_lif = lif_update_macs(neurons, model);
      row.op_mac_lnm = lnm_update_macs(neurons, layer.neuron.params.degree());
      row.fr = stats.rate(l);
      seen_spikes = true;
      upstream_rate = row.fr;
      break;
    }
    }
    rows.push_back(std::move(row));
  }
  return rows;
}

EnergyReport energy_report(const Network &net, const SpikeStats &stats,
                           const EnergyModel &model) {
  EnergyReport report;
  report.layers = count_ops(net, stats, model);
  const int T = net.spec.timesteps;
  for (auto &row : report.layers) {
    row.e_lif = layer_energy({row.op_ac, row.op_mac_lif, row.fr, row.is_first_layer}, T, model);
    row.e_lnm = layer_energy({row.op_ac, row.op_mac_lnm, row.fr, row.is_first_layer}, T, model);
    report.total_lif += row.e_lif;
    report.total_lnm += row.e_lnm;
  }
  report.overhead =
      report.total_lif > 0.0 ? (report.total_lnm - report.total_lif) / report.total_lif : 0.0;
  return report;
}

std::vector<ModelDumpRow> dump_models(const Network &net, int samples) {
  if (samples < 2)
    throw ConfigError("dump_models: samples must be >= 2");
  std::vector<ModelDumpRow> rows;
  for (std::size_t l = 0; l < net.layers.size(); ++l) {
    const Layer &layer = net.layers[l];
    if (layer.spec.kind != LayerKind::spiking)
      continue;
    for (int i = 0; i < samples; ++i) {
      const double u = kClipLo + (kClipHi - kClipLo) * static_cast<double>(i) / (samples - 1);
      rows.push_back({l, u, eval_poly(layer.neuron.params, u)});
    }
  }
  return rows;
}

Reduction reduce_degree(const LnmParams &params, int target_degree, int samples) {
  if (target_degree < 1 || target_degree > params.degree())
    throw ConfigError("reduce_degree: target degree " + std::to_string(target_degree) +
                      " outside [1, " + std::to_string(params.degree()) + "]");
  if (samples < 2)
    throw ConfigError("reduce_degree: samples must be >= 2");
  const std::size_t d = static_cast<std::size_t>(target_degree);
  const std::size_t S = static_cast<std::size_t>(samples);

  std::vector<double> grid(S), target(S);
  for (std::size_t j = 0; j < S; ++j) {
    grid[j] = -1.0 + 2.0 * static_cast<double>(j) / static_cast<double>(S - 1);
    target[j] = horner(params.coeffs(), grid[j]);
  }

  // Normal equations over the basis u^1..u^d; the constant term is excluded
  // so the fit keeps f(0) = 0.
  std::vector<double> G(d * d, 0.0), phi(S * d);
  for (std::size_t j = 0; j < S; ++j) {
    double p = grid[j];
    for (std::size_t a = 0; a < d; ++a) {
      phi[j * d + a] = p;
      p *= grid[j];
    }
    for (std::size_t a = 0; a < d; ++a)
      for (std::size_t b = 0; b < d; ++b)
        G[a * d + b] += phi[j * d + a] * phi[j * d + b];
  }

  // Cholesky G = R^T R, upper R stored in place.
  double max_diag = 0.0;
  for (std::size_t a = 0; a < d; ++a)
    max_diag = std::max(max_diag, G[a * d + a]);
  for (std::size_t a = 0; a < d; ++a) {
    double diag = G[a * d + a];
    for (std::size_t k = 0; k < a; ++k)
      diag -= G[k * d + a] * G[k * d + a];
    if (!(diag > 1e-13 * max_diag))
      throw NumericalError("reduce_degree: normal equations are ill-conditioned for degree " +
                           std::to_string(target_degree) + " on " + std::to_string(samples) +
                           " samples");
    const double r = std::sqrt(diag);
    G[a * d + a] = r;
    for (std::size_t b = a + 1; b < d; ++b) {
      double v = G[a * d + b];
      for (std::size_t k = 0; k < a; ++k)
        v -= G[k * d + a] * G[k * d + b];
      G[a * d + b] = v / r;
    }
  }

  // Least-squares coefficients (u^1..u^d) for values y on the grid.
  auto solve = [&](const std::vector<double> &y) {
    std::vector<double> rhs(d, 0.0), z(d), x(d);
    for (std::size_t j = 0; j < S; ++j)
      for (std::size_t a = 0; a < d; ++a)
        rhs[a] += phi[j * d + a] * y[j];
    for (std::size_t a = 0; a < d; ++a) {
      double v = rhs[a];
      for (std::size_t k = 0; k < a; ++k)
        v -= G[k * d + a] * z[k];
      z[a] = v / G[a * d + a];
    }
    for (std::size_t a = d; a-- > 0;) {
      double v = z[a];
      for (std::size_t k = a + 1; k < d; ++k)
        v -= G[a * d + k] * x[k];
      x[a] = v / G[a * d + a];
    }
    return x;
  };

  // Squaring the Vandermonde matrix costs accuracy at higher degrees; one
  // refinement pass on the residual wins most of it back.
  std::vector<double> x = solve(target);
  std::vector<double> coeffs(d + 1, 0.0);
  std::copy(x.begin(), x.end(), coeffs.begin() + 1);
  std::vector<double> resid(S);
  for (std::size_t j = 0; j < S; ++j)
    resid[j] = target[j] - horner(std::span<const double>(coeffs), grid[j]);
  const std::vector<double> dx = solve(resid);
  for (std::size_t a = 0; a < d; ++a)
    coeffs[a + 1] = x[a] + dx[a];

  Reduction out{LnmParams(std::move(coeffs)), 0.0, 0.0};
  double ss = 0.0;
  for (std::size_t j = 0; j < S; ++j) {
    const double r = horner(out.params.coeffs(), grid[j]) - target[j];
    out.max_error = std::max(out.max_error, std::abs(r));
    ss += r * r;
  }
  out.rms_error = std::sqrt(ss / static_cast<double>(S));
  return out;
}

} // namespace lnm
