#include "training/training.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>

#include "core/error.hpp"

namespace lnm {

void validate(const TrainConfig &cfg) {
  if (cfg.epochs < 1)
    throw ConfigError("train.epochs must be >= 1");
  if (cfg.batch_size < 1)
    throw ConfigError("train.batch_size must be >= 1");
  if (!(cfg.lr_weights >= 0.0))
    throw ConfigError("train.lr_weights must be >= 0");
  if (!(cfg.lr_lnm >= 0.0))
    throw ConfigError("train.lr_lnm must be >= 0");
  if (!(cfg.momentum >= 0.0 && cfg.momentum < 1.0))
    throw ConfigError("train.momentum must lie in [0, 1)");
  if (!(cfg.weight_decay >= 0.0))
    throw ConfigError("train.weight_decay must be >= 0");
  if (!(cfg.label_smoothing >= 0.0 && cfg.label_smoothing < 1.0))
    throw ConfigError("train.label_smoothing must lie in [0, 1)");
  if (cfg.warmup_epochs < 0 || cfg.warmup_epochs >= cfg.epochs)
    throw ConfigError("train.warmup_epochs must lie in [0, epochs)");
  if (cfg.scheduler != "cosine")
    throw ConfigError("train.scheduler must be \"cosine\"");
  if (!(cfg.grad_clip >= 0.0))
    throw ConfigError("train.grad_clip must be >= 0");
}

Shape Dataset::sample_shape() const {
  const std::size_t skip = temporal ? 2 : 1;
  if (inputs.rank() < skip + 1)
    throw DataError("dataset tensor " + shape_string(inputs.shape()) + " has no sample axes");
  return Shape(inputs.shape().begin() + static_cast<std::ptrdiff_t>(skip), inputs.shape().end());
}

Batch make_batch(const Dataset &data, std::span<const std::size_t> indices, int timesteps) {
  const Shape sample = data.sample_shape();
  const std::size_t per = shape_size(sample);
  const std::size_t B = indices.size();
  const std::size_t T = static_cast<std::size_t>(timesteps);
  if (data.temporal && data.inputs.dim(1) != T)
    throw ConfigError("dataset has " + std::to_string(data.inputs.dim(1)) +
                      " timesteps, network expects " + std::to_string(T));
  Shape s{T, B};
  s.insert(s.end(), sample.begin(), sample.end());
  Batch batch{Tensor(s), {}};
  batch.labels.reserve(B);
  const double *src = data.inputs.data();
  double *dst = batch.inputs.data();
  for (std::size_t b = 0; b < B; ++b) {
    const std::size_t n = indices[b];
    batch.labels.push_back(data.labels.at(n));
    for (std::size_t t = 0; t < T; ++t) {
      const double *from = data.temporal ? src + (n * T + t) * per : src + n * per;
      std::copy(from, from + per, dst + (t * B + b) * per);
    }
  }
  return batch;
}

namespace {

void update(std::span<double> p, std::span<const double> g, std::span<double> v, double lr,
            double momentum, double wd) {
  for (std::size_t i = 0; i < p.size(); ++i) {
    v[i] = momentum * v[i] + g[i] + wd * p[i];
    p[i] -= lr * v[i];
  }
}

bool finite(std::span<const double> x) {
  return std::all_of(x.begin(), x.end(), [](double v) { return std::isfinite(v); });
}

} // namespace

void sgd_step(Network &net, const GradientSet &grads, GradientSet &velocity, const SgdSettings &s) {
  if (grads.layers.size() != net.layers.size() || velocity.layers.size() != net.layers.size())
    throw DimensionError("sgd_step: gradient sets do not match the network");
  for (const ParamView &p : parameters(net)) {
    const auto g = gradient_of(grads, p);
    const auto v = gradient_of(velocity, p);
    if (g.size() != p.values.size() || v.size() != p.values.size())
      throw DimensionError("sgd_step: gradient for " + p.name + " has the wrong size");
    if (p.group == ParamGroup::theta) {
      update(p.values, g, v, s.lr_lnm, s.momentum, 0.0);
      net.layers[p.layer].neuron.params.enforce_zero_origin();
    } else {
      update(p.values, g, v, s.lr_weights, s.momentum, s.weight_decay);
    }
    if (!finite(p.values))
      throw NumericalError("non-finite parameter after update of " + p.name,
                           static_cast<int>(p.layer));
  }
}

double cosine_lr(int epoch, int total, double base_lr, int warmup) {
  if (epoch < warmup)
    return base_lr * static_cast<double>(epoch + 1) / static_cast<double>(warmup);
  const int span = total - warmup;
  const double progress = span > 0 ? static_cast<double>(epoch - warmup) / span : 0.0;
  return 0.5 * base_lr * (1.0 + std::cos(std::numbers::pi * progress));
}

std::size_t count_correct(const Tensor &logits, std::span<const int> labels) {
  const std::size_t B = logits.dim(0), m = logits.dim(1);
  std::size_t correct = 0;
  for (std::size_t b = 0; b < B; ++b) {
    const double *z = logits.data() + b * m;
    const auto best = static_cast<int>(std::max_element(z, z + m) - z);
    correct += best == labels[b];
  }
  return correct;
}

EvalResult evaluate(const Network &net, const Dataset &data, std::size_t batch_size,
                    double label_smoothing) {
  EvalResult r;
  if (data.size() == 0)
    return r;
  std::size_t correct = 0;
  double loss = 0.0;
  std::vector<std::size_t> idx;
  for (std::size_t start = 0; start < data.size(); start += batch_size) {
    idx.clear();
    for (std::size_t i = start; i < std::min(data.size(), start + batch_size); ++i)
      idx.push_back(i);
    const Batch batch = make_batch(data, idx, net.spec.timesteps);
    const ForwardResult fr = forward(net, batch.inputs, {SpikeMode::hard, false});
    correct += count_correct(fr.logits, batch.labels);
    loss += cross_entropy_smoothed(fr.logits, batch.labels, label_smoothing).loss *
            static_cast<double>(idx.size());
    r.stats.merge(fr.stats);
  }
  r.top1 = static_cast<double>(correct) / static_cast<double>(data.size());
  r.loss = loss / static_cast<double>(data.size());
  return r;
}

TrainResult train(Network net, const Dataset &train_data, const Dataset *val_data,
                  const TrainConfig &cfg, Rng &rng, const StepObserver &observer) {
  validate(cfg);
  if (train_data.size() == 0)
    throw DataError("training set is empty");
  for (int y : train_data.labels)
    if (y < 0 || static_cast<std::size_t>(y) >= net.spec.num_classes)
      throw DataError("training label " + std::to_string(y) + " outside [0, " +
                      std::to_string(net.spec.num_classes) + ")");

  GradientSet velocity = GradientSet::zeros_like(net);
  TrainResult result{net, net, {}};
  std::size_t global_step = 0;
  const std::size_t N = train_data.size();

  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    EpochMetrics em;
    em.epoch = epoch;
    em.lr_weights = cosine_lr(epoch, cfg.epochs, cfg.lr_weights, cfg.warmup_epochs);
    em.lr_lnm = cosine_lr(epoch, cfg.epochs, cfg.lr_lnm, cfg.warmup_epochs);
    const SgdSettings sgd{em.lr_weights, em.lr_lnm, cfg.momentum, cfg.weight_decay};

    const auto order = rng.permutation(N);
    double loss_sum = 0.0;
    std::size_t correct = 0;
    SpikeStats stats;
    try {
      for (std::size_t start = 0; start < N; start += cfg.batch_size) {
        const std::size_t stop = std::min(N, start + cfg.batch_size);
        const std::span<const std::size_t> idx(order.data() + start, stop - start);
        const Batch batch = make_batch(train_data, idx, net.spec.timesteps);
        const ForwardResult fr = forward(net, batch.inputs);
        const LossResult loss = cross_entropy_smoothed(fr.logits, batch.labels, cfg.label_smoothing);
        GradientSet grads = backward(net, fr.tape, loss.grad);
        if (cfg.grad_clip > 0.0) {
          const double norm = std::sqrt(grads.squared_norm());
          if (norm > cfg.grad_clip)
            grads.scale(cfg.grad_clip / norm);
        }
        sgd_step(net, grads, velocity, sgd);
        ++global_step;
        if (observer)
          observer(net, global_step);
        loss_sum += loss.loss * static_cast<double>(idx.size());
        correct += count_correct(fr.logits, batch.labels);
        stats.merge(fr.stats);
      }
    } catch (const NumericalError &e) {
      throw NumericalError("epoch " + std::to_string(epoch) + ": " + e.what(), e.layer(),
                           e.timestep());
    }
    em.train_loss = loss_sum / static_cast<double>(N);
    em.train_acc = static_cast<double>(correct) / static_cast<double>(N);
    for (std::size_t l = 0; l < net.layers.size(); ++l) {
      if (net.layers[l].spec.kind != LayerKind::spiking)
        continue;
      em.firing_rates.push_back(stats.rate(l));
      const auto c = net.layers[l].neuron.params.coeffs();
      em.theta.emplace_back(c.begin(), c.end());
    }
    const bool has_val = val_data && val_data->size() > 0;
    if (has_val)
      em.val_acc = evaluate(net, *val_data, cfg.batch_size).top1;
    if (!has_val || result.metrics.best_epoch < 0 || em.val_acc > result.metrics.best_val_acc) {
      result.metrics.best_epoch = epoch;
      result.metrics.best_val_acc = em.val_acc;
      result.network = net;
    }
    result.metrics.epochs.push_back(std::move(em));
  }
  result.last = std::move(net);
  return result;
}

} // namespace lnm
