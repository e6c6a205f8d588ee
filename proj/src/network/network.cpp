#include "network/network.hpp"

#include <cmath>
#include <string>

#include "core/error.hpp"

namespace lnm {

const char *to_string(LayerKind kind) {
  switch (kind) {
  case LayerKind::dense:
    return "dense";
  case LayerKind::conv2d:
    return "conv2d";
  case LayerKind::spiking:
    return "spiking";
  case LayerKind::avgpool:
    return "avgpool";
  case LayerKind::flatten:
    return "flatten";
  case LayerKind::decoder:
    return "decoder";
  }
  return "?";
}

LayerKind parse_layer_kind(const std::string &name) {
  for (auto k : {LayerKind::dense, LayerKind::conv2d, LayerKind::spiking, LayerKind::avgpool,
                 LayerKind::flatten, LayerKind::decoder})
    if (name == to_string(k))
      return k;
  throw ConfigError("unknown layer kind '" + name + "'");
}

std::vector<Shape> infer_shapes(const NetworkSpec &spec) {
  if (spec.layers.empty())
    throw ConfigError("network has no layers");
  if (spec.timesteps < 1)
    throw ConfigError("timesteps must be >= 1");
  if (spec.num_classes < 1)
    throw ConfigError("num_classes must be >= 1");
  if (spec.input_shape.empty() || shape_size(spec.input_shape) == 0)
    throw ConfigError("input_shape must be non-empty");

  std::vector<Shape> shapes{spec.input_shape};
  Shape cur = spec.input_shape;
  for (std::size_t i = 0; i < spec.layers.size(); ++i) {
    const LayerSpec &l = spec.layers[i];
    const std::string where = "layer " + std::to_string(i) + " (" + to_string(l.kind) + ")";
    switch (l.kind) {
    case LayerKind::dense:
      if (cur.size() != 1)
        throw ConfigError(where + " needs a flat input, got " + shape_string(cur));
      if (l.units == 0)
        throw ConfigError(where + ": units must be > 0");
      cur = {l.units};
      break;
    case LayerKind::conv2d: {
      if (cur.size() != 3)
        throw ConfigError(where + " needs a [C,H,W] input, got " + shape_string(cur));
      if (l.filters == 0)
        throw ConfigError(where + ": filters must be > 0");
      try {
        cur = {l.filters, conv_output_extent(cur[1], l.kernel, l.stride, l.padding),
               conv_output_extent(cur[2], l.kernel, l.stride, l.padding)};
      } catch (const ConfigError &e) {
        throw ConfigError(where + ": " + e.what());
      }
      break;
    }
    case LayerKind::spiking:
      if (!(l.threshold > 0.0))
        throw ConfigError(where + ": threshold must be > 0");
      if (!(l.surrogate.width > 0.0))
        throw ConfigError(where + ": surrogate width must be > 0");
      if (l.degree < 1)
        throw ConfigError(where + ": degree must be >= 1");
      break;
    case LayerKind::avgpool:
      if (cur.size() != 3)
        throw ConfigError(where + " needs a [C,H,W] input, got " + shape_string(cur));
      if (l.pool == 0 || cur[1] % l.pool != 0 || cur[2] % l.pool != 0)
        throw ConfigError(where + ": pool " + std::to_string(l.pool) + " does not divide " +
                          shape_string(cur));
      cur = {cur[0], cur[1] / l.pool, cur[2] / l.pool};
      break;
    case LayerKind::flatten:
      cur = {shape_size(cur)};
      break;
    case LayerKind::decoder:
      if (i + 1 != spec.layers.size())
        throw ConfigError("decoder must be the last layer");
      if (cur.size() != 1)
        throw ConfigError(where + " needs a flat input, got " + shape_string(cur));
      cur = {spec.num_classes};
      break;
    }
    shapes.push_back(cur);
  }
  if (spec.layers.back().kind != LayerKind::decoder)
    throw ConfigError("the last layer must be a decoder");
  return shapes;
}

std::size_t Network::spiking_layer_count() const {
  std::size_t n = 0;
  for (const auto &l : layers)
    n += l.spec.kind == LayerKind::spiking;
  return n;
}

bool operator==(const Network &a, const Network &b) {
  if (!(a.spec == b.spec) || a.layers.size() != b.layers.size())
    return false;
  for (std::size_t i = 0; i < a.layers.size(); ++i) {
    const Layer &x = a.layers[i];
    const Layer &y = b.layers[i];
    if (!(x.weight == y.weight) || !(x.bias == y.bias) || !(x.neuron.params == y.neuron.params))
      return false;
  }
  return true;
}

namespace {

void init_kaiming(Tensor &w, std::size_t fan_in, Rng &rng) {
  const double stddev = std::sqrt(2.0 / static_cast<double>(fan_in));
  for (auto &v : w.values())
    v = stddev * rng.normal();
}

} // namespace

Network build(const NetworkSpec &spec, Rng &rng) {
  const auto shapes = infer_shapes(spec);
  Network net{spec, {}};
  net.layers.reserve(spec.layers.size());
  for (std::size_t i = 0; i < spec.layers.size(); ++i) {
    Layer layer;
    layer.spec = spec.layers[i];
    layer.in_shape = shapes[i];
    layer.out_shape = shapes[i + 1];
    switch (layer.spec.kind) {
    case LayerKind::dense:
    case LayerKind::decoder: {
      const std::size_t in = layer.in_shape[0], out = layer.out_shape[0];
      layer.weight = Tensor({out, in});
      init_kaiming(layer.weight, in, rng);
      if (layer.spec.kind == LayerKind::dense && layer.spec.bias)
        layer.bias = Tensor({out});
      break;
    }
    case LayerKind::conv2d: {
      const std::size_t c = layer.in_shape[0], k = layer.spec.kernel;
      layer.weight = Tensor({layer.spec.filters, c, k, k});
      init_kaiming(layer.weight, c * k * k, rng);
      if (layer.spec.bias)
        layer.bias = Tensor({layer.spec.filters});
      break;
    }
    case LayerKind::spiking:
      layer.neuron.threshold = layer.spec.threshold;
      layer.neuron.surrogate = layer.spec.surrogate;
      layer.neuron.params = lif_init(layer.spec.degree, layer.spec.lif_decay);
      break;
    case LayerKind::avgpool:
    case LayerKind::flatten:
      break;
    }
    net.layers.push_back(std::move(layer));
  }
  return net;
}

double SpikeStats::rate(std::size_t l) const {
  if (l >= neuron_steps.size() || neuron_steps[l] == 0.0)
    return 0.0;
  return spikes[l] / neuron_steps[l];
}

void SpikeStats::merge(const SpikeStats &other) {
  if (spikes.empty()) {
    *this = other;
    return;
  }
  if (other.spikes.size() != spikes.size())
    throw InternalError("merging spike stats of different networks");
  for (std::size_t i = 0; i < spikes.size(); ++i) {
    spikes[i] += other.spikes[i];
    neuron_steps[i] += other.neuron_steps[i];
  }
}

namespace {

Shape batch_shape(std::size_t batch, const Shape &sample) {
  Shape s{batch};
  s.insert(s.end(), sample.begin(), sample.end());
  return s;
}

Tensor transpose(const Tensor &w) {
  const std::size_t r = w.dim(0), c = w.dim(1);
  Tensor t({c, r});
  for (std::size_t i = 0; i < r; ++i)
    for (std::size_t j = 0; j < c; ++j)
      t[j * r + i] = w[i * c + j];
  return t;
}

void add_bias_rows(Tensor &x, const Tensor &bias) {
  const std::size_t n = bias.size();
  for (std::size_t i = 0; i < x.size(); ++i)
    x[i] += bias[i % n];
}

void add_bias_planes(Tensor &x, const Tensor &bias) {
  const std::size_t B = x.dim(0), F = x.dim(1), plane = x.dim(2) * x.dim(3);
  for (std::size_t b = 0; b < B; ++b)
    for (std::size_t f = 0; f < F; ++f) {
      double *p = x.data() + (b * F + f) * plane;
      for (std::size_t i = 0; i < plane; ++i)
        p[i] += bias[f];
    }
}

Tensor avgpool(const Tensor &x, std::size_t k) {
  const std::size_t B = x.dim(0), C = x.dim(1), H = x.dim(2), W = x.dim(3);
  const std::size_t Ho = H / k, Wo = W / k;
  Tensor out({B, C, Ho, Wo});
  const double inv = 1.0 / static_cast<double>(k * k);
  for (std::size_t bc = 0; bc < B * C; ++bc) {
    const double *src = x.data() + bc * H * W;
    double *dst = out.data() + bc * Ho * Wo;
    for (std::size_t i = 0; i < Ho; ++i)
      for (std::size_t j = 0; j < Wo; ++j) {
        double acc = 0.0;
        for (std::size_t a = 0; a < k; ++a)
          for (std::size_t b = 0; b < k; ++b)
            acc += src[(i * k + a) * W + j * k + b];
        dst[i * Wo + j] = acc * inv;
      }
  }
  return out;
}

} // namespace

ForwardResult forward(const Network &net, const Tensor &input_sequence,
                      const ForwardOptions &options) {
  const auto &spec = net.spec;
  const std::size_t T = static_cast<std::size_t>(spec.timesteps);
  if (input_sequence.rank() != spec.input_shape.size() + 2 || input_sequence.dim(0) != T)
    throw ConfigError("forward: input " + shape_string(input_sequence.shape()) +
                      " is not [T=" + std::to_string(T) + ", B, " +
                      shape_string(spec.input_shape) + "]");
  const std::size_t B = input_sequence.dim(1);
  const Shape step_shape = batch_shape(B, spec.input_shape);
  if (Shape(input_sequence.shape().begin() + 1, input_sequence.shape().end()) != step_shape)
    throw ConfigError("forward: input " + shape_string(input_sequence.shape()) +
                      " does not match network input " + shape_string(spec.input_shape));

  const std::size_t L = net.layers.size();
  ForwardResult result;
  result.stats.spikes.assign(L, 0.0);
  result.stats.neuron_steps.assign(L, 0.0);
  result.tape.timesteps = spec.timesteps;
  result.tape.batch = B;
  result.tape.mode = options.mode;
  if (options.record_tape)
    result.tape.layers.resize(L);

  std::vector<NeuronState> states(L);
  std::vector<Tensor> transposed(L);
  for (std::size_t l = 0; l < L; ++l) {
    const Layer &layer = net.layers[l];
    if (layer.spec.kind == LayerKind::spiking)
      states[l] = NeuronState::resting(batch_shape(B, layer.in_shape));
    if (layer.spec.kind == LayerKind::dense || layer.spec.kind == LayerKind::decoder)
      transposed[l] = transpose(layer.weight);
  }

  const std::size_t step_elems = shape_size(step_shape);
  Tensor decoded({B, spec.num_classes});
  for (std::size_t t = 0; t < T; ++t) {
    Tensor x(step_shape, std::vector<double>(input_sequence.data() + t * step_elems,
                                             input_sequence.data() + (t + 1) * step_elems));
    for (std::size_t l = 0; l < L; ++l) {
      const Layer &layer = net.layers[l];
      if (options.record_tape && layer.has_weight())
        result.tape.layers[l].inputs.push_back(x);
      switch (layer.spec.kind) {
      case LayerKind::dense:
        x = matmul(x, transposed[l]);
        if (!layer.bias.empty())
          add_bias_rows(x, layer.bias);
        break;
      case LayerKind::decoder:
        axpy(1.0, matmul(x, transposed[l]), decoded);
        break;
      case LayerKind::conv2d:
        x = conv2d(x, layer.weight, layer.spec.stride, layer.spec.padding);
        if (!layer.bias.empty())
          add_bias_planes(x, layer.bias);
        break;
      case LayerKind::avgpool:
        x = avgpool(x, layer.spec.pool);
        break;
      case LayerKind::flatten:
        x.reshape({B, shape_size(layer.out_shape)});
        break;
      case LayerKind::spiking: {
        StepRecord rec;
        states[l] = step(states[l], x, layer.neuron, options.record_tape ? &rec : nullptr,
                         static_cast<int>(l), static_cast<int>(t));
        const Tensor &spikes = states[l].spikes;
        result.stats.spikes[l] += sum(spikes);
        result.stats.neuron_steps[l] += static_cast<double>(spikes.size());
        if (options.mode == SpikeMode::relaxed) {
          x = Tensor(spikes.shape());
          const Tensor &u = states[l].membrane;
          for (std::size_t i = 0; i < x.size(); ++i)
            x[i] = relaxed_spike(u[i], layer.neuron);
        } else {
          x = spikes;
        }
        if (options.record_tape)
          result.tape.layers[l].steps.push_back(std::move(rec));
        break;
      }
      }
    }
  }
  result.logits = scale(decoded, 1.0 / static_cast<double>(T));
  return result;
}

Tensor encode_static(const Tensor &image, int timesteps) {
  if (timesteps < 1)
    throw ConfigError("encode_static: timesteps must be >= 1");
  Shape s{static_cast<std::size_t>(timesteps)};
  s.insert(s.end(), image.shape().begin(), image.shape().end());
  Tensor out(s);
  for (int t = 0; t < timesteps; ++t)
    std::copy(image.values().begin(), image.values().end(),
              out.values().begin() + static_cast<std::ptrdiff_t>(t) * image.size());
  return out;
}

} // namespace lnm
