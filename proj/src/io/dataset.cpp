#include "io/dataset.hpp"

#include <fstream>
#include <iterator>
#include <string>

#include "core/error.hpp"

namespace lnm {

IdxArray parse_idx(std::span<const std::uint8_t> bytes) {
  if (bytes.size() < 4)
    throw DataError("IDX: truncated header at byte offset " + std::to_string(bytes.size()));
  if (bytes[0] != 0 || bytes[1] != 0)
    throw DataError("IDX: bad magic at byte offset 0");
  if (bytes[2] != 0x08)
    throw DataError("IDX: unsupported element type 0x" + std::to_string(bytes[2]) +
                    " at byte offset 2 (only unsigned bytes)");
  const std::size_t rank = bytes[3];
  if (rank == 0)
    throw DataError("IDX: zero dimensions at byte offset 3");
  IdxArray out;
  std::size_t off = 4;
  for (std::size_t i = 0; i < rank; ++i) {
    if (off + 4 > bytes.size())
      throw DataError("IDX: truncated dimension table at byte offset " + std::to_string(off));
    const std::size_t d = (std::size_t{bytes[off]} << 24) | (std::size_t{bytes[off + 1]} << 16) |
                          (std::size_t{bytes[off + 2]} << 8) | std::size_t{bytes[off + 3]};
    out.dims.push_back(d);
    off += 4;
  }
  const std::size_t n = shape_size(out.dims);
  if (bytes.size() < off + n)
    throw DataError("IDX: truncated payload at byte offset " + std::to_string(bytes.size()) +
                    ", expected " + std::to_string(off + n) + " bytes");
  out.data.assign(bytes.begin() + static_cast<std::ptrdiff_t>(off),
                  bytes.begin() + static_cast<std::ptrdiff_t>(off + n));
  return out;
}

IdxArray read_idx(const std::filesystem::path &path) {
  std::ifstream in(path, std::ios::binary);
  if (!in)
    throw DataError("cannot open IDX file " + path.string());
  std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)),
                                  std::istreambuf_iterator<char>());
  try {
    return parse_idx(bytes);
  } catch (const DataError &e) {
    throw DataError(path.string() + ": " + e.what());
  }
}

namespace {

std::vector<int> read_labels(const std::filesystem::path &path, std::size_t expected) {
  const IdxArray a = read_idx(path);
  if (a.dims.size() != 1)
    throw DataError(path.string() + ": labels must be one-dimensional");
  if (a.dims[0] != expected)
    throw DataError(path.string() + ": " + std::to_string(a.dims[0]) + " labels for " +
                    std::to_string(expected) + " samples");
  return std::vector<int>(a.data.begin(), a.data.end());
}

Tensor normalized(const IdxArray &a, Shape shape) {
  Tensor t(std::move(shape));
  for (std::size_t i = 0; i < a.data.size(); ++i)
    t[i] = static_cast<double>(a.data[i]) / 255.0;
  return t;
}

} // namespace

Dataset load_idx(const std::filesystem::path &images, const std::filesystem::path &labels) {
  const IdxArray a = read_idx(images);
  Shape shape;
  if (a.dims.size() == 3)
    shape = {a.dims[0], 1, a.dims[1], a.dims[2]};
  else if (a.dims.size() == 4)
    shape = a.dims;
  else
    throw DataError(images.string() + ": images must be [N,H,W] or [N,C,H,W]");
  Dataset d;
  d.inputs = normalized(a, shape);
  d.labels = read_labels(labels, a.dims[0]);
  d.temporal = false;
  return d;
}

Dataset load_framed_events(const std::filesystem::path &frames,
                           const std::filesystem::path &labels) {
  const IdxArray a = read_idx(frames);
  if (a.dims.size() < 3)
    throw DataError(frames.string() + ": framed events must be [N,T,...]");
  Dataset d;
  d.inputs = normalized(a, a.dims);
  d.labels = read_labels(labels, a.dims[0]);
  d.temporal = true;
  return d;
}

Dataset gen_synthetic_temporal(const SyntheticTemporalParams &p) {
  if (p.classes < 2)
    throw ConfigError("synthetic_temporal: classes must be >= 2");
  if (p.timesteps < 2)
    throw ConfigError("synthetic_temporal: timesteps must be >= 2");
  if (!(p.noise >= 0.0 && p.noise <= 1.0))
    throw ConfigError("synthetic_temporal: noise must lie in [0, 1]");
  const std::size_t K = p.classes, T = static_cast<std::size_t>(p.timesteps);
  const std::size_t D = 2 * K, cue_steps = T / 2;
  Rng rng(p.seed);
  Dataset d;
  d.temporal = true;
  d.inputs = Tensor({p.samples, T, D});
  d.labels.resize(p.samples);
  for (std::size_t n = 0; n < p.samples; ++n) {
    const std::size_t label = rng.below(K);
    const std::size_t cue = rng.below(K);
    const std::size_t probe = K + (cue + label) % K;
    d.labels[n] = static_cast<int>(label);
    double *x = d.inputs.data() + n * T * D;
    for (std::size_t t = 0; t < T; ++t)
      x[t * D + (t < cue_steps ? cue : probe)] = 1.0;
    if (p.noise > 0.0)
      for (std::size_t i = 0; i < T * D; ++i)
        if (rng.bernoulli(p.noise))
          x[i] = 1.0 - x[i];
  }
  return d;
}

namespace {

Dataset take(const Dataset &d, std::size_t begin, std::size_t end) {
  const Shape full = d.inputs.shape();
  const std::size_t per = shape_size(full) / full[0];
  Shape s = full;
  s[0] = end - begin;
  Dataset out;
  out.temporal = d.temporal;
  out.inputs = Tensor(s, std::vector<double>(d.inputs.data() + begin * per,
                                             d.inputs.data() + end * per));
  out.labels.assign(d.labels.begin() + static_cast<std::ptrdiff_t>(begin),
                    d.labels.begin() + static_cast<std::ptrdiff_t>(end));
  return out;
}

void check_against(const Dataset &d, const NetworkSpec &spec, const char *split) {
  if (d.size() == 0)
    return;
  if (d.sample_shape() != spec.input_shape)
    throw ConfigError(std::string(split) + " samples have shape " +
                      shape_string(d.sample_shape()) + ", network expects " +
                      shape_string(spec.input_shape));
  if (d.temporal && d.inputs.dim(1) != static_cast<std::size_t>(spec.timesteps))
    throw ConfigError(std::string(split) + " data has " + std::to_string(d.inputs.dim(1)) +
                      " timesteps, network expects " + std::to_string(spec.timesteps));
  for (int y : d.labels)
    if (y < 0 || static_cast<std::size_t>(y) >= spec.num_classes)
      throw DataError(std::string(split) + " label " + std::to_string(y) + " outside [0, " +
                      std::to_string(spec.num_classes) + ")");
}

} // namespace

DataSplit load_dataset(const DatasetDescriptor &desc, const NetworkSpec &spec) {
  DataSplit split;
  switch (desc.kind) {
  case DatasetKind::synthetic_temporal: {
    if (desc.classes != spec.num_classes)
      throw ConfigError("dataset.classes (" + std::to_string(desc.classes) +
                        ") differs from network.num_classes (" +
                        std::to_string(spec.num_classes) + ")");
    Rng seeds(desc.seed);
    split.train = gen_synthetic_temporal(
        {desc.classes, desc.train_samples, spec.timesteps, desc.noise, seeds.next_u64()});
    split.val = gen_synthetic_temporal(
        {desc.classes, desc.val_samples, spec.timesteps, desc.noise, seeds.next_u64()});
    break;
  }
  case DatasetKind::idx_images:
  case DatasetKind::framed_events: {
    auto load = [&](const std::string &x, const std::string &y) {
      return desc.kind == DatasetKind::idx_images ? load_idx(x, y) : load_framed_events(x, y);
    };
    Dataset all = load(desc.train_images, desc.train_labels);
    if (!desc.val_images.empty()) {
      split.train = std::move(all);
      split.val = load(desc.val_images, desc.val_labels);
    } else {
      const std::size_t n_val =
          static_cast<std::size_t>(desc.val_fraction * static_cast<double>(all.size()));
      split.train = take(all, 0, all.size() - n_val);
      split.val = take(all, all.size() - n_val, all.size());
    }
    break;
  }
  }
  check_against(split.train, spec, "train");
  check_against(split.val, spec, "val");
  return split;
}

} // namespace lnm
