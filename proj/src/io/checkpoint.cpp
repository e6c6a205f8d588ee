#include "io/checkpoint.hpp"

#include <bit>
#include <cstring>
#include <map>

#include "core/error.hpp"
#include "io/files.hpp"

namespace lnm {

namespace {

constexpr char kMagic[4] = {'L', 'N', 'M', '1'};

class Writer {
public:
  void bytes(const void *p, std::size_t n) {
    const auto *b = static_cast<const std::uint8_t *>(p);
    out.insert(out.end(), b, b + n);
  }
  void u32(std::uint32_t v) {
    for (int i = 0; i < 4; ++i)
      out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
  }
  void u64(std::uint64_t v) {
    for (int i = 0; i < 8; ++i)
      out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
  }
  void f64(double v) { u64(std::bit_cast<std::uint64_t>(v)); }

  std::vector<std::uint8_t> out;
};

class Reader {
public:
  explicit Reader(std::span<const std::uint8_t> b) : b_(b) {}

  void need(std::size_t n, const char *what) const {
    if (off_ + n > b_.size())
      throw DataError(std::string("checkpoint truncated reading ") + what + " at byte offset " +
                      std::to_string(off_));
  }
  std::uint32_t u32(const char *what) {
    need(4, what);
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i)
      v |= std::uint32_t{b_[off_ + i]} << (8 * i);
    off_ += 4;
    return v;
  }
  std::uint64_t u64(const char *what) {
    need(8, what);
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i)
      v |= std::uint64_t{b_[off_ + i]} << (8 * i);
    off_ += 8;
    return v;
  }
  double f64(const char *what) { return std::bit_cast<double>(u64(what)); }
  std::string str(std::size_t n, const char *what) {
    need(n, what);
    std::string s(reinterpret_cast<const char *>(b_.data() + off_), n);
    off_ += n;
    return s;
  }
  std::size_t offset() const { return off_; }
  std::size_t remaining() const { return b_.size() - off_; }

private:
  std::span<const std::uint8_t> b_;
  std::size_t off_ = 0;
};

} // namespace

Checkpoint make_checkpoint(const Network &net, std::uint64_t epoch, const Rng::State &rng) {
  Checkpoint c{epoch, rng, {}};
  for (std::size_t l = 0; l < net.layers.size(); ++l) {
    const Layer &layer = net.layers[l];
    const std::string prefix = "layer" + std::to_string(l) + ".";
    if (!layer.weight.empty())
      c.tensors.push_back({prefix + "weight", layer.weight});
    if (!layer.bias.empty())
      c.tensors.push_back({prefix + "bias", layer.bias});
    if (layer.spec.kind == LayerKind::spiking) {
      const auto coeffs = layer.neuron.params.coeffs();
      c.tensors.push_back({prefix + "theta", Tensor({coeffs.size()},
                                                    std::vector<double>(coeffs.begin(), coeffs.end()))});
    }
  }
  return c;
}

std::vector<std::uint8_t> encode_checkpoint(const Checkpoint &ckpt) {
  Writer w;
  w.bytes(kMagic, 4);
  w.u32(kCheckpointVersion);
  w.u64(ckpt.epoch);
  for (auto s : ckpt.rng)
    w.u64(s);
  w.u32(static_cast<std::uint32_t>(ckpt.tensors.size()));
  for (const auto &t : ckpt.tensors) {
    w.u32(static_cast<std::uint32_t>(t.name.size()));
    w.bytes(t.name.data(), t.name.size());
    w.u32(static_cast<std::uint32_t>(t.tensor.rank()));
    for (auto d : t.tensor.shape())
      w.u64(d);
    for (double v : t.tensor.values())
      w.f64(v);
  }
  return std::move(w.out);
}

Checkpoint decode_checkpoint(std::span<const std::uint8_t> bytes) {
  Reader r(bytes);
  if (r.str(4, "magic") != std::string(kMagic, 4))
    throw DataError("not an LNM1 checkpoint (bad magic at byte offset 0)");
  const std::uint32_t version = r.u32("version");
  if (version != kCheckpointVersion)
    throw DataError("unsupported checkpoint version " + std::to_string(version) +
                    " at byte offset 4");
  Checkpoint c;
  c.epoch = r.u64("epoch");
  for (auto &s : c.rng)
    s = r.u64("rng state");
  const std::uint32_t count = r.u32("tensor count");
  for (std::uint32_t i = 0; i < count; ++i) {
    NamedTensor t;
    t.name = r.str(r.u32("name length"), "tensor name");
    const std::uint32_t rank = r.u32("rank");
    Shape shape;
    for (std::uint32_t k = 0; k < rank; ++k)
      shape.push_back(r.u64("dimension"));
    const std::size_t n = shape_size(shape);
    if (n > r.remaining() / 8)
      throw DataError("checkpoint truncated reading tensor " + t.name + " at byte offset " +
                      std::to_string(r.offset()));
    std::vector<double> values(n);
    for (auto &v : values)
      v = r.f64("tensor values");
    t.tensor = Tensor(std::move(shape), std::move(values));
    c.tensors.push_back(std::move(t));
  }
  if (r.remaining() != 0)
    throw DataError("trailing bytes after checkpoint at byte offset " + std::to_string(r.offset()));
  return c;
}

void apply_checkpoint(Network &net, const Checkpoint &ckpt) {
  std::map<std::string, const Tensor *> byname;
  for (const auto &t : ckpt.tensors)
    if (!byname.emplace(t.name, &t.tensor).second)
      throw DataError("checkpoint holds tensor " + t.name + " twice");
  std::size_t used = 0;
  auto fetch = [&](const std::string &name) -> const Tensor & {
    auto it = byname.find(name);
    if (it == byname.end())
      throw DataError("checkpoint is missing tensor " + name);
    ++used;
    return *it->second;
  };
  for (std::size_t l = 0; l < net.layers.size(); ++l) {
    Layer &layer = net.layers[l];
    const std::string prefix = "layer" + std::to_string(l) + ".";
    for (Tensor *dst : {&layer.weight, &layer.bias}) {
      if (dst->empty())
        continue;
      const std::string name = prefix + (dst == &layer.weight ? "weight" : "bias");
      const Tensor &src = fetch(name);
      if (src.shape() != dst->shape())
        throw DataError("checkpoint tensor " + name + " has shape " + shape_string(src.shape()) +
                        ", network expects " + shape_string(dst->shape()));
      *dst = src;
    }
    if (layer.spec.kind == LayerKind::spiking) {
      const Tensor &src = fetch(prefix + "theta");
      if (src.rank() != 1 || src.size() < 2)
        throw DataError("checkpoint tensor " + prefix + "theta must hold at least 2 coefficients");
      if (src[0] != 0.0)
        throw DataError("checkpoint tensor " + prefix + "theta violates f(0) = 0");
      layer.neuron.params = LnmParams(std::vector<double>(src.values().begin(), src.values().end()));
      layer.spec.degree = layer.neuron.params.degree();
      net.spec.layers[l].degree = layer.spec.degree;
    }
  }
  if (used != byname.size())
    throw DataError("checkpoint holds tensors the network does not have");
}

void save_checkpoint(const std::filesystem::path &path, const Network &net, std::uint64_t epoch,
                     const Rng::State &rng) {
  write_file_atomic(path, encode_checkpoint(make_checkpoint(net, epoch, rng)));
}

Checkpoint load_checkpoint(const std::filesystem::path &path) {
  std::vector<std::uint8_t> bytes;
  try {
    bytes = read_file(path);
  } catch (const IoError &e) {
    throw DataError(e.what());
  }
  return decode_checkpoint(bytes);
}

} // namespace lnm
