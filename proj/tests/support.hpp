#pragma once

#include <atomic>
#include <filesystem>
#include <string>
#include <unistd.h>

#include "core/rng.hpp"
#include "core/tensor.hpp"
#include "network/network.hpp"

namespace lnm::test {

// Fresh directory under the system temp dir, removed on scope exit.
class TempDir {
public:
  TempDir() {
    static std::atomic<int> counter{0};
    path_ = std::filesystem::temp_directory_path() /
            ("lnm_test_" + std::to_string(::getpid()) + "_" + std::to_string(counter++));
    std::filesystem::remove_all(path_);
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir &) = delete;
  TempDir &operator=(const TempDir &) = delete;

  const std::filesystem::path &path() const { return path_; }
  std::filesystem::path operator/(const std::string &name) const { return path_ / name; }

private:
  std::filesystem::path path_;
};

inline Tensor random_tensor(Shape shape, Rng &rng, double lo = -1.0, double hi = 1.0) {
  Tensor t(std::move(shape));
  for (auto &v : t.values())
    v = rng.uniform(lo, hi);
  return t;
}

inline LayerSpec dense(std::size_t units, bool bias = true) {
  LayerSpec l;
  l.kind = LayerKind::dense;
  l.units = units;
  l.bias = bias;
  return l;
}

inline LayerSpec spiking(int degree = 3) {
  LayerSpec l;
  l.kind = LayerKind::spiking;
  l.degree = degree;
  return l;
}

inline LayerSpec decoder() {
  LayerSpec l;
  l.kind = LayerKind::decoder;
  return l;
}

inline LayerSpec conv(std::size_t filters, std::size_t kernel, std::size_t stride = 1,
                      std::size_t padding = 0) {
  LayerSpec l;
  l.kind = LayerKind::conv2d;
  l.filters = filters;
  l.kernel = kernel;
  l.stride = stride;
  l.padding = padding;
  return l;
}

inline LayerSpec pool(std::size_t k) {
  LayerSpec l;
  l.kind = LayerKind::avgpool;
  l.pool = k;
  return l;
}

inline LayerSpec flatten() {
  LayerSpec l;
  l.kind = LayerKind::flatten;
  return l;
}

// input -> dense(hidden) -> spiking -> decoder
inline NetworkSpec mlp_spec(std::size_t inputs, std::size_t hidden, std::size_t classes,
                            int timesteps, int degree = 3) {
  NetworkSpec s;
  s.input_shape = {inputs};
  s.layers = {dense(hidden), spiking(degree), decoder()};
  s.timesteps = timesteps;
  s.num_classes = classes;
  return s;
}

} // namespace lnm::test

namespace lnm::test {

// Scalar that counts multiplications and additions, for operation-count
// checks of generic numerical kernels.
struct Counted {
  double v = 0.0;
  static inline long muls = 0;
  static inline long adds = 0;

  Counted() = default;
  explicit Counted(double x) : v(x) {}
  static void reset() { muls = adds = 0; }

  friend Counted operator*(Counted a, Counted b) {
    ++muls;
    return Counted(a.v * b.v);
  }
  friend Counted operator+(Counted a, Counted b) {
    ++adds;
    return Counted(a.v + b.v);
  }
};

} // namespace lnm::test
