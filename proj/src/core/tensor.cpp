#include "core/tensor.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "core/error.hpp"

namespace lnm {

std::size_t shape_size(const Shape &shape) {
  std::size_t n = 1;
  for (auto d : shape)
    n *= d;
  return n;
}

std::string shape_string(const Shape &shape) {
  std::ostringstream os;
  os << '[';
  for (std::size_t i = 0; i < shape.size(); ++i) {
    if (i)
      os << 'x';
    os << shape[i];
  }
  os << ']';
  return os.str();
}

Tensor::Tensor(Shape shape, double fill)
    : shape_(std::move(shape)), data_(shape_size(shape_), fill) {}

Tensor::Tensor(Shape shape, std::vector<double> data)
    : shape_(std::move(shape)), data_(std::move(data)) {
  if (shape_size(shape_) != data_.size())
    throw DimensionError("tensor shape " + shape_string(shape_) + " does not hold " +
                         std::to_string(data_.size()) + " elements");
}

Tensor Tensor::from(std::initializer_list<double> values) {
  return Tensor({values.size()}, std::vector<double>(values));
}

Tensor Tensor::matrix(std::initializer_list<std::initializer_list<double>> rows) {
  std::size_t cols = rows.size() ? rows.begin()->size() : 0;
  std::vector<double> data;
  data.reserve(rows.size() * cols);
  for (const auto &row : rows) {
    if (row.size() != cols)
      throw DimensionError("ragged matrix literal");
    data.insert(data.end(), row.begin(), row.end());
  }
  return Tensor({rows.size(), cols}, std::move(data));
}

std::size_t Tensor::offset(std::initializer_list<std::size_t> index) const {
  if (index.size() != shape_.size())
    throw DimensionError("index rank " + std::to_string(index.size()) +
                         " for tensor " + shape_string(shape_));
  std::size_t off = 0;
  std::size_t axis = 0;
  for (auto i : index) {
    if (i >= shape_[axis])
      throw DimensionError("index out of range for tensor " + shape_string(shape_));
    off = off * shape_[axis] + i;
    ++axis;
  }
  return off;
}

double &Tensor::at(std::initializer_list<std::size_t> index) { return data_[offset(index)]; }
double Tensor::at(std::initializer_list<std::size_t> index) const {
  return data_[offset(index)];
}

Tensor Tensor::reshaped(Shape shape) const {
  Tensor t = *this;
  t.reshape(std::move(shape));
  return t;
}

void Tensor::reshape(Shape shape) {
  if (shape_size(shape) != data_.size())
    throw DimensionError("cannot reshape " + shape_string(shape_) + " to " +
                         shape_string(shape));
  shape_ = std::move(shape);
}

void Tensor::fill(double value) { std::fill(data_.begin(), data_.end(), value); }

bool Tensor::all_finite() const noexcept {
  return std::all_of(data_.begin(), data_.end(), [](double v) { return std::isfinite(v); });
}

namespace {

void require_rank(const Tensor &t, std::size_t rank, const char *what) {
  if (t.rank() != rank)
    throw DimensionError(std::string(what) + ": expected rank " + std::to_string(rank) +
                         ", got " + shape_string(t.shape()));
}

void require_same(const Tensor &a, const Tensor &b, const char *what) {
  if (a.shape() != b.shape())
    throw DimensionError(std::string(what) + ": shape mismatch " + shape_string(a.shape()) +
                         " vs " + shape_string(b.shape()));
}

template <class Op> Tensor zip(const Tensor &a, const Tensor &b, const char *what, Op op) {
  require_same(a, b, what);
  Tensor out(a.shape());
  for (std::size_t i = 0; i < a.size(); ++i)
    out[i] = op(a[i], b[i]);
  return out;
}

template <class Op> Tensor map(const Tensor &a, Op op) {
  Tensor out(a.shape());
  for (std::size_t i = 0; i < a.size(); ++i)
    out[i] = op(a[i]);
  return out;
}

} // namespace

Tensor matmul(const Tensor &a, const Tensor &b) {
  require_rank(a, 2, "matmul");
  require_rank(b, 2, "matmul");
  if (a.dim(1) != b.dim(0))
    throw DimensionError("matmul: inner dimensions differ, " + shape_string(a.shape()) +
                         " x " + shape_string(b.shape()));
  const std::size_t m = a.dim(0), k = a.dim(1), n = b.dim(1);
  Tensor out({m, n});
  const double *pa = a.data();
  const double *pb = b.data();
  double *po = out.data();
  for (std::size_t i = 0; i < m; ++i) {
    double *row = po + i * n;
    for (std::size_t p = 0; p < k; ++p) {
      const double av = pa[i * k + p];
      if (av == 0.0)
        continue;
      const double *brow = pb + p * n;
      for (std::size_t j = 0; j < n; ++j)
        row[j] += av * brow[j];
    }
  }
  return out;
}

Tensor matmul_bt(const Tensor &a, const Tensor &b) {
  require_rank(a, 2, "matmul_bt");
  require_rank(b, 2, "matmul_bt");
  if (a.dim(1) != b.dim(1))
    throw DimensionError("matmul_bt: inner dimensions differ, " + shape_string(a.shape()) +
                         " x " + shape_string(b.shape()) + "^T");
  const std::size_t m = a.dim(0), k = a.dim(1), n = b.dim(0);
  Tensor out({m, n});
  const double *pa = a.data();
  const double *pb = b.data();
  double *po = out.data();
  for (std::size_t i = 0; i < m; ++i) {
    const double *arow = pa + i * k;
    for (std::size_t j = 0; j < n; ++j) {
      const double *brow = pb + j * k;
      double acc = 0.0;
      for (std::size_t p = 0; p < k; ++p)
        acc += arow[p] * brow[p];
      po[i * n + j] = acc;
    }
  }
  return out;
}

void matmul_at_accumulate(const Tensor &a, const Tensor &b, Tensor &out) {
  require_rank(a, 2, "matmul_at");
  require_rank(b, 2, "matmul_at");
  if (a.dim(0) != b.dim(0))
    throw DimensionError("matmul_at: inner dimensions differ, " + shape_string(a.shape()) +
                         "^T x " + shape_string(b.shape()));
  const std::size_t k = a.dim(0), m = a.dim(1), n = b.dim(1);
  if (out.shape() != Shape{m, n})
    throw DimensionError("matmul_at: output " + shape_string(out.shape()) + " expected " +
                         shape_string({m, n}));
  const double *pa = a.data();
  const double *pb = b.data();
  double *po = out.data();
  for (std::size_t p = 0; p < k; ++p) {
    const double *brow = pb + p * n;
    for (std::size_t i = 0; i < m; ++i) {
      const double av = pa[p * m + i];
      if (av == 0.0)
        continue;
      double *row = po + i * n;
      for (std::size_t j = 0; j < n; ++j)
        row[j] += av * brow[j];
    }
  }
}

std::size_t conv_output_extent(std::size_t in, std::size_t kernel, std::size_t stride,
                               std::size_t padding) {
  if (stride == 0)
    throw ConfigError("conv2d: stride must be positive");
  const std::size_t padded = in + 2 * padding;
  if (kernel == 0 || padded < kernel || (padded - kernel) % stride != 0)
    throw ConfigError("conv2d: extent " + std::to_string(in) + " with kernel " +
                      std::to_string(kernel) + ", stride " + std::to_string(stride) +
                      ", padding " + std::to_string(padding) +
                      " does not give an integer output size");
  return (padded - kernel) / stride + 1;
}

Tensor conv2d(const Tensor &input, const Tensor &kernel, std::size_t stride,
              std::size_t padding) {
  require_rank(input, 4, "conv2d input");
  require_rank(kernel, 4, "conv2d kernel");
  const std::size_t B = input.dim(0), C = input.dim(1), H = input.dim(2), W = input.dim(3);
  const std::size_t F = kernel.dim(0), Kh = kernel.dim(2), Kw = kernel.dim(3);
  if (kernel.dim(1) != C)
    throw DimensionError("conv2d: input " + shape_string(input.shape()) + " and kernel " +
                         shape_string(kernel.shape()) + " disagree on channels");
  const std::size_t Ho = conv_output_extent(H, Kh, stride, padding);
  const std::size_t Wo = conv_output_extent(W, Kw, stride, padding);
  Tensor out({B, F, Ho, Wo});
  const double *in = input.data();
  const double *ker = kernel.data();
  double *po = out.data();
  const long pad = static_cast<long>(padding);
  for (std::size_t b = 0; b < B; ++b)
    for (std::size_t f = 0; f < F; ++f) {
      double *plane = po + (b * F + f) * Ho * Wo;
      for (std::size_t c = 0; c < C; ++c) {
        const double *src = in + (b * C + c) * H * W;
        const double *kc = ker + (f * C + c) * Kh * Kw;
        for (std::size_t ki = 0; ki < Kh; ++ki)
          for (std::size_t kj = 0; kj < Kw; ++kj) {
            const double kv = kc[ki * Kw + kj];
            if (kv == 0.0)
              continue;
            for (std::size_t oi = 0; oi < Ho; ++oi) {
              const long ii = static_cast<long>(oi * stride + ki) - pad;
              if (ii < 0 || ii >= static_cast<long>(H))
                continue;
              const double *srow = src + ii * W;
              double *orow = plane + oi * Wo;
              for (std::size_t oj = 0; oj < Wo; ++oj) {
                const long jj = static_cast<long>(oj * stride + kj) - pad;
                if (jj < 0 || jj >= static_cast<long>(W))
                  continue;
                orow[oj] += kv * srow[jj];
              }
            }
          }
      }
    }
  return out;
}

Tensor conv2d_backward_input(const Tensor &grad_out, const Tensor &kernel,
                             const Shape &input_shape, std::size_t stride,
                             std::size_t padding) {
  require_rank(grad_out, 4, "conv2d grad");
  const std::size_t B = input_shape.at(0), C = input_shape.at(1), H = input_shape.at(2),
                    W = input_shape.at(3);
  const std::size_t F = kernel.dim(0), Kh = kernel.dim(2), Kw = kernel.dim(3);
  const std::size_t Ho = grad_out.dim(2), Wo = grad_out.dim(3);
  if (grad_out.dim(0) != B || grad_out.dim(1) != F)
    throw DimensionError("conv2d_backward_input: gradient " + shape_string(grad_out.shape()) +
                         " does not match kernel " + shape_string(kernel.shape()));
  Tensor grad_in(input_shape);
  const double *g = grad_out.data();
  const double *ker = kernel.data();
  double *gi = grad_in.data();
  const long pad = static_cast<long>(padding);
  for (std::size_t b = 0; b < B; ++b)
    for (std::size_t f = 0; f < F; ++f) {
      const double *gplane = g + (b * F + f) * Ho * Wo;
      for (std::size_t c = 0; c < C; ++c) {
        double *dst = gi + (b * C + c) * H * W;
        const double *kc = ker + (f * C + c) * Kh * Kw;
        for (std::size_t ki = 0; ki < Kh; ++ki)
          for (std::size_t kj = 0; kj < Kw; ++kj) {
            const double kv = kc[ki * Kw + kj];
            if (kv == 0.0)
              continue;
            for (std::size_t oi = 0; oi < Ho; ++oi) {
              const long ii = static_cast<long>(oi * stride + ki) - pad;
              if (ii < 0 || ii >= static_cast<long>(H))
                continue;
              const double *grow = gplane + oi * Wo;
              double *drow = dst + ii * W;
              for (std::size_t oj = 0; oj < Wo; ++oj) {
                const long jj = static_cast<long>(oj * stride + kj) - pad;
                if (jj < 0 || jj >= static_cast<long>(W))
                  continue;
                drow[jj] += kv * grow[oj];
              }
            }
          }
      }
    }
  return grad_in;
}

void conv2d_backward_kernel(const Tensor &grad_out, const Tensor &input, Tensor &grad_kernel,
                            std::size_t stride, std::size_t padding) {
  require_rank(grad_out, 4, "conv2d grad");
  require_rank(input, 4, "conv2d input");
  const std::size_t B = input.dim(0), C = input.dim(1), H = input.dim(2), W = input.dim(3);
  const std::size_t F = grad_kernel.dim(0), Kh = grad_kernel.dim(2), Kw = grad_kernel.dim(3);
  const std::size_t Ho = grad_out.dim(2), Wo = grad_out.dim(3);
  const double *g = grad_out.data();
  const double *in = input.data();
  double *gk = grad_kernel.data();
  const long pad = static_cast<long>(padding);
  for (std::size_t b = 0; b < B; ++b)
    for (std::size_t f = 0; f < F; ++f) {
      const double *gplane = g + (b * F + f) * Ho * Wo;
      for (std::size_t c = 0; c < C; ++c) {
        const double *src = in + (b * C + c) * H * W;
        double *kc = gk + (f * C + c) * Kh * Kw;
        for (std::size_t ki = 0; ki < Kh; ++ki)
          for (std::size_t kj = 0; kj < Kw; ++kj) {
            double acc = 0.0;
            for (std::size_t oi = 0; oi < Ho; ++oi) {
              const long ii = static_cast<long>(oi * stride + ki) - pad;
              if (ii < 0 || ii >= static_cast<long>(H))
                continue;
              const double *grow = gplane + oi * Wo;
              const double *srow = src + ii * W;
              for (std::size_t oj = 0; oj < Wo; ++oj) {
                const long jj = static_cast<long>(oj * stride + kj) - pad;
                if (jj < 0 || jj >= static_cast<long>(W))
                  continue;
                acc += grow[oj] * srow[jj];
              }
            }
            kc[ki * Kw + kj] += acc;
          }
      }
    }
}

Tensor add(const Tensor &a, const Tensor &b) {
  return zip(a, b, "add", [](double x, double y) { return x + y; });
}
Tensor sub(const Tensor &a, const Tensor &b) {
  return zip(a, b, "sub", [](double x, double y) { return x - y; });
}
Tensor mul(const Tensor &a, const Tensor &b) {
  return zip(a, b, "mul", [](double x, double y) { return x * y; });
}
Tensor add(const Tensor &a, double s) {
  return map(a, [s](double x) { return x + s; });
}
Tensor scale(const Tensor &a, double s) {
  return map(a, [s](double x) { return x * s; });
}
Tensor clip(const Tensor &a, double lo, double hi) {
  return map(a, [lo, hi](double x) { return std::clamp(x, lo, hi); });
}
Tensor heaviside(const Tensor &a) {
  return map(a, [](double x) { return x < 0.0 ? 0.0 : 1.0; });
}

void axpy(double s, const Tensor &b, Tensor &a) {
  require_same(a, b, "axpy");
  for (std::size_t i = 0; i < a.size(); ++i)
    a[i] += s * b[i];
}

double sum(const Tensor &a) {
  double acc = 0.0;
  for (double v : a.values())
    acc += v;
  return acc;
}

} // namespace lnm
