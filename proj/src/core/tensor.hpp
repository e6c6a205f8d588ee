#pragma once

#include <cstddef>
#include <initializer_list>
#include <span>
#include <string>
#include <vector>

namespace lnm {

using Shape = std::vector<std::size_t>;

std::size_t shape_size(const Shape &shape);
std::string shape_string(const Shape &shape);

// Dense row-major array of doubles. Value semantics; copies are deep.
class Tensor {
public:
  Tensor() = default;
  explicit Tensor(Shape shape, double fill = 0.0);
  Tensor(Shape shape, std::vector<double> data);

  static Tensor zeros(Shape shape) { return Tensor(std::move(shape)); }
  static Tensor from(std::initializer_list<double> values);
  static Tensor matrix(std::initializer_list<std::initializer_list<double>> rows);

  const Shape &shape() const noexcept { return shape_; }
  std::size_t rank() const noexcept { return shape_.size(); }
  std::size_t dim(std::size_t i) const { return shape_.at(i); }
  std::size_t size() const noexcept { return data_.size(); }
  bool empty() const noexcept { return data_.empty(); }

  std::span<double> values() noexcept { return data_; }
  std::span<const double> values() const noexcept { return data_; }
  double *data() noexcept { return data_.data(); }
  const double *data() const noexcept { return data_.data(); }

  double &operator[](std::size_t i) { return data_[i]; }
  double operator[](std::size_t i) const { return data_[i]; }

  double &at(std::initializer_list<std::size_t> index);
  double at(std::initializer_list<std::size_t> index) const;

  // Same data, new shape with equal element count.
  Tensor reshaped(Shape shape) const;
  void reshape(Shape shape);
  void fill(double value);

  bool all_finite() const noexcept;

  friend bool operator==(const Tensor &, const Tensor &) = default;

private:
  std::size_t offset(std::initializer_list<std::size_t> index) const;

  Shape shape_;
  std::vector<double> data_;
};

// a[M x K] * b[K x N]
Tensor matmul(const Tensor &a, const Tensor &b);
// a[M x K] * b[N x K]^T
Tensor matmul_bt(const Tensor &a, const Tensor &b);
// a[K x M]^T * b[K x N], accumulated into out[M x N]
void matmul_at_accumulate(const Tensor &a, const Tensor &b, Tensor &out);

struct Conv2dGeometry {
  std::size_t stride = 1;
  std::size_t padding = 0;
};

// Output spatial extent; throws ConfigError when it is not a positive integer.
std::size_t conv_output_extent(std::size_t in, std::size_t kernel,
                               std::size_t stride, std::size_t padding);

// Cross-correlation with zero padding: input[B,C,H,W], kernel[F,C,Kh,Kw].
Tensor conv2d(const Tensor &input, const Tensor &kernel, std::size_t stride,
              std::size_t padding);
// Gradient of conv2d w.r.t. its input, given the output gradient.
Tensor conv2d_backward_input(const Tensor &grad_out, const Tensor &kernel,
                             const Shape &input_shape, std::size_t stride,
                             std::size_t padding);
// Gradient w.r.t. the kernel, accumulated into grad_kernel.
void conv2d_backward_kernel(const Tensor &grad_out, const Tensor &input,
                            Tensor &grad_kernel, std::size_t stride,
                            std::size_t padding);

Tensor add(const Tensor &a, const Tensor &b);
Tensor sub(const Tensor &a, const Tensor &b);
Tensor mul(const Tensor &a, const Tensor &b);
Tensor add(const Tensor &a, double s);
Tensor scale(const Tensor &a, double s);
Tensor clip(const Tensor &a, double lo, double hi);
// 0 for x < 0, else 1.
Tensor heaviside(const Tensor &a);

// a += s * b
void axpy(double s, const Tensor &b, Tensor &a);
double sum(const Tensor &a);

} // namespace lnm
