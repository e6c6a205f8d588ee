#include <gtest/gtest.h>

#include <cmath>
#include <set>

#include "core/error.hpp"
#include "core/rng.hpp"
#include "core/tensor.hpp"
#include "support.hpp"

using namespace lnm;
using lnm::test::random_tensor;

namespace {

Tensor oracle_matmul(const Tensor &a, const Tensor &b) {
  const std::size_t M = a.dim(0), K = a.dim(1), N = b.dim(1);
  Tensor c({M, N});
  for (std::size_t i = 0; i < M; ++i)
    for (std::size_t j = 0; j < N; ++j) {
      double s = 0.0;
      for (std::size_t k = 0; k < K; ++k)
        s += a.at({i, k}) * b.at({k, j});
      c.at({i, j}) = s;
    }
  return c;
}

Tensor transposed(const Tensor &a) {
  Tensor t({a.dim(1), a.dim(0)});
  for (std::size_t i = 0; i < a.dim(0); ++i)
    for (std::size_t j = 0; j < a.dim(1); ++j)
      t.at({j, i}) = a.at({i, j});
  return t;
}

Tensor oracle_conv(const Tensor &x, const Tensor &k, std::size_t stride, std::size_t pad) {
  const std::size_t B = x.dim(0), C = x.dim(1), H = x.dim(2), W = x.dim(3);
  const std::size_t F = k.dim(0), Kh = k.dim(2), Kw = k.dim(3);
  const std::size_t Ho = (H + 2 * pad - Kh) / stride + 1, Wo = (W + 2 * pad - Kw) / stride + 1;
  Tensor y({B, F, Ho, Wo});
  for (std::size_t b = 0; b < B; ++b)
    for (std::size_t f = 0; f < F; ++f)
      for (std::size_t i = 0; i < Ho; ++i)
        for (std::size_t j = 0; j < Wo; ++j) {
          double s = 0.0;
          for (std::size_t c = 0; c < C; ++c)
            for (std::size_t p = 0; p < Kh; ++p)
              for (std::size_t q = 0; q < Kw; ++q) {
                const long r = static_cast<long>(i * stride + p) - static_cast<long>(pad);
                const long s2 = static_cast<long>(j * stride + q) - static_cast<long>(pad);
                if (r < 0 || s2 < 0 || r >= static_cast<long>(H) || s2 >= static_cast<long>(W))
                  continue;
                s += x.at({b, c, static_cast<std::size_t>(r), static_cast<std::size_t>(s2)}) *
                     k.at({f, c, p, q});
              }
          y.at({b, f, i, j}) = s;
        }
  return y;
}

double dot(const Tensor &a, const Tensor &b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i)
    s += a[i] * b[i];
  return s;
}

void expect_near_all(const Tensor &got, const Tensor &want, double tol) {
  ASSERT_EQ(got.shape(), want.shape());
  for (std::size_t i = 0; i < got.size(); ++i)
    EXPECT_NEAR(got[i], want[i], tol) << "at " << i;
}

} // namespace

TEST(Matmul, IdentityTimesColumn) {
  const Tensor r = matmul(Tensor::matrix({{1, 0}, {0, 1}}), Tensor::matrix({{3}, {4}}));
  EXPECT_EQ(r, Tensor::matrix({{3}, {4}}));
}

TEST(Matmul, RowTimesColumn) {
  EXPECT_EQ(matmul(Tensor::matrix({{1, 2}}), Tensor::matrix({{3}, {4}})), Tensor::matrix({{11}}));
}

TEST(Matmul, MatchesTripleLoopOracle) {
  Rng rng(11);
  const Tensor a = random_tensor({5, 7}, rng), b = random_tensor({7, 3}, rng);
  expect_near_all(matmul(a, b), oracle_matmul(a, b), 1e-12);
}

TEST(Matmul, TransposedVariantsMatchOracle) {
  Rng rng(12);
  const Tensor a = random_tensor({4, 6}, rng), b = random_tensor({5, 6}, rng);
  expect_near_all(matmul_bt(a, b), oracle_matmul(a, transposed(b)), 1e-12);

  const Tensor p = random_tensor({6, 4}, rng), q = random_tensor({6, 3}, rng);
  Tensor acc = random_tensor({4, 3}, rng);
  const Tensor start = acc;
  matmul_at_accumulate(p, q, acc);
  expect_near_all(acc, add(start, oracle_matmul(transposed(p), q)), 1e-12);
}

TEST(Matmul, IdentityIsExactOnBothSides) {
  Rng rng(13);
  const Tensor a = random_tensor({4, 4}, rng);
  Tensor eye({4, 4});
  for (std::size_t i = 0; i < 4; ++i)
    eye.at({i, i}) = 1.0;
  EXPECT_EQ(matmul(eye, a), a);
  EXPECT_EQ(matmul(a, eye), a);
}

TEST(Matmul, InnerMismatchThrows) {
  EXPECT_THROW(matmul(Tensor({2, 3}), Tensor({2, 3})), DimensionError);
}

TEST(Conv2d, OnesKernelSumsWindow) {
  const Tensor r = conv2d(Tensor({1, 1, 3, 3}, 1.0), Tensor({1, 1, 3, 3}, 1.0), 1, 0);
  EXPECT_EQ(r, Tensor({1, 1, 1, 1}, 9.0));
}

TEST(Conv2d, ZeroKernelGivesZeros) {
  Rng rng(1);
  const Tensor r = conv2d(random_tensor({2, 3, 5, 5}, rng), Tensor({4, 3, 3, 3}), 1, 1);
  EXPECT_EQ(r, Tensor({2, 4, 5, 5}));
}

TEST(Conv2d, MatchesNestedLoopOracle) {
  Rng rng(2);
  const Tensor x = random_tensor({2, 2, 6, 6}, rng);
  const Tensor k = random_tensor({3, 2, 3, 3}, rng);
  for (auto [stride, pad] : {std::pair<std::size_t, std::size_t>{1, 0}, {1, 1}, {3, 0}})
    expect_near_all(conv2d(x, k, stride, pad), oracle_conv(x, k, stride, pad), 1e-12);
  const Tensor odd = random_tensor({2, 2, 7, 7}, rng);
  expect_near_all(conv2d(odd, k, 2, 1), oracle_conv(odd, k, 2, 1), 1e-12);
}

TEST(Conv2d, PointwiseOnesKernelIsChannelSum) {
  Rng rng(3);
  const Tensor x = random_tensor({2, 3, 4, 4}, rng);
  const Tensor r = conv2d(x, Tensor({1, 3, 1, 1}, 1.0), 1, 0);
  for (std::size_t b = 0; b < 2; ++b)
    for (std::size_t i = 0; i < 4; ++i)
      for (std::size_t j = 0; j < 4; ++j)
        EXPECT_DOUBLE_EQ(r.at({b, 0, i, j}),
                         x.at({b, 0, i, j}) + x.at({b, 1, i, j}) + x.at({b, 2, i, j}));
}

// <conv(x, k), g> is bilinear, so both backward kernels must be its adjoints.
TEST(Conv2d, BackwardPassesAreAdjoints) {
  Rng rng(4);
  for (auto [stride, pad] : {std::pair<std::size_t, std::size_t>{1, 0}, {1, 1}, {2, 1}}) {
    const Tensor x = random_tensor({2, 2, 7, 7}, rng);
    const Tensor k = random_tensor({3, 2, 3, 3}, rng);
    const Tensor y = conv2d(x, k, stride, pad);
    const Tensor g = random_tensor(y.shape(), rng);
    const double lhs = dot(y, g);
    EXPECT_NEAR(dot(x, conv2d_backward_input(g, k, x.shape(), stride, pad)), lhs, 1e-11);
    Tensor gk(k.shape());
    conv2d_backward_kernel(g, x, gk, stride, pad);
    EXPECT_NEAR(dot(k, gk), lhs, 1e-11);
  }
}

TEST(Conv2d, NonIntegerExtentIsConfigError) {
  EXPECT_THROW(conv_output_extent(6, 3, 2, 0), ConfigError);
  EXPECT_THROW(conv_output_extent(2, 3, 1, 0), ConfigError);
  EXPECT_EQ(conv_output_extent(6, 3, 1, 1), 6u);
  EXPECT_THROW(conv2d(Tensor({1, 1, 6, 6}), Tensor({1, 1, 3, 3}), 2, 0), ConfigError);
}

TEST(Elementwise, HeavisideCountsZeroAsSpike) {
  EXPECT_EQ(heaviside(Tensor::from({-0.1, 0.0, 0.1})), Tensor::from({0, 1, 1}));
}

TEST(Elementwise, ClipToUnitRange) {
  EXPECT_EQ(clip(Tensor::from({-2, 0.5, 2}), -1, 1), Tensor::from({-1, 0.5, 1}));
}

TEST(Elementwise, ClipIsIdempotent) {
  Rng rng(5);
  const Tensor x = random_tensor({100}, rng, -3, 3);
  EXPECT_EQ(clip(clip(x, -1, 1), -1, 1), clip(x, -1, 1));
}

TEST(Elementwise, AddZerosIsIdentity) {
  Rng rng(6);
  const Tensor x = random_tensor({3, 4}, rng);
  EXPECT_EQ(add(x, Tensor({3, 4})), x);
}

TEST(Elementwise, Arithmetic) {
  const Tensor a = Tensor::from({1, 2, 3}), b = Tensor::from({4, 5, 6});
  EXPECT_EQ(sub(b, a), Tensor::from({3, 3, 3}));
  EXPECT_EQ(mul(a, b), Tensor::from({4, 10, 18}));
  EXPECT_EQ(scale(a, 2.0), Tensor::from({2, 4, 6}));
  EXPECT_EQ(add(a, 1.0), Tensor::from({2, 3, 4}));
  Tensor c = a;
  axpy(2.0, b, c);
  EXPECT_EQ(c, Tensor::from({9, 12, 15}));
  EXPECT_DOUBLE_EQ(sum(b), 15.0);
}

TEST(Elementwise, ShapeMismatchThrows) {
  EXPECT_THROW(add(Tensor({3}), Tensor({4})), DimensionError);
  EXPECT_THROW(mul(Tensor({2, 2}), Tensor({4})), DimensionError);
}

TEST(TensorBasics, ReshapeKeepsDataAndChecksCount) {
  Tensor t = Tensor::from({1, 2, 3, 4, 5, 6});
  const Tensor r = t.reshaped({2, 3});
  EXPECT_EQ(r.at({1, 0}), 4.0);
  EXPECT_THROW(t.reshape({4, 2}), DimensionError);
  EXPECT_THROW(r.at({2, 0}), DimensionError);
}

TEST(TensorBasics, FiniteCheck) {
  Tensor t({3});
  EXPECT_TRUE(t.all_finite());
  t[1] = std::nan("");
  EXPECT_FALSE(t.all_finite());
}

TEST(Rng, SameSeedSameStream) {
  Rng a(42), b(42), c(43);
  bool differs = false;
  for (int i = 0; i < 100; ++i) {
    const auto x = a.next_u64();
    EXPECT_EQ(x, b.next_u64());
    differs |= x != c.next_u64();
  }
  EXPECT_TRUE(differs);
}

TEST(Rng, SameSeedSameTensors) {
  Rng a(9), b(9);
  EXPECT_EQ(random_tensor({4, 5}, a), random_tensor({4, 5}, b));
}

TEST(Rng, StateRoundTrip) {
  Rng a(5);
  a.next_u64();
  Rng b(0);
  b.set_state(a.state());
  for (int i = 0; i < 10; ++i)
    EXPECT_EQ(a.next_u64(), b.next_u64());
}

TEST(Rng, RangesAndPermutation) {
  Rng rng(7);
  for (int i = 0; i < 1000; ++i) {
    const double u = rng.uniform();
    EXPECT_GE(u, 0.0);
    EXPECT_LT(u, 1.0);
    EXPECT_LT(rng.below(7), 7u);
  }
  const auto p = rng.permutation(50);
  EXPECT_EQ(std::set<std::size_t>(p.begin(), p.end()).size(), 50u);
  EXPECT_EQ(*std::max_element(p.begin(), p.end()), 49u);
}

TEST(Rng, NormalMoments) {
  Rng rng(8);
  double s = 0.0, s2 = 0.0;
  const int n = 200000;
  for (int i = 0; i < n; ++i) {
    const double z = rng.normal();
    s += z;
    s2 += z * z;
  }
  EXPECT_NEAR(s / n, 0.0, 0.01);
  EXPECT_NEAR(s2 / n, 1.0, 0.01);
}
