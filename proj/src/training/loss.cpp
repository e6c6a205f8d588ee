#include "training/loss.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "core/error.hpp"

namespace lnm {

LossResult cross_entropy_smoothed(const Tensor &logits, std::span<const int> labels,
                                  double smoothing) {
  if (logits.rank() != 2)
    throw DimensionError("cross_entropy: logits must be [B, m], got " +
                         shape_string(logits.shape()));
  const std::size_t B = logits.dim(0), m = logits.dim(1);
  if (labels.size() != B)
    throw DimensionError("cross_entropy: " + std::to_string(labels.size()) + " labels for " +
                         std::to_string(B) + " logits");
  LossResult r{0.0, Tensor({B, m})};
  const double off = smoothing / static_cast<double>(m);
  const double on = 1.0 - smoothing + off;
  std::vector<double> p(m);
  for (std::size_t b = 0; b < B; ++b) {
    const int y = labels[b];
    if (y < 0 || static_cast<std::size_t>(y) >= m)
      throw DataError("label " + std::to_string(y) + " outside [0, " + std::to_string(m) + ")");
    const double *z = logits.data() + b * m;
    const double zmax = *std::max_element(z, z + m);
    double denom = 0.0;
    for (std::size_t j = 0; j < m; ++j) {
      p[j] = std::exp(z[j] - zmax);
      denom += p[j];
    }
    const double log_denom = std::log(denom);
    double loss = 0.0;
    for (std::size_t j = 0; j < m; ++j) {
      const double target = static_cast<std::size_t>(y) == j ? on : off;
      const double log_p = z[j] - zmax - log_denom;
      if (target != 0.0)
        loss -= target * log_p;
      r.grad[b * m + j] = (p[j] / denom - target) / static_cast<double>(B);
    }
    r.loss += loss;
  }
  r.loss /= static_cast<double>(B);
  return r;
}

} // namespace lnm
