#pragma once

#include <span>

#include "core/tensor.hpp"

namespace lnm {

struct LossResult {
  double loss = 0.0;  // mean over the batch
  Tensor grad;        // d loss / d logits, [B, m]
};

// Softmax cross-entropy against (1 - s) onehot + s / m. Throws DataError for
// labels outside [0, m).
LossResult cross_entropy_smoothed(const Tensor &logits, std::span<const int> labels,
                                  double smoothing);

} // namespace lnm
