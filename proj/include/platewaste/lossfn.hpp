#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "platewaste/maskcore.hpp"
#include "platewaste/tensor.hpp"

namespace platewaste {

// Per-class pixel counts pooled over one batch of ground-truth masks.
struct ClassFrequencies {
  std::vector<std::int64_t> f;
};

struct LossWeights {
  std::vector<double> w_hat;
  double epsilon = 1.0;
  double cap_ratio = 10.0;
};

struct LossValue {
  double loss = 0.0;
  Tensor4 grad;  // d loss / d logits; empty unless requested
};

inline constexpr double kDefaultLossEpsilon = 1.0;
inline constexpr double kDefaultCapRatio = 10.0;
// Log-probabilities are floored here so that a saturated softmax cannot
// produce an infinite loss.
inline constexpr double kLogProbFloor = -50.0;

ClassFrequencies batch_frequencies(std::span<const LabelMask> gt_batch);

// Inverse-frequency weights 1/(f+eps), capped at min(w)*cap_ratio, then
// rescaled to sum to C.
LossWeights capped_weights(const ClassFrequencies& freq, double epsilon = kDefaultLossEpsilon,
                           double cap_ratio = kDefaultCapRatio);

// Weighted pixel-wise softmax cross-entropy averaged over every pixel in the
// batch. Weights are treated as constants when differentiating.
// logits: (B, C, H, W); gt_batch: B masks of H x W. Throws ShapeMismatch.
LossValue weighted_ce_loss(const Tensor4& logits, std::span<const LabelMask> gt_batch,
                           const LossWeights& weights, bool with_gradient);

}  // namespace platewaste
