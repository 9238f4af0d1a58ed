#include "platewaste/lossfn.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <string>

#include "platewaste/error.hpp"

namespace platewaste {

ClassFrequencies batch_frequencies(std::span<const LabelMask> gt_batch) {
  if (gt_batch.empty()) throw Error(ErrorCode::kEmptyInput, "empty batch");
  ClassCounts pooled;
  for (const auto& m : gt_batch) {
    if (m.num_classes() != gt_batch.front().num_classes()) {
      throw Error(ErrorCode::kDimensionMismatch, "batch masks disagree on num_classes");
    }
    pooled += class_pixel_counts(m);
  }
  return {std::move(pooled.counts)};
}

LossWeights capped_weights(const ClassFrequencies& freq, double epsilon, double cap_ratio) {
  if (!(epsilon > 0.0)) throw Error(ErrorCode::kInvalidArgument, "epsilon must be > 0");
  if (!(cap_ratio >= 1.0)) throw Error(ErrorCode::kInvalidArgument, "cap ratio must be >= 1");
  if (freq.f.empty()) throw Error(ErrorCode::kEmptyInput, "no classes");
  if (freq.f.size() > 4096) throw Error(ErrorCode::kInvalidArgument, "more than 4096 classes");

  std::vector<double> w(freq.f.size());
  for (std::size_t c = 0; c < w.size(); ++c) {
    w[c] = 1.0 / (static_cast<double>(freq.f[c]) + epsilon);
  }
  const double cap = *std::min_element(w.begin(), w.end()) * cap_ratio;
  double sum = 0.0;
  for (double& x : w) {
    x = std::min(x, cap);
    sum += x;
  }
  const double target = static_cast<double>(w.size());
  const double scale = target / sum;
  for (double& x : w) x *= scale;

  // Snap to multiples of 2^-40 so every partial sum is exact (C stays far
  // below 2^12), then settle the rounding residual in whole units: extra
  // units go to the smallest entry, surplus comes off the largest. Both moves
  // can only tighten max/min, and the sum is exactly C in any order.
  constexpr double kQuantum = 0x1p-40;
  std::vector<std::int64_t> units(w.size());
  for (std::size_t c = 0; c < w.size(); ++c) units[c] = std::llround(w[c] / kQuantum);
  const std::int64_t lo_units = *std::min_element(units.begin(), units.end());
  const double cap_exact = std::floor(static_cast<double>(lo_units) * cap_ratio);
  const std::int64_t cap_units =
      cap_exact < 0x1p62 ? static_cast<std::int64_t>(cap_exact) : (std::int64_t{1} << 62);
  std::int64_t residual = std::llround(target / kQuantum);
  for (auto& u : units) {
    u = std::min(u, cap_units);
    residual -= u;
  }
  for (; residual > 0; --residual) ++*std::min_element(units.begin(), units.end());
  for (; residual < 0; ++residual) --*std::max_element(units.begin(), units.end());
  for (std::size_t c = 0; c < w.size(); ++c) w[c] = static_cast<double>(units[c]) * kQuantum;
  return {std::move(w), epsilon, cap_ratio};
}

LossValue weighted_ce_loss(const Tensor4& logits, std::span<const LabelMask> gt_batch,
                           const LossWeights& weights, bool with_gradient) {
  const Shape4& s = logits.shape();
  if (static_cast<std::size_t>(s.n) != gt_batch.size()) {
    throw Error(ErrorCode::kShapeMismatch, "logits batch " + std::to_string(s.n) + " vs " +
                                               std::to_string(gt_batch.size()) + " masks");
  }
  if (static_cast<std::size_t>(s.c) != weights.w_hat.size()) {
    throw Error(ErrorCode::kShapeMismatch, "logits have " + std::to_string(s.c) +
                                               " channels, weights " +
                                               std::to_string(weights.w_hat.size()));
  }
  for (const auto& m : gt_batch) {
    if (m.width() != s.w || m.height() != s.h || m.num_classes() != s.c) {
      throw Error(ErrorCode::kShapeMismatch, "mask " + std::to_string(m.width()) + "x" +
                                                 std::to_string(m.height()) +
                                                 " does not match logits " + s.str());
    }
  }

  LossValue out;
  if (with_gradient) out.grad = Tensor4(s);
  const std::size_t plane = logits.plane();
  const double inv_n = 1.0 / static_cast<double>(static_cast<std::size_t>(s.n) * plane);
  std::vector<double> prob(static_cast<std::size_t>(s.c));

  double total = 0.0;
  for (int b = 0; b < s.n; ++b) {
    const auto labels = gt_batch[static_cast<std::size_t>(b)].labels();
    const double* z = logits.sample(b);
    double* g = with_gradient ? out.grad.sample(b) : nullptr;
    double image_sum = 0.0;
    for (std::size_t i = 0; i < plane; ++i) {
      double zmax = z[i];
      for (int c = 1; c < s.c; ++c) zmax = std::max(zmax, z[c * plane + i]);
      double denom = 0.0;
      for (int c = 0; c < s.c; ++c) {
        prob[c] = std::exp(z[c * plane + i] - zmax);
        denom += prob[c];
      }
      const int y = labels[i];
      const double log_p = std::max(z[y * plane + i] - zmax - std::log(denom), kLogProbFloor);
      const double w = weights.w_hat[y];
      image_sum -= w * log_p;
      if (g) {
        const double scale = w * inv_n;
        for (int c = 0; c < s.c; ++c) {
          g[c * plane + i] = scale * (prob[c] / denom - (c == y ? 1.0 : 0.0));
        }
      }
    }
    total += image_sum;
  }
  out.loss = total * inv_n;
  return out;
}

}  // namespace platewaste
