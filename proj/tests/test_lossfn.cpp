#include <gtest/gtest.h>

#include <cmath>

#include "platewaste/error.hpp"
#include "platewaste/lossfn.hpp"
#include "test_support.hpp"

namespace platewaste {
namespace {

double max_over_min(const std::vector<double>& w) {
  return *std::max_element(w.begin(), w.end()) / *std::min_element(w.begin(), w.end());
}

TEST(CappedWeights, HandEvaluatedCase) {
  const LossWeights w = capped_weights({{990, 10}}, 1e-9, 10.0);
  EXPECT_NEAR(w.w_hat[0], 2.0 / 11.0, 1e-4);
  EXPECT_NEAR(w.w_hat[1], 20.0 / 11.0, 1e-4);
  EXPECT_EQ(w.w_hat[0] + w.w_hat[1], 2.0);
  EXPECT_NEAR(max_over_min(w.w_hat), 10.0, 1e-9);
}

TEST(CappedWeights, SumAndCapInvariantsOnRandomFrequencies) {
  Rng rng(4);
  for (int t = 0; t < 5000; ++t) {
    const int c = 2 + static_cast<int>(rng.below(7));
    ClassFrequencies f;
    for (int k = 0; k < c; ++k) {
      // Mix of absent, rare and dominant classes.
      const auto kind = rng.below(3);
      f.f.push_back(kind == 0 ? 0 : static_cast<std::int64_t>(rng.below(kind == 1 ? 50 : 200000)));
    }
    const double eps = rng.uniform(0.01, 2.0);
    const double cap = rng.uniform(1.0, 20.0);
    const LossWeights w = capped_weights(f, eps, cap);
    double s = 0.0;
    for (double x : w.w_hat) s += x;
    ASSERT_EQ(s, static_cast<double>(c));
    const double lo = *std::min_element(w.w_hat.begin(), w.w_hat.end());
    const double hi = *std::max_element(w.w_hat.begin(), w.w_hat.end());
    ASSERT_LE(hi, lo * cap);
    ASSERT_GT(lo, 0.0);
  }
}

TEST(CappedWeights, AbsentClassHitsTheCap) {
  for (double eps : {1e-6, 0.5, 1.0, 3.0}) {
    const LossWeights w = capped_weights({{65536, 0}}, eps, 10.0);
    EXPECT_NEAR(w.w_hat[1] / w.w_hat[0], 10.0, 1e-9);
    EXPECT_EQ(w.w_hat[0] + w.w_hat[1], 2.0);
  }
}

TEST(CappedWeights, ScaleInvariantAsEpsilonVanishes) {
  Rng rng(6);
  for (int t = 0; t < 200; ++t) {
    ClassFrequencies f;
    const int c = 2 + static_cast<int>(rng.below(5));
    for (int k = 0; k < c; ++k) f.f.push_back(1 + static_cast<std::int64_t>(rng.below(5000)));
    const auto lo = *std::min_element(f.f.begin(), f.f.end());
    const std::int64_t scale = 1 + static_cast<std::int64_t>(rng.below(50));
    ClassFrequencies g = f;
    for (auto& x : g.f) x *= scale;
    const LossWeights a = capped_weights(f, 1e-12 * static_cast<double>(lo), 10.0);
    const LossWeights b = capped_weights(g, 1e-12 * static_cast<double>(lo), 10.0);
    for (int k = 0; k < c; ++k) EXPECT_NEAR(a.w_hat[k], b.w_hat[k], 1e-6);
  }
}

TEST(CappedWeights, BalancedFrequenciesGiveUnitWeights) {
  const LossWeights w = capped_weights({{500, 500, 500}});
  for (double x : w.w_hat) EXPECT_EQ(x, 1.0);
}

TEST(CappedWeights, RejectsBadArguments) {
  EXPECT_THROW(capped_weights({{1, 2}}, 0.0, 10.0), Error);
  EXPECT_THROW(capped_weights({{1, 2}}, 1.0, 0.5), Error);
  EXPECT_THROW(capped_weights({{}}), Error);
}

TEST(WeightedCe, UniformLogitsGiveLn2) {
  Rng rng(8);
  std::vector<LabelMask> gt;
  std::vector<int> v(16);
  for (int i = 0; i < 16; ++i) v[static_cast<std::size_t>(i)] = i % 2;
  gt.push_back(testing::mask_from(4, 4, 2, v));
  const LossWeights w = capped_weights(batch_frequencies(gt));
  const Tensor4 logits(1, 2, 4, 4, 0.3);
  EXPECT_NEAR(weighted_ce_loss(logits, gt, w, false).loss, std::log(2.0), 1e-9);
}

TEST(WeightedCe, StrongMarginDrivesLossToZero) {
  std::vector<LabelMask> gt = {testing::mask_from(2, 1, 2, {0, 1})};
  Tensor4 logits(1, 2, 1, 2);
  logits(0, 0, 0, 0) = 40.0;
  logits(0, 1, 0, 1) = 40.0;
  const LossWeights w = capped_weights(batch_frequencies(gt));
  EXPECT_LT(weighted_ce_loss(logits, gt, w, false).loss, 1e-15);
}

TEST(WeightedCe, ShapeChecks) {
  std::vector<LabelMask> gt = {LabelMask(3, 3, 2)};
  const LossWeights w{{1.0, 1.0}};
  EXPECT_THROW(weighted_ce_loss(Tensor4(2, 2, 3, 3), gt, w, false), Error);
  EXPECT_THROW(weighted_ce_loss(Tensor4(1, 3, 3, 3), gt, w, false), Error);
  EXPECT_THROW(weighted_ce_loss(Tensor4(1, 2, 4, 3), gt, w, false), Error);
}

TEST(WeightedCe, PermutationEquivariant) {
  Rng rng(12);
  const int h = 3, wd = 5, c = 3;
  std::vector<LabelMask> gt = {testing::random_mask(wd, h, c, rng)};
  Tensor4 logits(1, c, h, wd);
  for (auto& x : logits.span()) x = rng.normal();
  const LossWeights w = capped_weights(batch_frequencies(gt));
  const double base = weighted_ce_loss(logits, gt, w, false).loss;
  // Reverse pixel order in both.
  std::vector<Label> rev(gt[0].labels().rbegin(), gt[0].labels().rend());
  std::vector<LabelMask> gt2 = {LabelMask(wd, h, c, rev)};
  Tensor4 l2(1, c, h, wd);
  const std::size_t plane = static_cast<std::size_t>(h * wd);
  for (int k = 0; k < c; ++k) {
    for (std::size_t i = 0; i < plane; ++i) l2.channel(0, k)[i] = logits.channel(0, k)[plane - 1 - i];
  }
  EXPECT_NEAR(weighted_ce_loss(l2, gt2, w, false).loss, base, 1e-14);
}

// Central differences against the analytic gradient, weights held fixed.
TEST(WeightedCe, GradientMatchesFiniteDifferences) {
  Rng rng(21);
  int checked = 0;
  for (int t = 0; t < 120; ++t) {
    const int n = 1 + static_cast<int>(rng.below(2));
    const int c = 2 + static_cast<int>(rng.below(3));
    const int h = 1 + static_cast<int>(rng.below(4));
    const int wd = 1 + static_cast<int>(rng.below(4));
    std::vector<LabelMask> gt;
    for (int b = 0; b < n; ++b) gt.push_back(testing::random_mask(wd, h, c, rng));
    Tensor4 logits(n, c, h, wd);
    for (auto& x : logits.span()) x = 2.0 * rng.normal();
    const LossWeights w = capped_weights(batch_frequencies(gt));
    const LossValue lv = weighted_ce_loss(logits, gt, w, true);
    double num = 0.0, den_a = 0.0, den_n = 0.0;
    for (std::size_t i = 0; i < logits.size(); ++i) {
      const double step = 1e-5;
      Tensor4 plus = logits;
      Tensor4 minus = logits;
      plus.data()[i] += step;
      minus.data()[i] -= step;
      const double fd = (weighted_ce_loss(plus, gt, w, false).loss -
                         weighted_ce_loss(minus, gt, w, false).loss) / (2.0 * step);
      const double an = lv.grad.data()[i];
      num += (fd - an) * (fd - an);
      den_a += an * an;
      den_n += fd * fd;
    }
    const double rel = std::sqrt(num) / std::max(std::sqrt(std::max(den_a, den_n)), 1e-300);
    EXPECT_LT(rel, 1e-4) << "instance " << t;
    ++checked;
  }
  EXPECT_GE(checked, 100);
}

}  // namespace
}  // namespace platewaste
