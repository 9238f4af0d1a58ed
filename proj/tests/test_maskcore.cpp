#include <gtest/gtest.h>

#include "platewaste/error.hpp"
#include "platewaste/maskcore.hpp"
#include "test_support.hpp"

namespace platewaste {
namespace {

using testing::mask_from;
using testing::random_mask;

TEST(LabelMask, RejectsOutOfRangeLabels) {
  EXPECT_THROW(mask_from(2, 1, 2, {0, 2}), Error);
  try {
    mask_from(2, 1, 3, {0, 7});
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kLabelOutOfRange);
  }
  LabelMask m(2, 2, 3);
  EXPECT_THROW(m.set(0, 0, 3), Error);
  m.set(1, 1, 2);
  EXPECT_EQ(m.at(1, 1), 2);
}

TEST(ClassCounts, MatchesBruteForceHistogram) {
  Rng rng(11);
  for (int trial = 0; trial < 50; ++trial) {
    const int w = 1 + static_cast<int>(rng.below(40));
    const int h = 1 + static_cast<int>(rng.below(40));
    const int c = 2 + static_cast<int>(rng.below(5));
    const LabelMask m = random_mask(w, h, c, rng);
    std::vector<std::int64_t> expect(static_cast<std::size_t>(c), 0);
    for (int y = 0; y < h; ++y) {
      for (int x = 0; x < w; ++x) ++expect[m.at(x, y)];
    }
    const ClassCounts got = class_pixel_counts(m);
    EXPECT_EQ(got.counts, expect);
    EXPECT_EQ(got.total(), static_cast<std::int64_t>(w) * h);
  }
}

TEST(Proportions, SumToOne) {
  Rng rng(5);
  const LabelMask m = random_mask(17, 9, 4, rng);
  const Proportions p = class_proportions(m);
  double s = 0.0;
  for (double v : p.values) s += v;
  EXPECT_NEAR(s, 1.0, 1e-12);
  EXPECT_THROW(proportions_from_counts(ClassCounts{{0, 0}}), Error);
}

TEST(Confusion, MatchesPairwiseCount) {
  Rng rng(3);
  for (int trial = 0; trial < 30; ++trial) {
    const int c = 2 + static_cast<int>(rng.below(4));
    const LabelMask p = random_mask(13, 7, c, rng);
    const LabelMask g = random_mask(13, 7, c, rng);
    const ConfusionCounts cc = confusion_counts(p, g);
    for (int k = 0; k < c; ++k) {
      std::int64_t tp = 0, fp = 0, fn = 0;
      for (int y = 0; y < 7; ++y) {
        for (int x = 0; x < 13; ++x) {
          const bool pk = p.at(x, y) == k;
          const bool gk = g.at(x, y) == k;
          tp += pk && gk;
          fp += pk && !gk;
          fn += !pk && gk;
        }
      }
      EXPECT_EQ(cc.tp[static_cast<std::size_t>(k)], tp);
      EXPECT_EQ(cc.fp[static_cast<std::size_t>(k)], fp);
      EXPECT_EQ(cc.fn[static_cast<std::size_t>(k)], fn);
    }
    EXPECT_EQ(cc.total_pixels, 91);
  }
}

TEST(Confusion, ShapeDisagreementThrows) {
  try {
    confusion_counts(LabelMask(2, 2, 2), LabelMask(3, 2, 2));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kDimensionMismatch);
  }
  EXPECT_THROW(confusion_counts(LabelMask(2, 2, 2), LabelMask(2, 2, 3)), Error);
}

TEST(ClassCounts, SmallExamples) {
  EXPECT_EQ(class_pixel_counts(mask_from(2, 2, 3, {0, 1, 1, 2})).counts,
            (std::vector<std::int64_t>{1, 2, 1}));
  EXPECT_EQ(class_pixel_counts(LabelMask(256, 256, 2)).counts, (std::vector<std::int64_t>{65536, 0}));
  EXPECT_EQ(class_proportions(mask_from(2, 2, 2, {0, 0, 1, 1})).values, (std::vector<double>{0.5, 0.5}));
  EXPECT_EQ(class_proportions(LabelMask(256, 256, 2)).values, (std::vector<double>{1.0, 0.0}));
}

TEST(Confusion, TotalDisagreement) {
  const ConfusionCounts cc = confusion_counts(mask_from(2, 2, 2, {1, 1, 1, 1}), LabelMask(2, 2, 2));
  EXPECT_EQ(cc.tp, (std::vector<std::int64_t>{0, 0}));
  EXPECT_EQ(cc.fp, (std::vector<std::int64_t>{0, 4}));
  EXPECT_EQ(cc.fn, (std::vector<std::int64_t>{4, 0}));
  Rng rng(8);
  const LabelMask m = random_mask(6, 6, 3, rng);
  const ConfusionCounts same = confusion_counts(m, m);
  for (std::size_t c = 0; c < 3; ++c) {
    EXPECT_EQ(same.fp[c], 0);
    EXPECT_EQ(same.fn[c], 0);
  }
}

}  // namespace
}  // namespace platewaste
