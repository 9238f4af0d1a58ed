#include <gtest/gtest.h>

#include <cmath>

#include "platewaste/error.hpp"
#include "platewaste/metrics.hpp"
#include "test_support.hpp"

namespace platewaste {
namespace {

using testing::mask_from;
using testing::random_mask;

TEST(Metrics, PerfectPredictionScoresOne) {
  Rng rng(1);
  const LabelMask g = random_mask(16, 16, 3, rng);
  const ImageMetrics m = image_metrics(g, g);
  EXPECT_EQ(m.pixel_accuracy, 1.0);
  for (const auto* per : {&m.iou, &m.dice, &m.dpa}) {
    for (std::size_t c = 0; c < 3; ++c) EXPECT_EQ(per->values[c], 1.0);
  }
}

TEST(Metrics, HandComputedCase) {
  // gt:   0 0 1 1      pred: 0 1 1 1
  const LabelMask g = mask_from(4, 1, 2, {0, 0, 1, 1});
  const LabelMask p = mask_from(4, 1, 2, {0, 1, 1, 1});
  const ConfusionCounts cc = confusion_counts(p, g);
  EXPECT_DOUBLE_EQ(pixel_accuracy(cc), 0.75);
  const auto iou = per_class_iou(cc);
  EXPECT_DOUBLE_EQ(iou.values[0], 0.5);
  EXPECT_DOUBLE_EQ(iou.values[1], 2.0 / 3.0);
  const auto dice = per_class_dice(cc);
  EXPECT_DOUBLE_EQ(dice.values[0], 2.0 / 3.0);
  EXPECT_DOUBLE_EQ(dice.values[1], 0.8);
  const auto dpa = per_class_dpa(class_pixel_counts(p), class_pixel_counts(g));
  EXPECT_DOUBLE_EQ(dpa.values[1], 0.75);
}

TEST(Metrics, AbsentClassIsUndefinedNotZero) {
  const LabelMask g = mask_from(3, 1, 3, {0, 1, 1});
  const ImageMetrics m = image_metrics(g, g);
  EXPECT_FALSE(m.iou.defined[2]);
  EXPECT_TRUE(m.iou.defined[1]);
  AggregationMode macro{Aggregation::kMacro, true};
  EXPECT_DOUBLE_EQ(aggregate(m.iou, m.gt_counts, macro), 1.0);
}

TEST(Metrics, WeightedAggregationUsesGroundTruthCounts) {
  PerClassMetric v{{0.0, 0.5, 1.0}, {true, true, true}};
  const ClassCounts gt{{100, 30, 10}};
  EXPECT_DOUBLE_EQ(aggregate(v, gt, {Aggregation::kWeighted, false}), (0.5 * 30 + 1.0 * 10) / 40.0);
  EXPECT_DOUBLE_EQ(aggregate(v, gt, {Aggregation::kMacro, false}), 0.75);
  EXPECT_DOUBLE_EQ(aggregate(v, gt, {Aggregation::kWeighted, true}), 25.0 / 140.0);
  const ClassCounts empty_food{{140, 0, 0}};
  try {
    aggregate(PerClassMetric{{1.0, 0.0, 0.0}, {true, false, false}}, empty_food,
              {Aggregation::kWeighted, false});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kNoDefinedClasses);
  }
}

TEST(Metrics, DpaAreaMismatchThrows) {
  try {
    per_class_dpa(ClassCounts{{3, 1}}, ClassCounts{{3, 2}});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kAreaMismatch);
  }
}

TEST(Metrics, BoundsOnRandomPairs) {
  Rng rng(9);
  for (int t = 0; t < 200; ++t) {
    const LabelMask p = random_mask(9, 5, 4, rng);
    const LabelMask g = random_mask(9, 5, 4, rng);
    const ImageMetrics m = image_metrics(p, g);
    EXPECT_GE(m.pixel_accuracy, 0.0);
    EXPECT_LE(m.pixel_accuracy, 1.0);
    for (std::size_t c = 0; c < 4; ++c) {
      if (!m.iou.defined[c]) continue;
      EXPECT_LE(m.iou.values[c], m.dice.values[c] + 1e-15);  // IoU <= Dice
      EXPECT_GE(m.dpa.values[c], 0.0);
      EXPECT_LE(m.dpa.values[c], 1.0);
    }
  }
}

TEST(Metrics, SummarizeAveragesPerImageAndSkipsEmptyPlates) {
  const LabelMask food = mask_from(2, 1, 2, {0, 1});
  const LabelMask empty = mask_from(2, 1, 2, {0, 0});
  const std::vector<ImageMetrics> per = {image_metrics(food, food), image_metrics(empty, empty),
                                         image_metrics(empty, food)};
  const MetricsReport r = summarize(per, {});
  EXPECT_EQ(r.num_images, 3);
  EXPECT_EQ(r.num_skipped, 1);
  EXPECT_DOUBLE_EQ(r.iou, 0.5);
  EXPECT_DOUBLE_EQ(r.pixel_accuracy, (1.0 + 1.0 + 0.5) / 3.0);
  EXPECT_THROW(summarize({}, {}), Error);
  const auto j = to_json(r);
  EXPECT_EQ(j["num_skipped"], 1);
}

TEST(Metrics, TranslatedDisjointFixture) {
  const auto fx = testing::translated_disjoint(20, 10, 6, 5);
  const ImageMetrics m = image_metrics(fx.pred, fx.gt);
  const AggregationMode mode;
  EXPECT_EQ(aggregate(m.dpa, m.gt_counts, mode), 1.0);
  EXPECT_EQ(aggregate(m.iou, m.gt_counts, mode), 0.0);
  EXPECT_EQ(aggregate(m.dice, m.gt_counts, mode), 0.0);
  EXPECT_DOUBLE_EQ(m.pixel_accuracy, fx.background_agreement);
  EXPECT_DOUBLE_EQ(m.pixel_accuracy, 140.0 / 200.0);
}

TEST(Metrics, DpaInvariantUnderCountPreservingShuffles) {
  Rng rng(31);
  for (int t = 0; t < 200; ++t) {
    const LabelMask g = random_mask(12, 9, 4, rng);
    const LabelMask p = random_mask(12, 9, 4, rng);
    std::vector<Label> shuffled(p.labels().begin(), p.labels().end());
    rng.shuffle(shuffled);
    const LabelMask ps(12, 9, 4, std::move(shuffled));
    const ImageMetrics a = image_metrics(p, g);
    const ImageMetrics b = image_metrics(ps, g);
    ASSERT_EQ(a.dpa.values, b.dpa.values);
    ASSERT_EQ(a.dpa.defined, b.dpa.defined);
  }
}

TEST(Metrics, SmallExamples) {
  // 100 pixels, 90 correct.
  std::vector<int> g(100, 0), p(100, 0);
  for (int i = 0; i < 10; ++i) p[static_cast<std::size_t>(i)] = 1;
  EXPECT_DOUBLE_EQ(pixel_accuracy(confusion_counts(mask_from(10, 10, 2, p), mask_from(10, 10, 2, g))), 0.9);
  EXPECT_EQ(pixel_accuracy(confusion_counts(mask_from(2, 1, 2, {1, 1}), mask_from(2, 1, 2, {0, 0}))), 0.0);

  // 100-pixel regions overlapping on 50.
  std::vector<int> a(300, 0), b(300, 0);
  for (int i = 0; i < 100; ++i) a[static_cast<std::size_t>(i)] = 1;
  for (int i = 50; i < 150; ++i) b[static_cast<std::size_t>(i)] = 1;
  const ConfusionCounts cc = confusion_counts(mask_from(300, 1, 2, a), mask_from(300, 1, 2, b));
  EXPECT_DOUBLE_EQ(per_class_iou(cc).values[1], 1.0 / 3.0);
  EXPECT_DOUBLE_EQ(per_class_dice(cc).values[1], 0.5);

  // Shares 30% vs 50%.
  EXPECT_DOUBLE_EQ(per_class_dpa(ClassCounts{{70, 30}}, ClassCounts{{50, 50}}).values[1], 0.8);

  const PerClassMetric half{{1.0, 0.0}, {true, true}};
  const ClassCounts gt{{900, 100}};
  EXPECT_DOUBLE_EQ(aggregate(half, gt, {Aggregation::kMacro, true}), 0.5);
  EXPECT_DOUBLE_EQ(aggregate(half, gt, {Aggregation::kWeighted, true}), 0.9);
  const PerClassMetric same{{0.3, 0.3, 0.3}, {true, true, true}};
  for (auto mode : {Aggregation::kMacro, Aggregation::kWeighted}) {
    EXPECT_DOUBLE_EQ(aggregate(same, ClassCounts{{5, 7, 11}}, {mode, true}), 0.3);
  }
  EXPECT_DOUBLE_EQ(aggregate(PerClassMetric{{0.1, 0.8}, {true, true}}, gt, {}), 0.8);
}

TEST(Metrics, DiceIouIdentity) {
  Rng rng(13);
  for (int t = 0; t < 100; ++t) {
    const ImageMetrics m = image_metrics(random_mask(8, 8, 3, rng), random_mask(8, 8, 3, rng));
    for (std::size_t c = 0; c < 3; ++c) {
      if (!m.iou.defined[c]) continue;
      const double iou = m.iou.values[c];
      EXPECT_NEAR(m.dice.values[c], 2.0 * iou / (1.0 + iou), 1e-14);
    }
  }
}

TEST(Metrics, ParseAggregation) {
  EXPECT_EQ(parse_aggregation("macro"), Aggregation::kMacro);
  EXPECT_EQ(parse_aggregation("weighted"), Aggregation::kWeighted);
  EXPECT_THROW(parse_aggregation("median"), Error);
}

}  // namespace
}  // namespace platewaste
