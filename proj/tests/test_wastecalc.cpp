#include <gtest/gtest.h>

#include <cmath>
#include <sstream>

#include "platewaste/dataio.hpp"
#include "platewaste/error.hpp"
#include "platewaste/wastecalc.hpp"
#include "test_support.hpp"

namespace platewaste {
namespace {

// 10-pixel strip with k pixels of class 1.
LabelMask strip(int k, int classes = 2) {
  std::vector<int> v(10, 0);
  for (int i = 0; i < k; ++i) v[static_cast<std::size_t>(i)] = 1;
  return testing::mask_from(10, 1, classes, v);
}

TEST(EatingRate, HandComputedReport) {
  const std::vector<LabelMask> pre = {strip(4), strip(4)};
  const std::vector<LabelMask> post = {strip(1), strip(0)};
  const std::vector<std::string> names = {"background", "rice"};
  const WasteReport r = waste_report("demo", names, pre, post);
  ASSERT_EQ(r.rows.size(), 1u);
  EXPECT_DOUBLE_EQ(r.rows[0].pre_avg, 0.4);
  EXPECT_DOUBLE_EQ(r.rows[0].post_avg, 0.05);
  // Dishes eat 75% and 100%.
  EXPECT_DOUBLE_EQ(r.rows[0].eating_rate, 87.5);
  EXPECT_DOUBLE_EQ(r.rows[0].remaining_rate, 12.5);
}

TEST(EatingRate, PooledNotPerImageBenchmark) {
  // Different plate sizes: pooled share is 5/30, the mean of shares is 0.35.
  const std::vector<LabelMask> pre = {testing::mask_from(20, 1, 2, std::vector<int>(20, 0)),
                                      strip(5)};
  const PreBenchmark b = pooled_pre_benchmark(pre);
  EXPECT_DOUBLE_EQ(b.values[1], 5.0 / 30.0);
}

TEST(EatingRate, ZeroBenchmarkAndEmptyInputs) {
  try {
    eating_rate(0.0, 0.1);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kZeroBenchmark);
  }
  const std::vector<LabelMask> none;
  EXPECT_THROW(pooled_pre_benchmark(none), Error);
  const std::vector<std::string> names = {"background", "x", "y"};
  const std::vector<LabelMask> pre = {strip(3, 3)};  // class 2 never served
  const std::vector<LabelMask> post = {strip(1, 3)};
  try {
    waste_report("demo", names, pre, post);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kZeroBenchmark);
  }
}

TEST(EatingRate, ClampingOnlyAffectsOverServedDishes) {
  const std::vector<std::string> names = {"background", "rice"};
  const std::vector<LabelMask> pre = {strip(2)};
  const std::vector<LabelMask> post = {strip(4), strip(0)};
  WasteOptions clamp;
  WasteOptions raw;
  raw.clamp_eating_rate = false;
  const WasteReport a = waste_report("d", names, pre, post, clamp);
  const WasteReport b = waste_report("d", names, pre, post, raw);
  EXPECT_DOUBLE_EQ(a.rows[0].eating_rate, 50.0);   // (0 + 100) / 2
  EXPECT_DOUBLE_EQ(b.rows[0].eating_rate, 0.0);    // (-100 + 100) / 2
  EXPECT_DOUBLE_EQ(a.rows[0].raw_eating_rate, 0.0);
  EXPECT_DOUBLE_EQ(eating_rate(0.2, 0.1), 50.0);
  EXPECT_DOUBLE_EQ(eating_rate(0.2, 0.3), -50.0);
  EXPECT_DOUBLE_EQ(eating_rate(0.2, 0.3, true), 0.0);
}

TEST(EatingRate, MeanOfUnclampedRatesIsPooledRatio) {
  // Linearity: mean_j (b - p_j) / b == (b - mean_j p_j) / b.
  Rng rng(2);
  std::vector<LabelMask> pre;
  std::vector<LabelMask> post;
  for (int i = 0; i < 6; ++i) pre.push_back(testing::random_mask(20, 20, 3, rng));
  for (int i = 0; i < 9; ++i) post.push_back(testing::random_mask(20, 20, 3, rng));
  const std::vector<std::string> names = {"background", "a", "b"};
  WasteOptions raw;
  raw.clamp_eating_rate = false;
  const WasteReport r = waste_report("d", names, pre, post, raw);
  for (const auto& row : r.rows) {
    EXPECT_NEAR(row.eating_rate, 100.0 * (row.pre_avg - row.post_avg) / row.pre_avg, 1e-9);
  }
}

TEST(EatingRate, SmallExamples) {
  const std::vector<LabelMask> one = {testing::mask_from(5, 1, 2, {1, 1, 0, 0, 0})};
  EXPECT_EQ(pooled_pre_benchmark(one).values, (std::vector<double>{0.6, 0.4}));
  const std::vector<LabelMask> two = {strip(3), strip(5)};
  EXPECT_DOUBLE_EQ(pooled_pre_benchmark(two).values[1], 0.4);
  EXPECT_NEAR(eating_rate(0.399, 0.047), 88.2, 0.05);
  EXPECT_NEAR(eating_rate(0.085, 0.005), 94.1, 0.05);
  EXPECT_EQ(eating_rate(0.3, 0.3), 0.0);
  EXPECT_EQ(eating_rate(0.3, 0.0), 100.0);
  const std::vector<double> full = {100, 100};
  const std::vector<double> mixed = {80, 90, 100};
  EXPECT_EQ(mean_eating_rate(full), 100.0);
  EXPECT_EQ(mean_eating_rate(mixed), 90.0);
  EXPECT_NEAR(remaining_rate(88.2), 11.8, 1e-12);
  EXPECT_NEAR(remaining_rate(79.0), 21.0, 1e-12);
  EXPECT_EQ(remaining_rate(100.0), 0.0);
}

TEST(EatingRate, PostEqualToPreEatsNothing) {
  Rng rng(4);
  std::vector<LabelMask> pre;
  for (int i = 0; i < 4; ++i) pre.push_back(testing::random_mask(16, 16, 3, rng));
  const std::vector<std::string> names = {"background", "a", "b"};
  const WasteReport r = waste_report("d", names, pre, pre);
  for (const auto& row : r.rows) EXPECT_NEAR(row.eating_rate, 0.0, 10.0);
  // Same masks, raw rates: pooled means agree exactly so the mean rate is 0.
  WasteOptions raw;
  raw.clamp_eating_rate = false;
  for (const auto& row : waste_report("d", names, pre, pre, raw).rows) {
    EXPECT_NEAR(row.eating_rate, 0.0, 1e-9);
  }
}

TEST(EatingRate, GeneratorKnownProportions) {
  // Pre plates hold exactly 400 / 200 food pixels, post plates 40 / 50.
  std::vector<LabelMask> pre, post;
  for (int i = 0; i < 3; ++i) {
    pre.push_back(render_plate(40, {0, 400, 200}, BlobShape::kBlob, 0.0, 10 + i).mask);
    post.push_back(render_plate(40, {0, 40, 50}, BlobShape::kEllipse, 0.0, 20 + i).mask);
  }
  const std::vector<std::string> names = {"background", "a", "b"};
  const WasteReport r = waste_report("d", names, pre, post);
  EXPECT_NEAR(r.rows[0].eating_rate, 90.0, 0.1);
  EXPECT_NEAR(r.rows[1].eating_rate, 75.0, 0.1);
}

struct Expected {
  const char* food;
  std::vector<double> eating;
  std::vector<double> remaining;
};

TEST(WasteFixture, ReproducesSurveyRates) {
  // Reported per-class eating / remaining rates for the five dishes.
  const std::vector<Expected> table = {
      {"AdasPolo", {88.2}, {11.8}},
      {"CheloGoosht", {94.1, 79.0}, {5.9, 21.0}},
      {"Fesenjan", {81.9, 89.3}, {18.1, 10.7}},
      {"GheymeBademjan", {88.1, 79.9}, {11.9, 20.1}},
      {"ProteinFries", {78.1, 92.2}, {21.9, 7.8}},
  };
  const auto& targets = survey_waste_targets();
  ASSERT_EQ(targets.size(), table.size());
  for (std::size_t f = 0; f < table.size(); ++f) {
    const auto& t = targets[f];
    ASSERT_EQ(t.food_type, table[f].food);
    const auto samples = waste_fixture_samples(t, 64, 4, 4, 3);
    std::vector<LabelMask> pre;
    std::vector<LabelMask> post;
    for (const auto& s : samples) (s.stage == Stage::kPre ? pre : post).push_back(s.mask);
    const WasteReport r = waste_report(t.food_type, food_class_table(t.food_type), pre, post);
    for (std::size_t c = 0; c < r.rows.size(); ++c) {
      EXPECT_NEAR(r.rows[c].pre_avg, t.pre[c], 0.0005) << t.food_type;
      EXPECT_NEAR(r.rows[c].post_avg, t.post[c], 0.0005) << t.food_type;
      EXPECT_NEAR(r.rows[c].eating_rate, table[f].eating[c], 0.1) << t.food_type << " class " << c + 1;
      EXPECT_NEAR(r.rows[c].remaining_rate, table[f].remaining[c], 0.1) << t.food_type;
    }
  }
}

TEST(WasteCsv, FormatsRowsAndTotals) {
  WasteReport r;
  r.food_type = "AdasPolo";
  r.rows.push_back({1, "AdasPolo", 0.399, 0.047, 88.2206, 11.7794, 88.2206});
  r.total_pre = 0.399;
  r.total_post = 0.047;
  std::ostringstream os;
  write_waste_csv(os, std::span<const WasteReport>(&r, 1));
  EXPECT_EQ(os.str(),
            "food_type,class,pre_weighted_avg,post_weighted_avg,eating_rate,remaining_rate\n"
            "AdasPolo,1 / AdasPolo,0.399,0.047,88.2,11.8\n"
            "AdasPolo,Total,0.399,0.047,,\n");
}

}  // namespace
}  // namespace platewaste
