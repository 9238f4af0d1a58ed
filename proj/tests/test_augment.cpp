#include <gtest/gtest.h>

#include "platewaste/augment.hpp"
#include "platewaste/error.hpp"
#include "test_support.hpp"

namespace platewaste {
namespace {

using testing::random_mask;

Image random_image(int w, int h, Rng& rng) {
  Image img(w, h);
  for (auto& v : img.data()) v = static_cast<float>(rng.uniform());
  return img;
}

AugmentationSpec only(StepKind k, double lo = 0.0, double hi = 0.0, double p = 1.0) {
  AugmentationSpec s;
  s.steps = {{k, lo, hi, p}};
  return s;
}

TEST(Augment, PlansArePureInSeedAndIndex) {
  const AugmentationSpec& spec = augment_preset("Fesenjan").spec;
  for (std::uint64_t i = 0; i < 50; ++i) {
    EXPECT_EQ(sample_plan(spec, 9, i), sample_plan(spec, 9, i));
  }
  int differ = 0;
  for (std::uint64_t i = 0; i < 50; ++i) differ += sample_plan(spec, 9, i) != sample_plan(spec, 10, i);
  EXPECT_GT(differ, 25);
}

TEST(Augment, EmptyPlanIsIdentity) {
  Rng rng(1);
  const Image img = random_image(9, 7, rng);
  const LabelMask m = random_mask(9, 7, 3, rng);
  const LabeledImage out = apply({}, img, m);
  EXPECT_EQ(out.image, img);
  EXPECT_EQ(out.mask, m);
}

TEST(Augment, FlipsAndQuarterTurnsPreserveCountsAndInvert) {
  Rng rng(2);
  const Image img = random_image(8, 5, rng);
  const LabelMask m = random_mask(8, 5, 4, rng);
  const auto counts = class_pixel_counts(m).counts;
  for (double turns : {1.0, 2.0, 3.0}) {
    const LabeledImage r = apply({{{StepKind::kRot90, turns, 0.0}}}, img, m);
    EXPECT_EQ(class_pixel_counts(r.mask).counts, counts);
    if (turns != 2.0) {
      EXPECT_EQ(r.mask.width(), 5);
      EXPECT_EQ(r.mask.height(), 8);
    }
    // Four quarter turns of the same kind come back home.
    const AugmentationPlan four{{{StepKind::kRot90, turns, 0.0}, {StepKind::kRot90, turns, 0.0},
                                 {StepKind::kRot90, turns, 0.0}, {StepKind::kRot90, turns, 0.0}}};
    const LabeledImage back = apply(four, img, m);
    EXPECT_EQ(back.mask, m);
    EXPECT_EQ(back.image, img);
  }
  for (StepKind k : {StepKind::kFlipH, StepKind::kFlipV}) {
    const LabeledImage once = apply({{{k, 0.0, 0.0}}}, img, m);
    EXPECT_EQ(class_pixel_counts(once.mask).counts, counts);
    EXPECT_NE(once.mask, m);
    const LabeledImage twice = apply({{{k, 0.0, 0.0}, {k, 0.0, 0.0}}}, img, m);
    EXPECT_EQ(twice.mask, m);
    EXPECT_EQ(twice.image, img);
  }
  // Horizontal flip moves pixel (x, y) to (w-1-x, y).
  const LabeledImage fh = apply({{{StepKind::kFlipH, 0.0, 0.0}}}, img, m);
  EXPECT_EQ(fh.mask.at(7, 2), m.at(0, 2));
  EXPECT_EQ(fh.image.at(1, 7, 2), img.at(1, 0, 2));
}

TEST(Augment, PhotometricPlansNeverTouchMasks) {
  Rng rng(3);
  const Image img = random_image(12, 12, rng);
  const LabelMask m = random_mask(12, 12, 3, rng);
  AugmentationSpec spec;
  spec.steps = {{StepKind::kHue, -20, 20}, {StepKind::kSaturation, -20, 20},
                {StepKind::kBrightness, -15, 15}, {StepKind::kExposure, -10, 10},
                {StepKind::kBlur, 0, 1.5}};
  for (std::uint64_t i = 0; i < 200; ++i) {
    const AugmentationPlan plan = sample_plan(spec, 4, i);
    ASSERT_TRUE(plan.photometric_only());
    const LabeledImage out = apply(plan, img, m);
    ASSERT_EQ(out.mask, m);
    for (float v : out.image.data()) {
      ASSERT_GE(v, 0.0f);
      ASSERT_LE(v, 1.0f);
    }
  }
}

TEST(Augment, GeometricWarpsKeepLabelsValid) {
  Rng rng(5);
  const Image img = random_image(16, 16, rng);
  const LabelMask m = random_mask(16, 16, 5, rng);
  AugmentationSpec spec;
  spec.steps = {{StepKind::kRotate, -30, 30, 1.0}, {StepKind::kShear, -15, 15, 1.0}};
  for (std::uint64_t i = 0; i < 100; ++i) {
    const LabeledImage out = apply(sample_plan(spec, 1, i), img, m);
    ASSERT_EQ(out.mask.num_classes(), 5);
    ASSERT_EQ(out.mask.width(), 16);
    for (Label l : out.mask.labels()) ASSERT_LT(l, 5);
  }
}

TEST(Augment, StepProbabilityZeroAndOne) {
  for (std::uint64_t i = 0; i < 20; ++i) {
    EXPECT_TRUE(sample_plan(only(StepKind::kFlipH, 0, 0, 0.0), 1, i).ops.empty());
    EXPECT_EQ(sample_plan(only(StepKind::kFlipH, 0, 0, 1.0), 1, i).ops.size(), 1u);
    const auto r = sample_plan(only(StepKind::kRotate, -15, 15), 1, i).ops.at(0);
    EXPECT_GE(r.a, -15.0);
    EXPECT_LE(r.a, 15.0);
  }
}

TEST(Augment, ExpansionTriplesAdasPolo) {
  const AugmentPreset& p = augment_preset("AdasPolo");
  EXPECT_EQ(p.train_size, 264);
  Rng rng(6);
  std::vector<LabeledImage> train;
  for (int i = 0; i < p.train_size; ++i) {
    train.push_back({random_image(4, 4, rng), random_mask(4, 4, 3, rng)});
  }
  const auto out = expand_training_set(train, p.spec, {}, 8);
  ASSERT_EQ(out.size(), 792u);
  for (std::size_t i = 0; i < train.size(); ++i) EXPECT_EQ(out[3 * i], train[i]);
  const auto again = expand_training_set(train, p.spec, {}, 8);
  EXPECT_EQ(out, again);
  ExpandOptions no_orig;
  no_orig.include_original = false;
  no_orig.multiplier = 2;
  EXPECT_EQ(expand_training_set(train, p.spec, no_orig, 8).size(), 528u);
}

TEST(Augment, PresetsAndValidation) {
  ASSERT_EQ(builtin_presets().size(), 5u);
  for (const auto& p : builtin_presets()) {
    EXPECT_NO_THROW(p.spec.validate());
    EXPECT_EQ(augmentation_spec_from_json(to_json(p.spec)), p.spec);
  }
  EXPECT_THROW(augment_preset("Pizza"), Error);
  EXPECT_THROW(parse_step_kind("twirl"), Error);
  AugmentationSpec bad = only(StepKind::kRotate, 10, -10);
  EXPECT_THROW(bad.validate(), Error);
  AugmentationSpec too_wide = augment_preset("AdasPolo").spec;
  too_wide.steps[3].hi = 45;  // rotate beyond the preset range
  EXPECT_THROW(too_wide.validate(), Error);
  Rng rng(7);
  EXPECT_THROW(apply({}, random_image(4, 4, rng), random_mask(5, 4, 2, rng)), Error);
}

TEST(Augment, DegenerateRangesGiveFixedPlans) {
  AugmentationSpec spec;
  spec.steps = {{StepKind::kRotate, 7, 7, 1.0}, {StepKind::kBrightness, -4, -4, 1.0},
                {StepKind::kShear, 3, 3, 1.0}};
  const AugmentationPlan p = sample_plan(spec, 1, 0);
  for (std::uint64_t i = 1; i < 20; ++i) EXPECT_EQ(sample_plan(spec, 2 + i, i), p);
  ASSERT_EQ(p.ops.size(), 3u);
  EXPECT_EQ(p.ops[0].a, 7.0);
  EXPECT_EQ(p.ops[1].a, -4.0);
  EXPECT_EQ(p.ops[2].a, 3.0);
  EXPECT_EQ(p.ops[2].b, 3.0);
}

TEST(Augment, QuarterTurnsComposeToIdentity) {
  Rng rng(9);
  const Image img = random_image(7, 7, rng);
  const LabelMask m = random_mask(7, 7, 3, rng);
  const AugmentationPlan plan{{{StepKind::kRot90, 1.0, 0.0}, {StepKind::kRot90, 1.0, 0.0},
                               {StepKind::kRot90, 2.0, 0.0}}};
  const LabeledImage out = apply(plan, img, m);
  EXPECT_EQ(out.mask, m);
  EXPECT_EQ(out.image, img);
}

TEST(Augment, MultiplierOneKeepsTheDataset) {
  Rng rng(10);
  std::vector<LabeledImage> train;
  for (int i = 0; i < 5; ++i) train.push_back({random_image(6, 6, rng), random_mask(6, 6, 2, rng)});
  ExpandOptions one;
  one.multiplier = 1;
  EXPECT_EQ(expand_training_set(train, augment_preset("Fesenjan").spec, one, 3), train);
}

}  // namespace
}  // namespace platewaste
