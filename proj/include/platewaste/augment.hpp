#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "platewaste/image.hpp"
#include "platewaste/maskcore.hpp"

namespace platewaste {

// Geometric kinds move image and mask together; photometric kinds touch the
// image only.
enum class StepKind {
  kFlipH,
  kFlipV,
  kRot90,       // one of CW / CCW / 180, chosen uniformly
  kRotate,      // degrees in [lo, hi], positive is counter-clockwise
  kShear,       // percent in [lo, hi], drawn separately for x and y
  kHue,         // degrees
  kSaturation,  // percent change of S
  kBrightness,  // percent of full scale added to V
  kExposure,    // percent gain on RGB
  kBlur,        // Gaussian sigma in pixels, [0, hi]
};

std::string_view step_kind_name(StepKind kind);
StepKind parse_step_kind(std::string_view name);  // InvalidConfig on unknown names
bool is_geometric(StepKind kind);

inline constexpr double kDefaultStepProbability = 0.5;

struct AugmentationStep {
  StepKind kind = StepKind::kFlipH;
  double lo = 0.0;
  double hi = 0.0;
  double probability = kDefaultStepProbability;
  friend bool operator==(const AugmentationStep&, const AugmentationStep&) = default;
};

struct AugmentationSpec {
  std::string food_type;  // when it names a built-in preset, ranges must stay inside it
  std::vector<AugmentationStep> steps;

  // InvalidConfig with the offending step index.
  void validate() const;
  friend bool operator==(const AugmentationSpec&, const AugmentationSpec&) = default;
};

struct AppliedOp {
  StepKind kind = StepKind::kFlipH;
  double a = 0.0;  // rot90: quarter turns (1 = CW, 2 = 180, 3 = CCW); shear: x factor in percent
  double b = 0.0;  // shear: y factor in percent
  friend bool operator==(const AppliedOp&, const AppliedOp&) = default;
};

struct AugmentationPlan {
  std::vector<AppliedOp> ops;
  bool photometric_only() const;
  friend bool operator==(const AugmentationPlan&, const AugmentationPlan&) = default;
};

// Pure in (spec, seed, index).
AugmentationPlan sample_plan(const AugmentationSpec& spec, std::uint64_t seed, std::uint64_t index);

struct LabeledImage {
  Image image;
  LabelMask mask;
  friend bool operator==(const LabeledImage&, const LabeledImage&) = default;
};

// Throws DimensionMismatch when image and mask sizes differ.
LabeledImage apply(const AugmentationPlan& plan, const Image& image, const LabelMask& mask);

struct ExpandOptions {
  int multiplier = 3;
  bool include_original = true;  // copy 0 of every source is untouched
};

// multiplier outputs per source, grouped by source in input order.
std::vector<LabeledImage> expand_training_set(const std::vector<LabeledImage>& train,
                                              const AugmentationSpec& spec,
                                              const ExpandOptions& options, std::uint64_t seed);

struct AugmentPreset {
  std::string food_type;
  AugmentationSpec spec;
  int test_size = 0;
  int train_size = 0;  // before expansion
};

const std::vector<AugmentPreset>& builtin_presets();
// InvalidConfig for unknown names.
const AugmentPreset& augment_preset(std::string_view food_type);

nlohmann::json to_json(const AugmentationSpec& spec);
nlohmann::json to_json(const AugmentationPlan& plan);
// Accepts either {"preset": name} or {"food_type": ..., "steps": [...]}.
AugmentationSpec augmentation_spec_from_json(const nlohmann::json& j);

}  // namespace platewaste
