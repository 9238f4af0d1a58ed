#include "platewaste/augment.hpp"

#include <algorithm>
#include <array>
#include <cmath>

#include "platewaste/error.hpp"
#include "platewaste/rng.hpp"

namespace platewaste {

namespace {

constexpr std::array<std::pair<StepKind, std::string_view>, 10> kKindNames = {{
    {StepKind::kFlipH, "flip_h"},
    {StepKind::kFlipV, "flip_v"},
    {StepKind::kRot90, "rot90"},
    {StepKind::kRotate, "rotate"},
    {StepKind::kShear, "shear"},
    {StepKind::kHue, "hue"},
    {StepKind::kSaturation, "saturation"},
    {StepKind::kBrightness, "brightness"},
    {StepKind::kExposure, "exposure"},
    {StepKind::kBlur, "blur"},
}};

constexpr double kPi = 3.141592653589793;

}  // namespace

std::string_view step_kind_name(StepKind kind) {
  for (const auto& [k, name] : kKindNames) {
    if (k == kind) return name;
  }
  return "?";
}

StepKind parse_step_kind(std::string_view name) {
  for (const auto& [k, n] : kKindNames) {
    if (n == name) return k;
  }
  throw Error(ErrorCode::kInvalidConfig, "unknown augmentation step '" + std::string(name) + "'");
}

bool is_geometric(StepKind kind) {
  return kind == StepKind::kFlipH || kind == StepKind::kFlipV || kind == StepKind::kRot90 ||
         kind == StepKind::kRotate || kind == StepKind::kShear;
}

bool AugmentationPlan::photometric_only() const {
  return std::none_of(ops.begin(), ops.end(), [](const AppliedOp& op) { return is_geometric(op.kind); });
}

void AugmentationSpec::validate() const {
  const AugmentPreset* preset = nullptr;
  for (const auto& p : builtin_presets()) {
    if (p.food_type == food_type) preset = &p;
  }
  for (std::size_t i = 0; i < steps.size(); ++i) {
    const auto& s = steps[i];
    const std::string where = "augmentation.steps[" + std::to_string(i) + "]";
    if (!(s.probability >= 0.0 && s.probability <= 1.0)) {
      throw Error(ErrorCode::kInvalidConfig, where + ".probability must be in [0, 1]");
    }
    if (!(s.lo <= s.hi) || !std::isfinite(s.lo) || !std::isfinite(s.hi)) {
      throw Error(ErrorCode::kInvalidConfig, where + ": need finite lo <= hi");
    }
    if (s.kind == StepKind::kBlur && s.lo < 0.0) {
      throw Error(ErrorCode::kInvalidConfig, where + ": blur sigma cannot be negative");
    }
    if (s.kind == StepKind::kShear && std::max(std::fabs(s.lo), std::fabs(s.hi)) >= 50.0) {
      throw Error(ErrorCode::kInvalidConfig, where + ": shear beyond 50% is not supported");
    }
    if (preset == nullptr) continue;
    const auto it = std::find_if(preset->spec.steps.begin(), preset->spec.steps.end(),
                                 [&](const AugmentationStep& p) { return p.kind == s.kind; });
    if (it == preset->spec.steps.end()) {
      throw Error(ErrorCode::kInvalidConfig, where + ": " + std::string(step_kind_name(s.kind)) +
                                                 " is not part of the " + food_type + " pipeline");
    }
    if (s.lo < it->lo || s.hi > it->hi) {
      throw Error(ErrorCode::kInvalidConfig,
                  where + ": range exceeds the " + food_type + " bounds [" +
                      std::to_string(it->lo) + ", " + std::to_string(it->hi) + "]");
    }
  }
}

AugmentationPlan sample_plan(const AugmentationSpec& spec, std::uint64_t seed, std::uint64_t index) {
  Rng rng(mix_seed(seed, index));
  AugmentationPlan plan;
  for (const auto& s : spec.steps) {
    // Parameters are drawn even for skipped steps so that a step's draws do
    // not depend on whether earlier steps fired.
    const bool on = rng.bernoulli(s.probability);
    AppliedOp op;
    op.kind = s.kind;
    switch (s.kind) {
      case StepKind::kFlipH:
      case StepKind::kFlipV:
        break;
      case StepKind::kRot90:
        op.a = static_cast<double>(1 + rng.below(3));
        break;
      case StepKind::kShear:
        op.a = rng.uniform(s.lo, s.hi);
        op.b = rng.uniform(s.lo, s.hi);
        break;
      case StepKind::kBlur:
        op.a = rng.uniform(std::max(0.0, s.lo), s.hi);
        break;
      default:
        op.a = rng.uniform(s.lo, s.hi);
        break;
    }
    if (on) plan.ops.push_back(op);
  }
  return plan;
}

namespace {

// Generic inverse-mapped warp: dst pixel (x, y) samples src at map(x, y).
// Images use bilinear sampling, masks nearest-neighbour; outside is 0.
template <typename Map>
LabeledImage warp(const LabeledImage& in, int out_w, int out_h, Map&& map) {
  const int w = in.image.width();
  const int h = in.image.height();
  LabeledImage out{Image(out_w, out_h), LabelMask(out_w, out_h, in.mask.num_classes())};
  std::vector<Label> labels(static_cast<std::size_t>(out_w) * static_cast<std::size_t>(out_h), 0);
  for (int y = 0; y < out_h; ++y) {
    for (int x = 0; x < out_w; ++x) {
      const auto [sx, sy] = map(static_cast<double>(x), static_cast<double>(y));
      const long nx = std::lround(sx);
      const long ny = std::lround(sy);
      if (nx >= 0 && nx < w && ny >= 0 && ny < h) {
        labels[static_cast<std::size_t>(y) * out_w + x] =
            in.mask.at(static_cast<int>(nx), static_cast<int>(ny));
      }
      const double fx = std::floor(sx);
      const double fy = std::floor(sy);
      const double ax = sx - fx;
      const double ay = sy - fy;
      const int x0 = static_cast<int>(fx);
      const int y0 = static_cast<int>(fy);
      for (int c = 0; c < Image::kChannels; ++c) {
        double acc = 0.0;
        for (int dy = 0; dy <= 1; ++dy) {
          for (int dx = 0; dx <= 1; ++dx) {
            const int px = x0 + dx;
            const int py = y0 + dy;
            if (px < 0 || px >= w || py < 0 || py >= h) continue;
            const double wt = (dx ? ax : 1.0 - ax) * (dy ? ay : 1.0 - ay);
            if (wt == 0.0) continue;
            acc += wt * in.image.at(c, px, py);
          }
        }
        out.image.at(c, x, y) = static_cast<float>(acc);
      }
    }
  }
  out.mask = LabelMask(out_w, out_h, in.mask.num_classes(), std::move(labels));
  return out;
}

// Exact index permutations for flips and quarter turns.
template <typename Map>
LabeledImage permute(const LabeledImage& in, int out_w, int out_h, Map&& map) {
  LabeledImage out{Image(out_w, out_h), LabelMask()};
  std::vector<Label> labels(static_cast<std::size_t>(out_w) * static_cast<std::size_t>(out_h));
  for (int y = 0; y < out_h; ++y) {
    for (int x = 0; x < out_w; ++x) {
      const auto [sx, sy] = map(x, y);
      labels[static_cast<std::size_t>(y) * out_w + x] = in.mask.at(sx, sy);
      for (int c = 0; c < Image::kChannels; ++c) out.image.at(c, x, y) = in.image.at(c, sx, sy);
    }
  }
  out.mask = LabelMask(out_w, out_h, in.mask.num_classes(), std::move(labels));
  return out;
}

struct Hsv {
  double h, s, v;
};

Hsv to_hsv(double r, double g, double b) {
  const double mx = std::max({r, g, b});
  const double mn = std::min({r, g, b});
  const double d = mx - mn;
  double h = 0.0;
  if (d > 0.0) {
    if (mx == r) {
      h = 60.0 * std::fmod((g - b) / d, 6.0);
    } else if (mx == g) {
      h = 60.0 * ((b - r) / d + 2.0);
    } else {
      h = 60.0 * ((r - g) / d + 4.0);
    }
  }
  if (h < 0.0) h += 360.0;
  return {h, mx > 0.0 ? d / mx : 0.0, mx};
}

std::array<double, 3> to_rgb(Hsv c) {
  const double chroma = c.v * c.s;
  const double hp = std::fmod(c.h, 360.0) / 60.0;
  const double x = chroma * (1.0 - std::fabs(std::fmod(hp, 2.0) - 1.0));
  const double m = c.v - chroma;
  double r = 0, g = 0, b = 0;
  switch (static_cast<int>(hp)) {
    case 0: r = chroma; g = x; break;
    case 1: r = x; g = chroma; break;
    case 2: g = chroma; b = x; break;
    case 3: g = x; b = chroma; break;
    case 4: r = x; b = chroma; break;
    default: r = chroma; b = x; break;
  }
  return {r + m, g + m, b + m};
}

template <typename Fn>
void per_pixel_hsv(Image& img, Fn&& fn) {
  const std::size_t n = img.plane();
  auto d = img.data();
  for (std::size_t i = 0; i < n; ++i) {
    Hsv c = to_hsv(d[i], d[n + i], d[2 * n + i]);
    fn(c);
    c.s = std::clamp(c.s, 0.0, 1.0);
    c.v = std::clamp(c.v, 0.0, 1.0);
    c.h = std::fmod(std::fmod(c.h, 360.0) + 360.0, 360.0);
    const auto rgb = to_rgb(c);
    for (int k = 0; k < 3; ++k) d[k * n + i] = static_cast<float>(rgb[static_cast<std::size_t>(k)]);
  }
}

void gaussian_blur(Image& img, double sigma) {
  if (sigma < 0.05) return;
  const int r = static_cast<int>(std::ceil(3.0 * sigma));
  std::vector<double> k(static_cast<std::size_t>(2 * r + 1));
  double sum = 0.0;
  for (int i = -r; i <= r; ++i) {
    k[static_cast<std::size_t>(i + r)] = std::exp(-0.5 * i * i / (sigma * sigma));
    sum += k[static_cast<std::size_t>(i + r)];
  }
  for (auto& v : k) v /= sum;
  const int w = img.width();
  const int h = img.height();
  std::vector<double> tmp(img.plane());
  for (int c = 0; c < Image::kChannels; ++c) {
    // Horizontal then vertical, clamping at the borders.
    for (int y = 0; y < h; ++y) {
      for (int x = 0; x < w; ++x) {
        double acc = 0.0;
        for (int i = -r; i <= r; ++i) {
          acc += k[static_cast<std::size_t>(i + r)] * img.at(c, std::clamp(x + i, 0, w - 1), y);
        }
        tmp[static_cast<std::size_t>(y) * w + x] = acc;
      }
    }
    for (int y = 0; y < h; ++y) {
      for (int x = 0; x < w; ++x) {
        double acc = 0.0;
        for (int i = -r; i <= r; ++i) {
          acc += k[static_cast<std::size_t>(i + r)] *
                 tmp[static_cast<std::size_t>(std::clamp(y + i, 0, h - 1)) * w + x];
        }
        img.at(c, x, y) = static_cast<float>(acc);
      }
    }
  }
}

void clamp_unit(Image& img) {
  for (auto& v : img.data()) v = std::clamp(v, 0.0f, 1.0f);
}

}  // namespace

LabeledImage apply(const AugmentationPlan& plan, const Image& image, const LabelMask& mask) {
  if (image.width() != mask.width() || image.height() != mask.height()) {
    throw Error(ErrorCode::kDimensionMismatch, "image and mask sizes differ");
  }
  LabeledImage cur{image, mask};
  for (const auto& op : plan.ops) {
    const int w = cur.image.width();
    const int h = cur.image.height();
    const double cx = 0.5 * (w - 1);
    const double cy = 0.5 * (h - 1);
    switch (op.kind) {
      case StepKind::kFlipH:
        cur = permute(cur, w, h, [w](int x, int y) { return std::pair{w - 1 - x, y}; });
        break;
      case StepKind::kFlipV:
        cur = permute(cur, w, h, [h](int x, int y) { return std::pair{x, h - 1 - y}; });
        break;
      case StepKind::kRot90: {
        const int turns = static_cast<int>(op.a) & 3;
        if (turns == 1) {  // clockwise: new width is old height
          cur = permute(cur, h, w, [h](int x, int y) { return std::pair{y, h - 1 - x}; });
        } else if (turns == 2) {
          cur = permute(cur, w, h, [w, h](int x, int y) { return std::pair{w - 1 - x, h - 1 - y}; });
        } else if (turns == 3) {
          cur = permute(cur, h, w, [w](int x, int y) { return std::pair{w - 1 - y, x}; });
        }
        break;
      }
      case StepKind::kRotate: {
        const double t = op.a * kPi / 180.0;
        const double ct = std::cos(t);
        const double st = std::sin(t);
        cur = warp(cur, w, h, [=](double x, double y) {
          const double dx = x - cx;
          const double dy = y - cy;
          return std::pair{cx + ct * dx - st * dy, cy + st * dx + ct * dy};
        });
        break;
      }
      case StepKind::kShear: {
        // Forward map [[1, sx], [sy, 1]] about the center; sample via its inverse.
        const double sx = op.a / 100.0;
        const double sy = op.b / 100.0;
        const double det = 1.0 - sx * sy;
        cur = warp(cur, w, h, [=](double x, double y) {
          const double dx = x - cx;
          const double dy = y - cy;
          return std::pair{cx + (dx - sx * dy) / det, cy + (dy - sy * dx) / det};
        });
        break;
      }
      case StepKind::kHue:
        per_pixel_hsv(cur.image, [&](Hsv& c) { c.h += op.a; });
        break;
      case StepKind::kSaturation:
        per_pixel_hsv(cur.image, [&](Hsv& c) { c.s *= 1.0 + op.a / 100.0; });
        break;
      case StepKind::kBrightness:
        per_pixel_hsv(cur.image, [&](Hsv& c) { c.v += op.a / 100.0; });
        break;
      case StepKind::kExposure: {
        const float gain = static_cast<float>(1.0 + op.a / 100.0);
        for (auto& v : cur.image.data()) v *= gain;
        break;
      }
      case StepKind::kBlur:
        gaussian_blur(cur.image, op.a);
        break;
    }
    clamp_unit(cur.image);
  }
  return cur;
}

std::vector<LabeledImage> expand_training_set(const std::vector<LabeledImage>& train,
                                              const AugmentationSpec& spec,
                                              const ExpandOptions& options, std::uint64_t seed) {
  if (options.multiplier < 1) throw Error(ErrorCode::kInvalidArgument, "multiplier must be >= 1");
  spec.validate();
  const auto m = static_cast<std::uint64_t>(options.multiplier);
  std::vector<LabeledImage> out;
  out.reserve(train.size() * m);
  for (std::size_t i = 0; i < train.size(); ++i) {
    for (std::uint64_t j = 0; j < m; ++j) {
      if (j == 0 && options.include_original) {
        out.push_back(train[i]);
        continue;
      }
      const AugmentationPlan plan = sample_plan(spec, seed, i * m + j);
      out.push_back(apply(plan, train[i].image, train[i].mask));
    }
  }
  return out;
}

namespace {

AugmentPreset make_preset(std::string food, int test, int train,
                          std::vector<std::pair<StepKind, double>> ranged) {
  AugmentPreset p;
  p.food_type = std::move(food);
  p.test_size = test;
  p.train_size = train;
  p.spec.food_type = p.food_type;
  p.spec.steps = {{StepKind::kFlipH, 0, 0}, {StepKind::kFlipV, 0, 0}, {StepKind::kRot90, 0, 0},
                  {StepKind::kRotate, -15, 15}};
  for (const auto& [kind, r] : ranged) {
    p.spec.steps.push_back({kind, kind == StepKind::kBlur ? 0.0 : -r, r});
  }
  return p;
}

}  // namespace

const std::vector<AugmentPreset>& builtin_presets() {
  using K = StepKind;
  static const std::vector<AugmentPreset> kPresets = {
      make_preset("AdasPolo", 63, 264,
                  {{K::kShear, 10}, {K::kSaturation, 5}, {K::kBrightness, 10}, {K::kExposure, 3},
                   {K::kBlur, 1.0}}),
      make_preset("CheloGoosht", 64, 207,
                  {{K::kShear, 15}, {K::kHue, 15}, {K::kSaturation, 20}, {K::kBrightness, 15},
                   {K::kExposure, 5}}),
      make_preset("Fesenjan", 61, 148,
                  {{K::kShear, 15}, {K::kHue, 18}, {K::kSaturation, 15}, {K::kBrightness, 10},
                   {K::kExposure, 10}, {K::kBlur, 1.3}}),
      make_preset("GheymeBademjan", 63, 167,
                  {{K::kShear, 15}, {K::kHue, 15}, {K::kSaturation, 15}, {K::kBrightness, 15},
                   {K::kBlur, 1.2}}),
      make_preset("ProteinFries", 103, 273,
                  {{K::kShear, 15}, {K::kHue, 15}, {K::kSaturation, 10}, {K::kBrightness, 15},
                   {K::kExposure, 5}, {K::kBlur, 1.2}}),
  };
  return kPresets;
}

const AugmentPreset& augment_preset(std::string_view food_type) {
  for (const auto& p : builtin_presets()) {
    if (p.food_type == food_type) return p;
  }
  throw Error(ErrorCode::kInvalidConfig, "unknown augmentation preset '" + std::string(food_type) + "'");
}

nlohmann::json to_json(const AugmentationSpec& spec) {
  nlohmann::json steps = nlohmann::json::array();
  for (const auto& s : spec.steps) {
    steps.push_back({{"kind", step_kind_name(s.kind)},
                     {"lo", s.lo},
                     {"hi", s.hi},
                     {"probability", s.probability}});
  }
  return {{"food_type", spec.food_type}, {"steps", steps}};
}

nlohmann::json to_json(const AugmentationPlan& plan) {
  nlohmann::json ops = nlohmann::json::array();
  for (const auto& op : plan.ops) {
    ops.push_back({{"kind", step_kind_name(op.kind)}, {"a", op.a}, {"b", op.b}});
  }
  return ops;
}

AugmentationSpec augmentation_spec_from_json(const nlohmann::json& j) {
  if (j.is_string()) return augment_preset(j.get<std::string>()).spec;
  if (!j.is_object()) throw Error(ErrorCode::kInvalidConfig, "augmentation: expected object or preset name");
  if (j.contains("preset")) {
    if (!j["preset"].is_string()) throw Error(ErrorCode::kInvalidConfig, "augmentation.preset: expected a string");
    return augment_preset(j["preset"].get<std::string>()).spec;
  }
  AugmentationSpec spec;
  if (j.contains("food_type")) {
    if (!j["food_type"].is_string()) {
      throw Error(ErrorCode::kInvalidConfig, "augmentation.food_type: expected a string");
    }
    spec.food_type = j["food_type"].get<std::string>();
  }
  if (!j.contains("steps") || !j["steps"].is_array()) {
    throw Error(ErrorCode::kInvalidConfig, "augmentation.steps: expected an array");
  }
  for (std::size_t i = 0; i < j["steps"].size(); ++i) {
    const auto& s = j["steps"][i];
    const std::string where = "augmentation.steps[" + std::to_string(i) + "]";
    if (!s.is_object() || !s.contains("kind") || !s["kind"].is_string()) {
      throw Error(ErrorCode::kInvalidConfig, where + ".kind: missing");
    }
    AugmentationStep step;
    step.kind = parse_step_kind(s["kind"].get<std::string>());
    for (const char* key : {"lo", "hi", "probability"}) {
      if (s.contains(key) && !s[key].is_number()) {
        throw Error(ErrorCode::kInvalidConfig, where + "." + key + ": expected a number");
      }
    }
    step.lo = s.value("lo", 0.0);
    step.hi = s.value("hi", 0.0);
    step.probability = s.value("probability", kDefaultStepProbability);
    spec.steps.push_back(step);
  }
  spec.validate();
  return spec;
}

}  // namespace platewaste
