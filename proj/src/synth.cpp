#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>
#include <numeric>
#include <utility>

#include "platewaste/dataio.hpp"
#include "platewaste/error.hpp"
#include "platewaste/rng.hpp"

namespace platewaste {

void SyntheticSpec::validate() const {
  if (image_size < 4) throw Error(ErrorCode::kInvalidArgument, "image_size must be >= 4");
  if (n_pre < 0 || n_post < 0) throw Error(ErrorCode::kInvalidArgument, "image counts must be >= 0");
  if (class_table.size() < 2 || class_table.front() != "background") {
    throw Error(ErrorCode::kInvalidArgument, "class_table must start with background");
  }
  if (class_table.size() > 256) throw Error(ErrorCode::kInvalidArgument, "at most 256 classes");
  if (!(noise >= 0.0)) throw Error(ErrorCode::kInvalidArgument, "noise must be >= 0");
  const std::size_t food = class_table.size() - 1;
  for (const auto* ranges : {&pre_ranges, &post_ranges}) {
    if (ranges->size() != food) {
      throw Error(ErrorCode::kInvalidArgument,
                  "expected " + std::to_string(food) + " proportion ranges, got " +
                      std::to_string(ranges->size()));
    }
    double hi_sum = 0.0;
    for (const auto& r : *ranges) {
      if (!(r.lo >= 0.0 && r.lo <= r.hi && r.hi <= 1.0)) {
        throw Error(ErrorCode::kInfeasibleSpec, "proportion range must satisfy 0 <= lo <= hi <= 1");
      }
      hi_sum += r.hi;
    }
    if (hi_sum > 1.0 + 1e-12) {
      throw Error(ErrorCode::kInfeasibleSpec, "food proportions can sum past 1");
    }
  }
}

namespace {

// Base colors; food classes past the table get hues spread around the wheel.
std::array<float, 3> class_color(int c) {
  static constexpr std::array<std::array<float, 3>, 4> kTable = {{
      {0.90f, 0.90f, 0.86f},  // plate
      {0.86f, 0.62f, 0.18f},  // golden
      {0.45f, 0.22f, 0.12f},  // brown
      {0.30f, 0.60f, 0.25f},  // green
  }};
  if (c < static_cast<int>(kTable.size())) return kTable[static_cast<std::size_t>(c)];
  const float h = static_cast<float>((c * 67) % 360) / 60.0f;
  const float x = 1.0f - std::fabs(std::fmod(h, 2.0f) - 1.0f);
  std::array<float, 3> rgb{};
  switch (static_cast<int>(h)) {
    case 0: rgb = {1, x, 0}; break;
    case 1: rgb = {x, 1, 0}; break;
    case 2: rgb = {0, 1, x}; break;
    case 3: rgb = {0, x, 1}; break;
    case 4: rgb = {x, 0, 1}; break;
    default: rgb = {1, 0, x}; break;
  }
  for (auto& v : rgb) v = 0.15f + 0.7f * v;
  return rgb;
}

float quantize(double v) {
  const double q = std::round(std::clamp(v, 0.0, 1.0) * 255.0);
  return static_cast<float>(q / 255.0);
}

}  // namespace

SyntheticSample render_plate(int size, const std::vector<std::int64_t>& class_counts,
                             BlobShape shape, double noise, std::uint64_t seed) {
  if (size < 1) throw Error(ErrorCode::kInvalidArgument, "size must be positive");
  if (class_counts.size() < 2) throw Error(ErrorCode::kInvalidArgument, "need at least 2 classes");
  const auto area = static_cast<std::int64_t>(size) * size;
  std::int64_t food = 0;
  for (std::size_t c = 1; c < class_counts.size(); ++c) {
    if (class_counts[c] < 0) throw Error(ErrorCode::kInfeasibleSpec, "negative pixel count");
    food += class_counts[c];
  }
  if (food > area) {
    throw Error(ErrorCode::kInfeasibleSpec, std::to_string(food) + " food pixels exceed the area " +
                                                std::to_string(area));
  }

  Rng rng(seed);
  const int num_classes = static_cast<int>(class_counts.size());
  std::vector<Label> labels(static_cast<std::size_t>(area), 0);
  std::vector<bool> taken(static_cast<std::size_t>(area), false);
  const double mid = 0.5 * (size - 1);
  const double phase0 = rng.uniform(0.0, 6.283185307179586);
  const int food_classes = num_classes - 1;

  // Each class grows from its own center; ranking free pixels by a warped
  // elliptical distance and taking exactly k of them makes counts exact.
  std::vector<std::pair<double, std::int64_t>> scored;
  scored.reserve(static_cast<std::size_t>(area));
  for (int c = 1; c < num_classes; ++c) {
    const std::int64_t k = class_counts[static_cast<std::size_t>(c)];
    if (k == 0) continue;
    const double ang = phase0 + 6.283185307179586 * (c - 1) / std::max(1, food_classes);
    const double rad = food_classes > 1 ? 0.2 * size * rng.uniform(0.7, 1.1) : 0.05 * size;
    const double cx = mid + rad * std::cos(ang);
    const double cy = mid + rad * std::sin(ang);
    const double aspect = rng.uniform(0.7, 1.4);
    const double theta = rng.uniform(0.0, 3.141592653589793);
    const double ct = std::cos(theta);
    const double st = std::sin(theta);
    double amp[3] = {0, 0, 0};
    double ph[3] = {0, 0, 0};
    if (shape == BlobShape::kBlob) {
      for (int h = 0; h < 3; ++h) {
        amp[h] = rng.uniform(0.0, 0.18);
        ph[h] = rng.uniform(0.0, 6.283185307179586);
      }
    }
    double cph[3];
    double sph[3];
    for (int h = 0; h < 3; ++h) {
      cph[h] = std::cos(ph[h]);
      sph[h] = std::sin(ph[h]);
    }
    scored.clear();
    for (int y = 0; y < size; ++y) {
      for (int x = 0; x < size; ++x) {
        const std::int64_t i = static_cast<std::int64_t>(y) * size + x;
        if (taken[static_cast<std::size_t>(i)]) continue;
        const double dx = x - cx;
        const double dy = y - cy;
        const double u = (dx * ct + dy * st) / aspect;
        const double v = (-dx * st + dy * ct) * aspect;
        const double r = std::sqrt(u * u + v * v);
        double warp = 1.0;
        if (r > 0.0) {
          // cos(n*phi + ph) via the angle-addition recurrence, no trig per pixel.
          const double c1 = u / r;
          const double s1 = v / r;
          double cn = c1;
          double sn = s1;
          for (int h = 0; h < 3; ++h) {
            const double c_next = cn * c1 - sn * s1;
            sn = sn * c1 + cn * s1;
            cn = c_next;
            warp += amp[h] * (cn * cph[h] - sn * sph[h]);
          }
        }
        scored.emplace_back(r / warp, i);
      }
    }
    // Pairs are totally ordered (indices are unique), so the selected set
    // does not depend on the selection algorithm.
    if (k < static_cast<std::int64_t>(scored.size())) {
      std::nth_element(scored.begin(), scored.begin() + k, scored.end());
    }
    for (std::int64_t j = 0; j < k; ++j) {
      const auto i = static_cast<std::size_t>(scored[static_cast<std::size_t>(j)].second);
      taken[i] = true;
      labels[i] = static_cast<Label>(c);
    }
  }

  // Per-image color jitter plus per-pixel noise, stored at 8-bit levels so a
  // PNG round-trip is lossless.
  std::vector<std::array<float, 3>> palette(static_cast<std::size_t>(num_classes));
  for (int c = 0; c < num_classes; ++c) {
    auto col = class_color(c);
    for (auto& v : col) v = static_cast<float>(std::clamp(v + rng.uniform(-0.04, 0.04), 0.0, 1.0));
    palette[static_cast<std::size_t>(c)] = col;
  }
  Image image(size, size);
  for (int y = 0; y < size; ++y) {
    for (int x = 0; x < size; ++x) {
      const auto& col = palette[labels[static_cast<std::size_t>(y) * size + x]];
      for (int ch = 0; ch < 3; ++ch) {
        // Sum of three uniforms, rescaled to unit variance: close enough to
        // Gaussian for texture and far cheaper than Box-Muller.
        const double n =
            noise > 0.0 ? noise * 2.0 * (rng.uniform() + rng.uniform() + rng.uniform() - 1.5) : 0.0;
        image.at(ch, x, y) = quantize(col[static_cast<std::size_t>(ch)] + n);
      }
    }
  }

  SyntheticSample s;
  s.image = std::move(image);
  s.mask = LabelMask(size, size, num_classes, std::move(labels));
  return s;
}

namespace {

std::string sample_name(Stage stage, int i) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%s_%04d", stage == Stage::kPre ? "pre" : "post", i);
  return buf;
}

}  // namespace

std::vector<SyntheticSample> synth_samples(const SyntheticSpec& spec) {
  spec.validate();
  const auto area = static_cast<std::int64_t>(spec.image_size) * spec.image_size;
  const int num_classes = static_cast<int>(spec.class_table.size());
  std::vector<SyntheticSample> out;
  out.reserve(static_cast<std::size_t>(spec.n_pre + spec.n_post));
  std::uint64_t index = 0;
  for (Stage stage : {Stage::kPre, Stage::kPost}) {
    const auto& ranges = stage == Stage::kPre ? spec.pre_ranges : spec.post_ranges;
    const int n = stage == Stage::kPre ? spec.n_pre : spec.n_post;
    for (int i = 0; i < n; ++i, ++index) {
      Rng rng(mix_seed(spec.seed, 2 * index));
      std::vector<std::int64_t> counts(static_cast<std::size_t>(num_classes), 0);
      std::int64_t food = 0;
      for (int c = 1; c < num_classes; ++c) {
        const auto& r = ranges[static_cast<std::size_t>(c - 1)];
        const double p = rng.uniform(r.lo, r.hi);
        auto k = static_cast<std::int64_t>(std::llround(p * static_cast<double>(area)));
        k = std::min(k, area - food);  // rounding can overshoot by a pixel
        counts[static_cast<std::size_t>(c)] = k;
        food += k;
      }
      counts[0] = area - food;
      SyntheticSample s = render_plate(spec.image_size, counts, spec.shape, spec.noise,
                                       mix_seed(spec.seed, 2 * index + 1));
      s.stage = stage;
      s.name = sample_name(stage, i);
      out.push_back(std::move(s));
    }
  }
  return out;
}

SyntheticDataset write_synthetic(const std::vector<SyntheticSample>& samples,
                                 const std::string& food_type,
                                 const std::vector<std::string>& class_table,
                                 const std::filesystem::path& out_dir) {
  namespace fs = std::filesystem;
  fs::create_directories(out_dir / "images");
  fs::create_directories(out_dir / "masks");
  SyntheticDataset ds;
  ds.manifest.food_type = food_type;
  ds.manifest.class_table = class_table;
  ds.manifest.base_dir = out_dir;
  for (const auto& s : samples) {
    if (s.mask.num_classes() != static_cast<int>(class_table.size())) {
      throw Error(ErrorCode::kDimensionMismatch, s.name + ": class count disagrees with table");
    }
    ManifestEntry e;
    e.image = "images/" + s.name + ".png";
    e.mask = "masks/" + s.name + ".png";
    e.stage = s.stage;
    e.split = Split::kTrain;
    write_image(s.image, out_dir / e.image);
    write_mask(s.mask, out_dir / e.mask);
    const ClassCounts counts = class_pixel_counts(s.mask);
    for (int c = 0; c < counts.num_classes(); ++c) {
      ds.ledger.push_back({s.name, c, counts.counts[static_cast<std::size_t>(c)]});
    }
    ds.manifest.entries.push_back(std::move(e));
  }
  save_manifest(ds.manifest, out_dir / "manifest.json");
  write_ledger(ds.ledger, out_dir / "ledger.csv");
  return ds;
}

SyntheticDataset synth_generate(const SyntheticSpec& spec, const std::filesystem::path& out_dir) {
  return write_synthetic(synth_samples(spec), spec.food_type, spec.class_table, out_dir);
}

const std::vector<WasteTargets>& survey_waste_targets() {
  static const std::vector<WasteTargets> kTargets = {
      {"AdasPolo", {0.399}, {0.047}},
      {"CheloGoosht", {0.085, 0.291}, {0.005, 0.061}},
      {"Fesenjan", {0.138, 0.261}, {0.025, 0.028}},
      {"GheymeBademjan", {0.143, 0.328}, {0.017, 0.066}},
      {"ProteinFries", {0.096, 0.129}, {0.021, 0.010}},
  };
  return kTargets;
}

namespace {

// Splits total into n parts proportional to jittered weights (largest
// remainder), so the parts sum to total exactly.
std::vector<std::int64_t> spread(std::int64_t total, int n, Rng& rng) {
  std::vector<double> w(static_cast<std::size_t>(n));
  double sum = 0.0;
  for (auto& v : w) {
    v = rng.uniform(0.85, 1.15);
    sum += v;
  }
  std::vector<std::int64_t> parts(static_cast<std::size_t>(n));
  std::vector<std::pair<double, int>> rem;
  std::int64_t used = 0;
  for (int i = 0; i < n; ++i) {
    const double exact = static_cast<double>(total) * w[static_cast<std::size_t>(i)] / sum;
    parts[static_cast<std::size_t>(i)] = static_cast<std::int64_t>(std::floor(exact));
    used += parts[static_cast<std::size_t>(i)];
    rem.emplace_back(-(exact - std::floor(exact)), i);
  }
  std::sort(rem.begin(), rem.end());
  for (std::int64_t k = 0; k < total - used; ++k) {
    ++parts[static_cast<std::size_t>(rem[static_cast<std::size_t>(k)].second)];
  }
  return parts;
}

}  // namespace

std::vector<SyntheticSample> waste_fixture_samples(const WasteTargets& targets, int image_size,
                                                    int n_pre, int n_post, std::uint64_t seed) {
  if (n_pre < 1 || n_post < 1) throw Error(ErrorCode::kInvalidArgument, "need pre and post images");
  if (targets.pre.size() != targets.post.size() || targets.pre.empty()) {
    throw Error(ErrorCode::kInvalidArgument, "pre/post targets must list the same classes");
  }
  const auto area = static_cast<std::int64_t>(image_size) * image_size;
  const int num_classes = static_cast<int>(targets.pre.size()) + 1;
  Rng rng(mix_seed(seed, 0x7AB6));
  std::vector<SyntheticSample> out;
  for (Stage stage : {Stage::kPre, Stage::kPost}) {
    const auto& props = stage == Stage::kPre ? targets.pre : targets.post;
    const int n = stage == Stage::kPre ? n_pre : n_post;
    std::vector<std::vector<std::int64_t>> per_class;
    for (double p : props) {
      const auto total = static_cast<std::int64_t>(std::llround(p * static_cast<double>(area * n)));
      per_class.push_back(spread(total, n, rng));
    }
    for (int i = 0; i < n; ++i) {
      std::vector<std::int64_t> counts(static_cast<std::size_t>(num_classes), 0);
      std::int64_t food = 0;
      for (int c = 1; c < num_classes; ++c) {
        counts[static_cast<std::size_t>(c)] =
            per_class[static_cast<std::size_t>(c - 1)][static_cast<std::size_t>(i)];
        food += counts[static_cast<std::size_t>(c)];
      }
      counts[0] = area - food;
      SyntheticSample s = render_plate(image_size, counts, BlobShape::kBlob, 0.03,
                                       mix_seed(seed, static_cast<std::uint64_t>(out.size())));
      s.stage = stage;
      s.name = sample_name(stage, i);
      out.push_back(std::move(s));
    }
  }
  return out;
}

}  // namespace platewaste
