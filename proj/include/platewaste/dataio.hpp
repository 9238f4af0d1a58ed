#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "platewaste/image.hpp"
#include "platewaste/maskcore.hpp"

namespace platewaste {

enum class Stage { kPre, kPost };
enum class Split { kTrain, kVal, kTest };

std::string_view stage_name(Stage s);
std::string_view split_name(Split s);

struct ManifestEntry {
  std::string image;  // relative to the manifest directory unless absolute
  std::string mask;
  Stage stage = Stage::kPre;
  Split split = Split::kTrain;
  friend bool operator==(const ManifestEntry&, const ManifestEntry&) = default;
};

inline constexpr int kManifestSchemaVersion = 1;
inline constexpr std::string_view kManifestSchema = "platewaste.manifest";

// Food type, class table (index 0 is "background") and image/mask entries.
// Pre and post entries are independent populations; there is no pairing.
struct DatasetManifest {
  std::string food_type;
  std::vector<std::string> class_table;
  std::vector<ManifestEntry> entries;
  std::filesystem::path base_dir;  // not serialized

  int num_classes() const { return static_cast<int>(class_table.size()); }
  std::filesystem::path resolve(const std::string& relative) const;
  // Throws ParseError when the class table or enums are malformed.
  void validate() const;

  bool operator==(const DatasetManifest& other) const {
    return food_type == other.food_type && class_table == other.class_table &&
           entries == other.entries;
  }
};

nlohmann::json to_json(const DatasetManifest& manifest);
// Field-level ParseError diagnostics ("entries[3].stage: ...").
DatasetManifest manifest_from_json(const nlohmann::json& j);

// Throws ParseError (with line/column for malformed JSON) and, when
// check_files is set, MissingFile listing every absent path.
DatasetManifest load_manifest(const std::filesystem::path& path, bool check_files = true);
void save_manifest(const DatasetManifest& manifest, const std::filesystem::path& path);

// Class tables for the five built-in food types. Throws InvalidArgument for
// unknown names. Accepted names: AdasPolo, CheloGoosht, Fesenjan,
// GheymeBademjan, ProteinFries.
std::vector<std::string> food_class_table(std::string_view food_type);
const std::vector<std::string>& builtin_food_types();

// Masks are single-channel 8-bit PNGs (grayscale or palette) whose values are
// class indices. num_classes <= 0 skips the range check.
LabelMask read_mask(const std::filesystem::path& path, int num_classes);
void write_mask(const LabelMask& mask, const std::filesystem::path& path);

Image read_image(const std::filesystem::path& path);
void write_image(const Image& image, const std::filesystem::path& path);

// Carves round(n * test_fraction) entries for test, then
// round(rest * val_fraction) for validation; the remainder trains.
// Deterministic in seed; entry order is preserved. Throws TooFewEntries when
// any split would be empty and InvalidArgument for fractions outside (0, 1).
std::vector<ManifestEntry> split_dataset(std::vector<ManifestEntry> entries,
                                         double test_fraction, double val_fraction,
                                         std::uint64_t seed);

struct ProportionRange {
  double lo = 0.0;
  double hi = 0.0;
};

enum class BlobShape { kEllipse, kBlob };

struct SyntheticSpec {
  std::string food_type = "Synthetic";
  std::vector<std::string> class_table = {"background", "food"};
  int image_size = 64;
  int n_pre = 10;
  int n_post = 10;
  // Index k describes class k + 1.
  std::vector<ProportionRange> pre_ranges = {{0.3, 0.5}};
  std::vector<ProportionRange> post_ranges = {{0.02, 0.1}};
  BlobShape shape = BlobShape::kBlob;
  double noise = 0.04;
  std::uint64_t seed = 1;

  // Throws InfeasibleSpec / InvalidArgument.
  void validate() const;
};

struct LedgerRow {
  std::string image;
  int class_index = 0;
  std::int64_t pixel_count = 0;
};

struct SyntheticSample {
  Image image;
  LabelMask mask;
  Stage stage = Stage::kPre;
  std::string name;
};

// Renders one plate with exact per-class pixel counts (class_counts[0] is
// ignored; background fills the rest). Throws InfeasibleSpec when the food
// counts exceed the image area.
SyntheticSample render_plate(int size, const std::vector<std::int64_t>& class_counts,
                             BlobShape shape, double noise, std::uint64_t seed);

// Draws per-image targets from the SyntheticSpec ranges and renders every sample.
// Pre samples come first, then post samples.
std::vector<SyntheticSample> synth_samples(const SyntheticSpec& spec);

struct SyntheticDataset {
  DatasetManifest manifest;
  std::vector<LedgerRow> ledger;
};

// Writes images/, masks/, manifest.json and ledger.csv under out_dir. Every
// entry is assigned to the train split; re-split with split_dataset.
SyntheticDataset write_synthetic(const std::vector<SyntheticSample>& samples,
                                 const std::string& food_type,
                                 const std::vector<std::string>& class_table,
                                 const std::filesystem::path& out_dir);
SyntheticDataset synth_generate(const SyntheticSpec& spec, const std::filesystem::path& out_dir);

void write_ledger(const std::vector<LedgerRow>& ledger, const std::filesystem::path& path);

// Pooled pre/post proportions measured for the built-in food types in the
// original cafeteria survey; index k is class k + 1.
struct WasteTargets {
  std::string food_type;
  std::vector<double> pre;
  std::vector<double> post;
};
const std::vector<WasteTargets>& survey_waste_targets();

// Masks whose pooled proportions reproduce survey_waste_targets() for one food
// type: per-class totals are rounded to whole pixels and spread over the
// images with seeded jitter, so pooled proportions match to within half a
// pixel of the pooled area.
std::vector<SyntheticSample> waste_fixture_samples(const WasteTargets& targets, int image_size = 256,
                                                    int n_pre = 8, int n_post = 8,
                                                    std::uint64_t seed = 6);

}  // namespace platewaste
