#include "platewaste/dataio.hpp"

#include <cmath>
#include <fstream>
#include <numeric>
#include <sstream>

#include "platewaste/error.hpp"
#include "platewaste/rng.hpp"

namespace platewaste {

std::string_view stage_name(Stage s) { return s == Stage::kPre ? "pre" : "post"; }

std::string_view split_name(Split s) {
  switch (s) {
    case Split::kTrain: return "train";
    case Split::kVal: return "val";
    case Split::kTest: return "test";
  }
  return "train";
}

Tensor4 to_tensor(std::span<const Image* const> images) {
  if (images.empty()) throw Error(ErrorCode::kEmptyInput, "no images");
  const int w = images.front()->width();
  const int h = images.front()->height();
  Tensor4 t(static_cast<int>(images.size()), Image::kChannels, h, w);
  for (std::size_t b = 0; b < images.size(); ++b) {
    const Image& img = *images[b];
    if (img.width() != w || img.height() != h) {
      throw Error(ErrorCode::kShapeMismatch, "images in a batch must share dimensions");
    }
    const auto src = img.data();
    std::copy(src.begin(), src.end(), t.sample(static_cast<int>(b)));
  }
  return t;
}

Tensor4 to_tensor(std::span<const Image> images) {
  std::vector<const Image*> ptrs;
  ptrs.reserve(images.size());
  for (const auto& img : images) ptrs.push_back(&img);
  return to_tensor(std::span<const Image* const>(ptrs));
}

std::filesystem::path DatasetManifest::resolve(const std::string& relative) const {
  const std::filesystem::path p(relative);
  return p.is_absolute() ? p : base_dir / p;
}

void DatasetManifest::validate() const {
  if (class_table.size() < 2) {
    throw Error(ErrorCode::kParseError, "classes: need background plus at least one food class");
  }
  if (class_table.size() > 256) throw Error(ErrorCode::kParseError, "classes: more than 256");
  if (class_table.front() != "background") {
    throw Error(ErrorCode::kParseError, "classes[0]: must be named \"background\", got \"" +
                                            class_table.front() + "\"");
  }
  for (std::size_t i = 0; i < entries.size(); ++i) {
    if (entries[i].mask.empty()) {
      throw Error(ErrorCode::kParseError, "entries[" + std::to_string(i) + "].mask: empty path");
    }
  }
}

nlohmann::json to_json(const DatasetManifest& m) {
  nlohmann::json classes = nlohmann::json::array();
  for (std::size_t i = 0; i < m.class_table.size(); ++i) {
    classes.push_back({{"index", i}, {"name", m.class_table[i]}});
  }
  nlohmann::json entries = nlohmann::json::array();
  for (const auto& e : m.entries) {
    nlohmann::json j = {{"mask", e.mask}, {"stage", stage_name(e.stage)},
                        {"split", split_name(e.split)}};
    j["image"] = e.image.empty() ? nlohmann::json(nullptr) : nlohmann::json(e.image);
    entries.push_back(std::move(j));
  }
  return {{"schema", kManifestSchema},
          {"version", kManifestSchemaVersion},
          {"food_type", m.food_type},
          {"classes", classes},
          {"entries", entries}};
}

namespace {

[[noreturn]] void parse_fail(const std::string& field, const std::string& why) {
  throw Error(ErrorCode::kParseError, field + ": " + why);
}

std::string require_string(const nlohmann::json& j, const std::string& key,
                           const std::string& where) {
  if (!j.contains(key)) parse_fail(where + "." + key, "missing");
  if (!j[key].is_string()) parse_fail(where + "." + key, "expected a string");
  return j[key].get<std::string>();
}

}  // namespace

DatasetManifest manifest_from_json(const nlohmann::json& j) {
  if (!j.is_object()) parse_fail("<root>", "expected an object");
  if (!j.contains("schema") || j["schema"] != kManifestSchema) {
    parse_fail("schema", "expected \"" + std::string(kManifestSchema) + "\"");
  }
  if (!j.contains("version") || !j["version"].is_number_integer()) {
    parse_fail("version", "missing or not an integer");
  }
  if (j["version"].get<int>() != kManifestSchemaVersion) {
    parse_fail("version", "unsupported version " + j["version"].dump());
  }
  DatasetManifest m;
  m.food_type = require_string(j, "food_type", "manifest");

  if (!j.contains("classes") || !j["classes"].is_array()) parse_fail("classes", "expected an array");
  const auto& classes = j["classes"];
  m.class_table.resize(classes.size());
  std::vector<bool> seen(classes.size(), false);
  for (std::size_t i = 0; i < classes.size(); ++i) {
    const std::string where = "classes[" + std::to_string(i) + "]";
    const auto& c = classes[i];
    if (!c.is_object() || !c.contains("index") || !c["index"].is_number_integer()) {
      parse_fail(where + ".index", "missing or not an integer");
    }
    const auto idx = c["index"].get<long long>();
    if (idx < 0 || idx >= static_cast<long long>(classes.size()) || seen[idx]) {
      parse_fail(where + ".index", "indices must be dense 0..C-1 without repeats");
    }
    seen[idx] = true;
    m.class_table[idx] = require_string(c, "name", where);
  }

  if (!j.contains("entries") || !j["entries"].is_array()) parse_fail("entries", "expected an array");
  const auto& entries = j["entries"];
  for (std::size_t i = 0; i < entries.size(); ++i) {
    const std::string where = "entries[" + std::to_string(i) + "]";
    const auto& e = entries[i];
    if (!e.is_object()) parse_fail(where, "expected an object");
    ManifestEntry entry;
    if (e.contains("image") && !e["image"].is_null()) entry.image = require_string(e, "image", where);
    entry.mask = require_string(e, "mask", where);
    const std::string stage = require_string(e, "stage", where);
    if (stage == "pre") {
      entry.stage = Stage::kPre;
    } else if (stage == "post") {
      entry.stage = Stage::kPost;
    } else {
      parse_fail(where + ".stage", "unknown value \"" + stage + "\" (expected pre|post)");
    }
    const std::string split = require_string(e, "split", where);
    if (split == "train") {
      entry.split = Split::kTrain;
    } else if (split == "val") {
      entry.split = Split::kVal;
    } else if (split == "test") {
      entry.split = Split::kTest;
    } else {
      parse_fail(where + ".split", "unknown value \"" + split + "\" (expected train|val|test)");
    }
    m.entries.push_back(std::move(entry));
  }
  m.validate();
  return m;
}

DatasetManifest load_manifest(const std::filesystem::path& path, bool check_files) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::kMissingFile, "cannot open manifest " + path.string());
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    throw Error(ErrorCode::kParseError, path.string() + ": " + e.what());
  }
  DatasetManifest m;
  try {
    m = manifest_from_json(j);
  } catch (const Error& e) {
    throw Error(e.code(), path.string() + ": " + e.detail());
  }
  m.base_dir = path.parent_path();
  if (check_files) {
    std::vector<std::string> missing;
    for (const auto& e : m.entries) {
      if (!e.image.empty() && !std::filesystem::exists(m.resolve(e.image))) {
        missing.push_back(m.resolve(e.image).string());
      }
      if (!std::filesystem::exists(m.resolve(e.mask))) missing.push_back(m.resolve(e.mask).string());
    }
    if (!missing.empty()) {
      std::string list;
      for (const auto& s : missing) list += "\n  " + s;
      throw Error(ErrorCode::kMissingFile,
                  std::to_string(missing.size()) + " referenced file(s) absent:" + list);
    }
  }
  return m;
}

void save_manifest(const DatasetManifest& manifest, const std::filesystem::path& path) {
  manifest.validate();
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path);
  if (!out) throw Error(ErrorCode::kIoError, "cannot write " + path.string());
  out << to_json(manifest).dump(2) << '\n';
}

const std::vector<std::string>& builtin_food_types() {
  static const std::vector<std::string> kTypes = {"AdasPolo", "CheloGoosht", "Fesenjan",
                                                  "GheymeBademjan", "ProteinFries"};
  return kTypes;
}

std::vector<std::string> food_class_table(std::string_view food_type) {
  if (food_type == "AdasPolo") return {"background", "AdasPolo"};
  if (food_type == "CheloGoosht") return {"background", "Meat", "Rice"};
  if (food_type == "Fesenjan") return {"background", "Fesenjan stew", "Rice"};
  if (food_type == "GheymeBademjan") return {"background", "GheymeBademjan stew", "Rice"};
  if (food_type == "ProteinFries" || food_type == "Protein & Fries") {
    return {"background", "French fries", "Protein"};
  }
  throw Error(ErrorCode::kInvalidArgument, "unknown food type '" + std::string(food_type) + "'");
}

std::vector<ManifestEntry> split_dataset(std::vector<ManifestEntry> entries, double test_fraction,
                                         double val_fraction, std::uint64_t seed) {
  if (!(test_fraction > 0.0 && test_fraction < 1.0)) {
    throw Error(ErrorCode::kInvalidArgument, "test_fraction must be in (0, 1)");
  }
  if (!(val_fraction > 0.0 && val_fraction < 1.0)) {
    throw Error(ErrorCode::kInvalidArgument, "val_fraction must be in (0, 1)");
  }
  const std::size_t n = entries.size();
  const auto n_test = static_cast<std::size_t>(std::llround(static_cast<double>(n) * test_fraction));
  const std::size_t rest = n - std::min(n, n_test);
  const auto n_val = static_cast<std::size_t>(std::llround(static_cast<double>(rest) * val_fraction));
  if (n_test == 0 || n_test >= n || n_val == 0 || n_val >= rest) {
    throw Error(ErrorCode::kTooFewEntries,
                std::to_string(n) + " entries leave an empty split (test " +
                    std::to_string(n_test) + ", val " + std::to_string(n_val) + ")");
  }
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  Rng rng(mix_seed(seed, 0x5B1));
  rng.shuffle(order);
  for (std::size_t k = 0; k < n; ++k) {
    Split s = Split::kTrain;
    if (k < n_test) {
      s = Split::kTest;
    } else if (k < n_test + n_val) {
      s = Split::kVal;
    }
    entries[order[k]].split = s;
  }
  return entries;
}

void write_ledger(const std::vector<LedgerRow>& ledger, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw Error(ErrorCode::kIoError, "cannot write " + path.string());
  out << "image,class,pixel_count\n";
  for (const auto& row : ledger) {
    out << row.image << ',' << row.class_index << ',' << row.pixel_count << '\n';
  }
}

}  // namespace platewaste
