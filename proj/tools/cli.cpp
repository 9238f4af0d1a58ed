#include "cli.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <set>
#include <sstream>

#include "CLI11.hpp"
#include "platewaste/augment.hpp"
#include "platewaste/checkpoint.hpp"
#include "platewaste/dataio.hpp"
#include "platewaste/error.hpp"
#include "platewaste/metrics.hpp"
#include "platewaste/rng.hpp"
#include "platewaste/trainer.hpp"
#include "platewaste/wastecalc.hpp"

namespace platewaste::cli {

namespace fs = std::filesystem;

namespace {

// Every flag any subcommand understands; a subcommand only registers the
// ones it uses.
struct Flags {
  std::string config;
  std::vector<std::string> manifests;
  std::string out;
  std::uint64_t seed = 1;
  std::string arch = "unet";
  int width = 64;
  int epochs = 50;
  int batch = 4;
  std::string aggregation = "weighted";
  bool include_background = false;
  std::string clamp = "true";
  int multiplier = 3;
  bool all_augmented = false;
  std::string preset;
  std::string checkpoint;
  std::string split = "test";
  std::string pred_split = "all";
  std::string pred_manifest;
  std::string fixture;
  std::string food;
  int size = 64;
  int n_pre = 10;
  int n_post = 10;
  int classes = 3;
  double test_fraction = 0.25;
  double val_fraction = 0.15;
  int bins = 20;
  int warmup = 1;
  int iters = 3;
};

class Command {
 public:
  Command(CLI::App* app, Flags* f) : app_(app), f_(f) {}
  bool given(const std::string& flag) const { return app_->count(flag) > 0; }
  CLI::App* app() const { return app_; }
  const Flags& flags() const { return *f_; }

 private:
  CLI::App* app_;
  Flags* f_;
};

[[noreturn]] void config_fail(const std::string& field, const std::string& why) {
  throw Error(ErrorCode::kInvalidConfig, field + ": " + why);
}

nlohmann::json load_config(const std::string& path) {
  if (path.empty()) return nlohmann::json::object();
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::kMissingFile, "cannot open config " + path);
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    throw Error(ErrorCode::kParseError, path + ": " + e.what());
  }
  if (!j.is_object()) config_fail("<root>", "expected an object");
  static const std::set<std::string> kKeys = {
      "manifest", "model", "train", "augmentation", "aggregation", "out",
      "multiplier", "seed", "clamp_eating_rate", "synth", "include_original"};
  for (const auto& [key, _] : j.items()) {
    if (!kKeys.count(key)) config_fail(key, "unknown key");
  }
  return j;
}

fs::path output_dir(const Command& cmd, const nlohmann::json& cfg, const std::string& sub) {
  if (cmd.given("--out")) return cmd.flags().out;
  if (cfg.contains("out")) {
    if (!cfg["out"].is_string()) config_fail("out", "expected a string");
    return cfg["out"].get<std::string>();
  }
  if (const char* env = std::getenv("PLATEWASTE_OUT"); env && *env) return fs::path(env) / sub;
  return fs::path("platewaste_out") / sub;
}

std::vector<std::string> manifest_paths(const Command& cmd, const nlohmann::json& cfg) {
  if (!cmd.flags().manifests.empty()) return cmd.flags().manifests;
  if (cfg.contains("manifest")) {
    if (cfg["manifest"].is_string()) return {cfg["manifest"].get<std::string>()};
    if (cfg["manifest"].is_array()) {
      std::vector<std::string> out;
      for (const auto& m : cfg["manifest"]) {
        if (!m.is_string()) config_fail("manifest", "expected strings");
        out.push_back(m.get<std::string>());
      }
      return out;
    }
    config_fail("manifest", "expected a path or list of paths");
  }
  throw Error(ErrorCode::kInvalidArgument, "--manifest is required");
}

DatasetManifest single_manifest(const Command& cmd, const nlohmann::json& cfg) {
  const auto paths = manifest_paths(cmd, cfg);
  if (paths.size() != 1) throw Error(ErrorCode::kInvalidArgument, "expected exactly one --manifest");
  return load_manifest(paths.front());
}

std::uint64_t seed_of(const Command& cmd, const nlohmann::json& cfg, std::uint64_t fallback) {
  if (cmd.given("--seed")) return cmd.flags().seed;
  if (cfg.contains("seed")) {
    if (!cfg["seed"].is_number_unsigned()) config_fail("seed", "expected a non-negative integer");
    return cfg["seed"].get<std::uint64_t>();
  }
  return fallback;
}

AggregationMode aggregation_of(const Command& cmd, const nlohmann::json& cfg) {
  AggregationMode mode;
  if (cfg.contains("aggregation")) {
    const auto& a = cfg["aggregation"];
    if (a.is_string()) {
      mode.mode = parse_aggregation(a.get<std::string>());
    } else if (a.is_object()) {
      if (a.contains("mode")) mode.mode = parse_aggregation(a["mode"].get<std::string>());
      if (a.contains("include_background")) {
        if (!a["include_background"].is_boolean()) {
          config_fail("aggregation.include_background", "expected a boolean");
        }
        mode.include_background = a["include_background"].get<bool>();
      }
    } else {
      config_fail("aggregation", "expected a string or object");
    }
  }
  if (cmd.given("--aggregation")) mode.mode = parse_aggregation(cmd.flags().aggregation);
  if (cmd.given("--include-background")) mode.include_background = true;
  return mode;
}

void write_text(const fs::path& path, const std::string& text) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path);
  if (!out) throw Error(ErrorCode::kIoError, "cannot write " + path.string());
  out << text;
}

void write_json(const fs::path& path, const nlohmann::json& j) { write_text(path, j.dump(2) + "\n"); }

bool entry_in(const ManifestEntry& e, const std::string& split) {
  return split == "all" || split_name(e.split) == split;
}

void check_split_name(const std::string& split) {
  if (split != "all" && split != "train" && split != "val" && split != "test") {
    throw Error(ErrorCode::kInvalidArgument, "--split must be train, val, test or all");
  }
}

LabeledImage load_pair(const DatasetManifest& m, const ManifestEntry& e) {
  if (e.image.empty()) throw Error(ErrorCode::kMissingFile, e.mask + " has no image");
  return {read_image(m.resolve(e.image)), read_mask(m.resolve(e.mask), m.num_classes())};
}

std::vector<LabeledImage> load_split(const DatasetManifest& m, const std::string& split) {
  std::vector<LabeledImage> out;
  for (const auto& e : m.entries) {
    if (entry_in(e, split)) out.push_back(load_pair(m, e));
  }
  return out;
}

std::string absolute_of(const DatasetManifest& m, const std::string& p) {
  return p.empty() ? p : fs::absolute(m.resolve(p)).lexically_normal().string();
}

// ---- synth ---------------------------------------------------------------

std::vector<ProportionRange> ranges_from_json(const nlohmann::json& j, const std::string& field) {
  if (!j.is_array()) config_fail(field, "expected an array of [lo, hi] pairs");
  std::vector<ProportionRange> out;
  for (std::size_t i = 0; i < j.size(); ++i) {
    const auto& r = j[i];
    if (!r.is_array() || r.size() != 2 || !r[0].is_number() || !r[1].is_number()) {
      config_fail(field + "[" + std::to_string(i) + "]", "expected [lo, hi]");
    }
    out.push_back({r[0].get<double>(), r[1].get<double>()});
  }
  return out;
}

SyntheticSpec synth_spec(const Command& cmd, const nlohmann::json& cfg) {
  const Flags& f = cmd.flags();
  SyntheticSpec spec;
  const nlohmann::json s = cfg.value("synth", nlohmann::json::object());
  if (!s.is_object()) config_fail("synth", "expected an object");
  try {
    if (s.contains("food_type")) spec.food_type = s["food_type"].get<std::string>();
    if (s.contains("class_table")) spec.class_table = s["class_table"].get<std::vector<std::string>>();
    if (s.contains("image_size")) spec.image_size = s["image_size"].get<int>();
    if (s.contains("n_pre")) spec.n_pre = s["n_pre"].get<int>();
    if (s.contains("n_post")) spec.n_post = s["n_post"].get<int>();
    if (s.contains("noise")) spec.noise = s["noise"].get<double>();
    if (s.contains("shape")) {
      const auto shape = s["shape"].get<std::string>();
      if (shape != "ellipse" && shape != "blob") config_fail("synth.shape", "expected ellipse or blob");
      spec.shape = shape == "ellipse" ? BlobShape::kEllipse : BlobShape::kBlob;
    }
  } catch (const nlohmann::json::exception& e) {
    config_fail("synth", e.what());
  }
  if (cmd.given("--food")) {
    spec.food_type = f.food;
    spec.class_table = food_class_table(f.food);
  } else if (cmd.given("--classes")) {
    if (f.classes < 2) throw Error(ErrorCode::kInvalidArgument, "--classes must be >= 2");
    spec.class_table = {"background"};
    for (int c = 1; c < f.classes; ++c) spec.class_table.push_back("food" + std::to_string(c));
  }
  const std::size_t food = spec.class_table.size() - 1;
  spec.pre_ranges.assign(food, {0.30 / static_cast<double>(food), 0.55 / static_cast<double>(food)});
  spec.post_ranges.assign(food, {0.01, 0.10 / static_cast<double>(food)});
  if (s.contains("pre_ranges")) spec.pre_ranges = ranges_from_json(s["pre_ranges"], "synth.pre_ranges");
  if (s.contains("post_ranges")) {
    spec.post_ranges = ranges_from_json(s["post_ranges"], "synth.post_ranges");
  }
  if (cmd.given("--size")) spec.image_size = f.size;
  if (cmd.given("--n-pre")) spec.n_pre = f.n_pre;
  if (cmd.given("--n-post")) spec.n_post = f.n_post;
  spec.seed = seed_of(cmd, cfg, 1);
  spec.validate();
  return spec;
}

int cmd_synth(const Command& cmd) {
  const Flags& f = cmd.flags();
  const nlohmann::json cfg = load_config(f.config);
  const fs::path out = output_dir(cmd, cfg, "synth");
  if (!f.fixture.empty()) {
    if (f.fixture != "waste-survey") {
      throw Error(ErrorCode::kInvalidArgument, "unknown fixture '" + f.fixture + "' (expected waste-survey)");
    }
    const std::uint64_t seed = seed_of(cmd, cfg, 6);
    nlohmann::json index = nlohmann::json::array();
    for (const auto& t : survey_waste_targets()) {
      const auto samples = waste_fixture_samples(t, 256, 8, 8, seed);
      write_synthetic(samples, t.food_type, food_class_table(t.food_type), out / t.food_type);
      index.push_back((out / t.food_type / "manifest.json").string());
      std::cout << "wrote " << (out / t.food_type).string() << "\n";
    }
    write_json(out / "fixture.json", {{"manifests", index}});
    return kExitOk;
  }
  const SyntheticSpec spec = synth_spec(cmd, cfg);
  SyntheticDataset ds = synth_generate(spec, out);
  ds.manifest.entries = split_dataset(ds.manifest.entries, f.test_fraction, f.val_fraction, spec.seed);
  save_manifest(ds.manifest, out / "manifest.json");
  std::cout << "wrote " << ds.manifest.entries.size() << " samples to " << out.string() << "\n";
  return kExitOk;
}

// ---- augment -------------------------------------------------------------

int cmd_augment(const Command& cmd) {
  const Flags& f = cmd.flags();
  const nlohmann::json cfg = load_config(f.config);
  const DatasetManifest m = single_manifest(cmd, cfg);
  AugmentationSpec spec;
  if (cmd.given("--preset")) {
    spec = augment_preset(f.preset).spec;
  } else if (cfg.contains("augmentation")) {
    spec = augmentation_spec_from_json(cfg["augmentation"]);
  } else {
    spec = augment_preset(m.food_type).spec;
  }
  ExpandOptions opts;
  if (cfg.contains("multiplier")) {
    if (!cfg["multiplier"].is_number_integer()) config_fail("multiplier", "expected an integer");
    opts.multiplier = cfg["multiplier"].get<int>();
  }
  if (cmd.given("--multiplier")) opts.multiplier = f.multiplier;
  if (cfg.contains("include_original")) opts.include_original = cfg["include_original"].get<bool>();
  if (f.all_augmented) opts.include_original = false;
  if (opts.multiplier < 1) throw Error(ErrorCode::kInvalidArgument, "--multiplier must be >= 1");
  spec.validate();
  const std::uint64_t seed = seed_of(cmd, cfg, 1);
  const fs::path out = output_dir(cmd, cfg, "augment");

  std::vector<const ManifestEntry*> train;
  std::vector<LabeledImage> sources;
  for (const auto& e : m.entries) {
    if (e.split == Split::kTrain) {
      train.push_back(&e);
      sources.push_back(load_pair(m, e));
    }
  }
  const auto expanded = expand_training_set(sources, spec, opts, seed);

  DatasetManifest result;
  result.food_type = m.food_type;
  result.class_table = m.class_table;
  result.base_dir = out;
  fs::create_directories(out / "images");
  fs::create_directories(out / "masks");
  const auto per = static_cast<std::size_t>(opts.multiplier);
  for (std::size_t k = 0; k < expanded.size(); ++k) {
    const ManifestEntry& src = *train[k / per];
    char name[64];
    std::snprintf(name, sizeof(name), "aug_%05zu_%d", k / per, static_cast<int>(k % per));
    ManifestEntry e{std::string("images/") + name + ".png", std::string("masks/") + name + ".png",
                    src.stage, Split::kTrain};
    write_image(expanded[k].image, out / e.image);
    write_mask(expanded[k].mask, out / e.mask);
    result.entries.push_back(std::move(e));
  }
  for (const auto& e : m.entries) {
    if (e.split == Split::kTrain) continue;
    result.entries.push_back({absolute_of(m, e.image), absolute_of(m, e.mask), e.stage, e.split});
  }
  save_manifest(result, out / "manifest.json");
  write_json(out / "augmentation.json",
             {{"spec", to_json(spec)},
              {"multiplier", opts.multiplier},
              {"include_original", opts.include_original},
              {"seed", seed},
              {"train_before", sources.size()},
              {"train_after", expanded.size()}});
  std::cout << "train " << sources.size() << " -> " << expanded.size() << " entries in "
            << out.string() << "\n";
  return kExitOk;
}

// ---- train ---------------------------------------------------------------

int cmd_train(const Command& cmd) {
  const Flags& f = cmd.flags();
  const nlohmann::json cfg = load_config(f.config);

  // Everything is validated before any image is read.
  ModelConfig mc;
  if (cfg.contains("model")) mc = model_config_from_json(cfg["model"]);
  if (cmd.given("--arch")) mc.family = parse_family(f.arch);
  if (cmd.given("--width")) mc.base_width = f.width;
  TrainConfig tc;
  if (cfg.contains("train")) tc = train_config_from_json(cfg["train"]);
  if (cmd.given("--epochs")) tc.epochs = f.epochs;
  if (cmd.given("--batch")) tc.batch_size = f.batch;
  tc.seed = seed_of(cmd, cfg, tc.seed);
  tc.validate();
  (void)tc.effective_schedule();
  const std::uint64_t init_seed = mix_seed(tc.seed, 0x1A17);
  const DatasetManifest m = single_manifest(cmd, cfg);
  mc.num_classes = m.num_classes();
  const fs::path out = output_dir(cmd, cfg, "train");

  TrainData data{load_split(m, "train"), load_split(m, "val")};
  if (data.train.empty() || data.val.empty()) {
    throw Error(ErrorCode::kEmptySplit, "manifest needs non-empty train and val splits");
  }
  mc.input_size = data.train.front().image.width();
  mc.validate();
  Model model = Model::build(mc, init_seed);
  std::cout << family_name(mc.family) << "/" << mc.base_width << ": " << model.param_count()
            << " parameters, " << data.train.size() << " train / " << data.val.size() << " val\n";

  TrainHooks hooks;
  hooks.on_epoch = [](const EpochRecord& r) {
    std::printf("epoch %3d  lr %.1e  loss %.5f  train iou %.4f  val iou %.4f  val dice %.4f\n",
                r.epoch, r.lr, r.loss, r.train_iou, r.val_iou, r.val_dice);
    std::fflush(stdout);
  };
  const TrainResult res = train(tc, model, data, hooks);

  fs::create_directories(out);
  res.history.write_csv(out / "history.csv");
  nlohmann::json hist = nlohmann::json::array();
  for (const auto& r : res.history.epochs) {
    hist.push_back({{"epoch", r.epoch}, {"lr", r.lr}, {"loss", r.loss},
                    {"train_dice", r.train_dice}, {"train_iou", r.train_iou},
                    {"val_dice", r.val_dice}, {"val_iou", r.val_iou}});
  }
  write_json(out / "history.json", hist);
  const nlohmann::json summary = {{"best_epoch", res.best_epoch},
                                  {"best_val_weighted_iou", res.best_val_iou},
                                  {"param_count", model.param_count()},
                                  {"model", to_json(mc)},
                                  {"train", to_json(tc)},
                                  {"food_type", m.food_type},
                                  {"class_table", m.class_table}};
  save_checkpoint(out / "best.ckpt", model, nullptr, summary);
  write_json(out / "summary.json", summary);
  std::cout << "best epoch " << res.best_epoch << " (val weighted IoU " << res.best_val_iou
            << "), checkpoint " << (out / "best.ckpt").string() << "\n";
  return kExitOk;
}

// ---- evaluate ------------------------------------------------------------

std::string fmt(double v) {
  if (std::isnan(v)) return "";
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.6f", v);
  return buf;
}

std::string metrics_csv(const MetricsReport& r, const std::vector<std::string>& classes) {
  std::ostringstream os;
  os << "scope,class,pixel_accuracy,iou,dice,dpa\n";
  os << "aggregate," << aggregation_name(r.mode.mode) << ',' << fmt(r.pixel_accuracy) << ','
     << fmt(r.iou) << ',' << fmt(r.dice) << ',' << fmt(r.dpa) << '\n';
  for (std::size_t c = 0; c < r.class_iou.size(); ++c) {
    const std::string name = c < classes.size() ? classes[c] : std::to_string(c);
    os << "class," << c << " / " << name << ",," << fmt(r.class_iou[c]) << ','
       << fmt(r.class_dice[c]) << ',' << fmt(r.class_dpa[c]) << '\n';
  }
  return os.str();
}

int cmd_evaluate(const Command& cmd) {
  const Flags& f = cmd.flags();
  const nlohmann::json cfg = load_config(f.config);
  const AggregationMode mode = aggregation_of(cmd, cfg);
  check_split_name(f.split);
  if (f.checkpoint.empty() == f.pred_manifest.empty()) {
    throw Error(ErrorCode::kInvalidArgument, "give exactly one of --checkpoint or --pred-manifest");
  }
  const DatasetManifest m = single_manifest(cmd, cfg);
  const fs::path out = output_dir(cmd, cfg, "evaluate");

  std::vector<ImageMetrics> per;
  if (!f.checkpoint.empty()) {
    const Model model = model_from_checkpoint(load_checkpoint(f.checkpoint));
    if (model.config().num_classes != m.num_classes()) {
      throw Error(ErrorCode::kDimensionMismatch, "checkpoint and manifest class counts differ");
    }
    const auto split = load_split(m, f.split);
    if (split.empty()) throw Error(ErrorCode::kEmptySplit, "split '" + f.split + "' is empty");
    std::vector<Image> images;
    for (const auto& s : split) images.push_back(s.image);
    const auto preds = predict(model, images, f.batch);
    for (std::size_t i = 0; i < split.size(); ++i) per.push_back(image_metrics(preds[i], split[i].mask));
  } else {
    // Predictions are paired with ground truth by position within the split.
    const DatasetManifest pm = load_manifest(f.pred_manifest);
    std::vector<const ManifestEntry*> gt;
    std::vector<const ManifestEntry*> pr;
    for (const auto& e : m.entries) {
      if (entry_in(e, f.split)) gt.push_back(&e);
    }
    for (const auto& e : pm.entries) {
      if (entry_in(e, f.split)) pr.push_back(&e);
    }
    if (gt.size() != pr.size()) {
      throw Error(ErrorCode::kDimensionMismatch, "prediction manifest has " + std::to_string(pr.size()) +
                                                     " entries in the split, ground truth " +
                                                     std::to_string(gt.size()));
    }
    if (gt.empty()) throw Error(ErrorCode::kEmptySplit, "split '" + f.split + "' is empty");
    for (std::size_t i = 0; i < gt.size(); ++i) {
      per.push_back(image_metrics(read_mask(pm.resolve(pr[i]->mask), m.num_classes()),
                                  read_mask(m.resolve(gt[i]->mask), m.num_classes())));
    }
  }
  const MetricsReport report = summarize(per, mode);
  nlohmann::json j = to_json(report);
  j["split"] = f.split;
  j["class_table"] = m.class_table;
  write_json(out / "metrics.json", j);
  const std::string csv = metrics_csv(report, m.class_table);
  write_text(out / "metrics.csv", csv);
  std::cout << csv;
  return kExitOk;
}

// ---- predict -------------------------------------------------------------

int cmd_predict(const Command& cmd) {
  const Flags& f = cmd.flags();
  const nlohmann::json cfg = load_config(f.config);
  check_split_name(f.pred_split);
  if (f.checkpoint.empty()) throw Error(ErrorCode::kInvalidArgument, "--checkpoint is required");
  const DatasetManifest m = single_manifest(cmd, cfg);
  const Model model = model_from_checkpoint(load_checkpoint(f.checkpoint));
  if (model.config().num_classes != m.num_classes()) {
    throw Error(ErrorCode::kDimensionMismatch, "checkpoint and manifest class counts differ");
  }
  const fs::path out = output_dir(cmd, cfg, "predict");
  DatasetManifest result;
  result.food_type = m.food_type;
  result.class_table = m.class_table;
  result.base_dir = out;
  fs::create_directories(out / "masks");
  std::set<std::string> used;
  for (const auto& e : m.entries) {
    if (!entry_in(e, f.pred_split)) continue;
    if (e.image.empty()) throw Error(ErrorCode::kMissingFile, e.mask + " has no image");
    const std::vector<Image> img = {read_image(m.resolve(e.image))};
    const LabelMask pred = predict(model, img, 1).front();
    std::string stem = fs::path(e.image).stem().string();
    while (used.count(stem)) stem += "_";
    used.insert(stem);
    ManifestEntry pe{absolute_of(m, e.image), "masks/" + stem + ".png", e.stage, e.split};
    write_mask(pred, out / pe.mask);
    result.entries.push_back(std::move(pe));
  }
  if (result.entries.empty()) throw Error(ErrorCode::kEmptySplit, "no entries to predict");
  save_manifest(result, out / "manifest.json");
  std::cout << "wrote " << result.entries.size() << " predicted masks to " << out.string() << "\n";
  return kExitOk;
}

// ---- estimate ------------------------------------------------------------

int cmd_estimate(const Command& cmd) {
  const Flags& f = cmd.flags();
  const nlohmann::json cfg = load_config(f.config);
  WasteOptions opts;
  if (cfg.contains("clamp_eating_rate")) {
    if (!cfg["clamp_eating_rate"].is_boolean()) config_fail("clamp_eating_rate", "expected a boolean");
    opts.clamp_eating_rate = cfg["clamp_eating_rate"].get<bool>();
  }
  if (cmd.given("--clamp-eating-rate")) {
    if (f.clamp != "true" && f.clamp != "false") {
      throw Error(ErrorCode::kInvalidArgument, "--clamp-eating-rate expects true or false");
    }
    opts.clamp_eating_rate = f.clamp == "true";
  }
  std::vector<DatasetManifest> manifests;
  for (const auto& p : manifest_paths(cmd, cfg)) manifests.push_back(load_manifest(p));
  const fs::path out = output_dir(cmd, cfg, "estimate");

  std::vector<WasteReport> reports;
  nlohmann::json j = nlohmann::json::array();
  for (const auto& m : manifests) {
    reports.push_back(waste_report(m, opts));
    j.push_back(to_json(reports.back()));
  }
  std::ostringstream csv;
  write_waste_csv(csv, reports);
  write_text(out / "waste.csv", csv.str());
  write_json(out / "waste.json", {{"clamp_eating_rate", opts.clamp_eating_rate}, {"reports", j}});
  std::cout << csv.str();
  return kExitOk;
}

// ---- hist ----------------------------------------------------------------

int cmd_hist(const Command& cmd) {
  const Flags& f = cmd.flags();
  const nlohmann::json cfg = load_config(f.config);
  if (f.bins < 1) throw Error(ErrorCode::kInvalidArgument, "--bins must be >= 1");
  std::vector<DatasetManifest> manifests;
  for (const auto& p : manifest_paths(cmd, cfg)) manifests.push_back(load_manifest(p));
  const fs::path out = output_dir(cmd, cfg, "hist");

  std::ostringstream csv;
  csv << "food_type,stage,class,bin_lo,bin_hi,count\n";
  nlohmann::json j = nlohmann::json::array();
  for (const auto& m : manifests) {
    const int n = m.num_classes();
    // counts[stage][class][bin] over per-image proportions in percent.
    std::vector<std::vector<std::vector<int>>> counts(
        2, std::vector<std::vector<int>>(static_cast<std::size_t>(n), std::vector<int>(static_cast<std::size_t>(f.bins), 0)));
    for (const auto& e : m.entries) {
      const Proportions p = class_proportions(read_mask(m.resolve(e.mask), n));
      for (int c = 0; c < n; ++c) {
        const double pct = 100.0 * p.values[static_cast<std::size_t>(c)];
        const int bin = std::min(f.bins - 1, static_cast<int>(pct * f.bins / 100.0));
        ++counts[e.stage == Stage::kPre ? 0 : 1][static_cast<std::size_t>(c)][static_cast<std::size_t>(bin)];
      }
    }
    for (int s = 0; s < 2; ++s) {
      const char* stage = s == 0 ? "pre" : "post";
      for (int c = 0; c < n; ++c) {
        nlohmann::json bins = nlohmann::json::array();
        for (int b = 0; b < f.bins; ++b) {
          const double lo = 100.0 * b / f.bins;
          const double hi = 100.0 * (b + 1) / f.bins;
          const int k = counts[static_cast<std::size_t>(s)][static_cast<std::size_t>(c)][static_cast<std::size_t>(b)];
          char line[256];
          std::snprintf(line, sizeof(line), "%s,%s,%d / %s,%.2f,%.2f,%d\n", m.food_type.c_str(), stage,
                        c, m.class_table[static_cast<std::size_t>(c)].c_str(), lo, hi, k);
          csv << line;
          bins.push_back({{"lo", lo}, {"hi", hi}, {"count", k}});
        }
        j.push_back({{"food_type", m.food_type}, {"stage", stage}, {"class_index", c},
                     {"class_name", m.class_table[static_cast<std::size_t>(c)]}, {"bins", bins}});
      }
    }
  }
  write_text(out / "hist.csv", csv.str());
  write_json(out / "hist.json", j);
  std::cout << "wrote " << (out / "hist.csv").string() << "\n";
  return kExitOk;
}

// ---- bench ---------------------------------------------------------------

int cmd_bench(const Command& cmd) {
  const Flags& f = cmd.flags();
  const nlohmann::json cfg = load_config(f.config);
  ModelConfig mc;
  if (cfg.contains("model")) mc = model_config_from_json(cfg["model"]);
  if (cmd.given("--arch")) mc.family = parse_family(f.arch);
  if (cmd.given("--width")) mc.base_width = f.width;
  if (cmd.given("--classes")) mc.num_classes = f.classes;
  if (cmd.given("--size") || !cfg.contains("model")) mc.input_size = f.size;
  mc.validate();
  if (f.iters < 1 || f.warmup < 0 || f.batch < 1) {
    throw Error(ErrorCode::kInvalidArgument, "need --iters >= 1, --warmup >= 0, --batch >= 1");
  }
  const fs::path out = output_dir(cmd, cfg, "bench");
  const Model model = Model::build(mc, seed_of(cmd, cfg, 1));
  const ThroughputReport r = benchmark_throughput(model, f.batch, f.warmup, f.iters, seed_of(cmd, cfg, 1));
  nlohmann::json j = to_json(r);
  j["model"] = to_json(mc);
  j["param_count"] = model.param_count();
  write_json(out / "bench.json", j);
  std::ostringstream csv;
  csv << "arch,width,input_size,batch,param_count,mode,mean_ips,min_ips,max_ips\n";
  for (const auto& [mode, st] : {std::pair{"train_step", r.train_step}, std::pair{"inference", r.inference}}) {
    char line[256];
    std::snprintf(line, sizeof(line), "%s,%d,%d,%d,%zu,%s,%.4f,%.4f,%.4f\n",
                  std::string(family_name(mc.family)).c_str(), mc.base_width, mc.input_size, f.batch,
                  model.param_count(), mode, st.mean, st.min, st.max);
    csv << line;
  }
  write_text(out / "bench.csv", csv.str());
  std::cout << csv.str();
  return kExitOk;
}

int exit_for(ErrorCode code) {
  return code == ErrorCode::kDivergence || code == ErrorCode::kIoError ? kExitRuntime : kExitData;
}

}  // namespace

int run(const std::vector<std::string>& args) {
  CLI::App app{"Plate waste estimation and food segmentation toolkit", "platewaste"};
  app.require_subcommand(1);
  Flags f;

  auto add_common = [&](CLI::App* sub) {
    sub->add_option("--config", f.config, "JSON run configuration");
    sub->add_option("--out", f.out, "output directory");
    sub->add_option("--seed", f.seed, "random seed");
  };
  auto add_manifest = [&](CLI::App* sub, bool many) {
    auto* o = sub->add_option("--manifest", f.manifests, "dataset manifest");
    if (!many) o->expected(1);
  };
  auto add_model = [&](CLI::App* sub) {
    sub->add_option("--arch", f.arch, "unet or unetpp");
    sub->add_option("--width", f.width, "base width");
  };

  auto* synth = app.add_subcommand("synth", "generate a synthetic dataset or the waste-survey fixture");
  add_common(synth);
  synth->add_option("--fixture", f.fixture, "named fixture (waste-survey)");
  synth->add_option("--food", f.food, "built-in food type for the class table");
  synth->add_option("--classes", f.classes, "class count when no food type is given");
  synth->add_option("--size", f.size, "image side in pixels");
  synth->add_option("--n-pre", f.n_pre, "pre-consumption images");
  synth->add_option("--n-post", f.n_post, "post-consumption images");
  synth->add_option("--test-fraction", f.test_fraction, "fraction carved for test");
  synth->add_option("--val-fraction", f.val_fraction, "fraction of the rest for validation");

  auto* augment = app.add_subcommand("augment", "expand the train split with an augmentation pipeline");
  add_common(augment);
  add_manifest(augment, false);
  augment->add_option("--preset", f.preset, "built-in pipeline name");
  augment->add_option("--multiplier", f.multiplier, "outputs per training image");
  augment->add_flag("--all-augmented", f.all_augmented, "do not keep the untouched original");

  auto* trn = app.add_subcommand("train", "train a segmentation model");
  add_common(trn);
  add_manifest(trn, false);
  add_model(trn);
  trn->add_option("--epochs", f.epochs, "epoch budget");
  trn->add_option("--batch", f.batch, "batch size");

  auto* eval = app.add_subcommand("evaluate", "segmentation metrics on a split");
  add_common(eval);
  add_manifest(eval, false);
  eval->add_option("--checkpoint", f.checkpoint, "model checkpoint");
  eval->add_option("--pred-manifest", f.pred_manifest, "manifest of predicted masks");
  eval->add_option("--split", f.split, "train, val, test or all");
  eval->add_option("--aggregation", f.aggregation, "macro or weighted");
  eval->add_flag("--include-background", f.include_background, "count class 0 in aggregates");
  eval->add_option("--batch", f.batch, "inference batch size");

  auto* pred = app.add_subcommand("predict", "write predicted masks");
  add_common(pred);
  add_manifest(pred, false);
  pred->add_option("--checkpoint", f.checkpoint, "model checkpoint");
  pred->add_option("--split", f.pred_split, "train, val, test or all");

  auto* est = app.add_subcommand("estimate", "eating and remaining rates from pre/post masks");
  add_common(est);
  add_manifest(est, true);
  est->add_option("--clamp-eating-rate", f.clamp, "true or false (default true)");

  auto* hist = app.add_subcommand("hist", "per-class proportion histograms");
  add_common(hist);
  add_manifest(hist, true);
  hist->add_option("--bins", f.bins, "bins over 0..100 percent");

  auto* bench = app.add_subcommand("bench", "training and inference throughput");
  add_common(bench);
  add_model(bench);
  bench->add_option("--batch", f.batch, "batch size");
  bench->add_option("--size", f.size, "input side in pixels");
  bench->add_option("--classes", f.classes, "output classes");
  bench->add_option("--warmup", f.warmup, "untimed iterations");
  bench->add_option("--iters", f.iters, "timed iterations");

  std::vector<std::string> argv_tail(args.begin() + (args.empty() ? 0 : 1), args.end());
  std::reverse(argv_tail.begin(), argv_tail.end());
  try {
    app.parse(argv_tail);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitUsage;
  }
  try {
    CLI::App* sub = app.get_subcommands().front();
    const Command cmd(sub, &f);
    const std::string name = sub->get_name();
    if (name == "synth") return cmd_synth(cmd);
    if (name == "augment") return cmd_augment(cmd);
    if (name == "train") return cmd_train(cmd);
    if (name == "evaluate") return cmd_evaluate(cmd);
    if (name == "predict") return cmd_predict(cmd);
    if (name == "estimate") return cmd_estimate(cmd);
    if (name == "hist") return cmd_hist(cmd);
    if (name == "bench") return cmd_bench(cmd);
    return kExitUsage;
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    if (e.code() == ErrorCode::kInvalidArgument) return kExitUsage;
    return exit_for(e.code());
  } catch (const nlohmann::json::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitData;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitRuntime;
  }
}

int run(int argc, const char* const* argv) {
  return run(std::vector<std::string>(argv, argv + argc));
}

}  // namespace platewaste::cli
