#include "platewaste/wastecalc.hpp"

#include <cstdio>
#include <numeric>
#include <ostream>

#include "platewaste/dataio.hpp"
#include "platewaste/error.hpp"

namespace platewaste {

PreBenchmark pooled_pre_benchmark(std::span<const LabelMask> pre_masks) {
  if (pre_masks.empty()) {
    throw Error(ErrorCode::kEmptyInput, "no pre-consumption masks");
  }
  ClassCounts pooled;
  for (const auto& mask : pre_masks) {
    if (mask.num_classes() != pre_masks.front().num_classes()) {
      throw Error(ErrorCode::kDimensionMismatch, "pre masks disagree on num_classes");
    }
    pooled += class_pixel_counts(mask);
  }
  PreBenchmark out;
  out.values = proportions_from_counts(pooled).values;
  out.n_pre_images = static_cast<int>(pre_masks.size());
  return out;
}

double eating_rate(double benchmark, double post_prop, bool clamp) {
  if (!(benchmark > 0.0)) {
    throw Error(ErrorCode::kZeroBenchmark, "class never served (benchmark 0)");
  }
  const double rate = (benchmark - post_prop) / benchmark * 100.0;
  return clamp && rate < 0.0 ? 0.0 : rate;
}

double mean_eating_rate(std::span<const double> rates) {
  if (rates.empty()) throw Error(ErrorCode::kEmptyInput, "no eating rates to average");
  return std::accumulate(rates.begin(), rates.end(), 0.0) / static_cast<double>(rates.size());
}

EatingRecord dish_eating_rates(const PreBenchmark& benchmark, const LabelMask& post_mask,
                               const std::string& dish_id, bool clamp) {
  if (static_cast<int>(benchmark.values.size()) != post_mask.num_classes()) {
    throw Error(ErrorCode::kDimensionMismatch, "post mask class count differs from benchmark");
  }
  const Proportions post = class_proportions(post_mask);
  EatingRecord rec;
  rec.dish_id = dish_id;
  rec.rates.assign(post.values.size(), 0.0);
  for (std::size_t c = 1; c < post.values.size(); ++c) {
    try {
      rec.rates[c] = eating_rate(benchmark.values[c], post.values[c], clamp);
    } catch (const Error& e) {
      throw Error(e.code(), "class " + std::to_string(c) + ": " + e.detail());
    }
  }
  return rec;
}

WasteReport waste_report(const std::string& food_type,
                         std::span<const std::string> class_names,
                         std::span<const LabelMask> pre_masks,
                         std::span<const LabelMask> post_masks,
                         const WasteOptions& options) {
  if (post_masks.empty()) throw Error(ErrorCode::kEmptyInput, "no post-consumption masks");
  const PreBenchmark bench = pooled_pre_benchmark(pre_masks);
  const auto num_classes = bench.values.size();

  ClassCounts post_pooled;
  std::vector<EatingRecord> dishes;
  std::vector<EatingRecord> raw_dishes;
  dishes.reserve(post_masks.size());
  raw_dishes.reserve(post_masks.size());
  for (std::size_t j = 0; j < post_masks.size(); ++j) {
    post_pooled += class_pixel_counts(post_masks[j]);
    dishes.push_back(dish_eating_rates(bench, post_masks[j], std::to_string(j),
                                       options.clamp_eating_rate));
    raw_dishes.push_back(dish_eating_rates(bench, post_masks[j], std::to_string(j), false));
  }
  const Proportions post_avg = proportions_from_counts(post_pooled);

  WasteReport report;
  report.food_type = food_type;
  report.n_pre = bench.n_pre_images;
  report.n_post = static_cast<int>(post_masks.size());
  std::vector<double> per_dish(dishes.size());
  for (std::size_t c = 1; c < num_classes; ++c) {
    WasteRow row;
    row.class_index = static_cast<int>(c);
    row.class_name = c < class_names.size() ? class_names[c] : "class" + std::to_string(c);
    row.pre_avg = bench.values[c];
    row.post_avg = post_avg.values[c];
    for (std::size_t j = 0; j < dishes.size(); ++j) per_dish[j] = dishes[j].rates[c];
    row.eating_rate = mean_eating_rate(per_dish);
    row.remaining_rate = remaining_rate(row.eating_rate);
    for (std::size_t j = 0; j < raw_dishes.size(); ++j) per_dish[j] = raw_dishes[j].rates[c];
    row.raw_eating_rate = mean_eating_rate(per_dish);
    report.total_pre += row.pre_avg;
    report.total_post += row.post_avg;
    report.rows.push_back(std::move(row));
  }
  return report;
}

WasteReport waste_report(const DatasetManifest& manifest, const WasteOptions& options) {
  std::vector<LabelMask> pre;
  std::vector<LabelMask> post;
  const int num_classes = static_cast<int>(manifest.class_table.size());
  for (const auto& entry : manifest.entries) {
    LabelMask mask = read_mask(manifest.resolve(entry.mask), num_classes);
    (entry.stage == Stage::kPre ? pre : post).push_back(std::move(mask));
  }
  if (pre.empty()) throw Error(ErrorCode::kEmptyInput, "manifest has no pre-consumption entries");
  if (post.empty()) throw Error(ErrorCode::kEmptyInput, "manifest has no post-consumption entries");
  return waste_report(manifest.food_type, manifest.class_table, pre, post, options);
}

nlohmann::json to_json(const WasteReport& report) {
  nlohmann::json rows = nlohmann::json::array();
  for (const auto& r : report.rows) {
    rows.push_back({{"class_index", r.class_index},
                    {"class_name", r.class_name},
                    {"pre_weighted_avg", r.pre_avg},
                    {"post_weighted_avg", r.post_avg},
                    {"eating_rate", r.eating_rate},
                    {"remaining_rate", r.remaining_rate},
                    {"raw_eating_rate", r.raw_eating_rate}});
  }
  return {{"food_type", report.food_type},
          {"n_pre", report.n_pre},
          {"n_post", report.n_post},
          {"total_pre", report.total_pre},
          {"total_post", report.total_post},
          {"rows", rows}};
}

namespace {

std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char ch : s) {
    if (ch == '"') out += '"';
    out += ch;
  }
  return out + "\"";
}

std::string fixed(double v, int decimals) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.*f", decimals, v);
  return buf;
}

}  // namespace

void write_waste_csv(std::ostream& out, std::span<const WasteReport> reports, bool header) {
  if (header) {
    out << "food_type,class,pre_weighted_avg,post_weighted_avg,eating_rate,remaining_rate\n";
  }
  for (const auto& report : reports) {
    for (const auto& r : report.rows) {
      out << csv_field(report.food_type) << ','
          << csv_field(std::to_string(r.class_index) + " / " + r.class_name) << ','
          << fixed(r.pre_avg, 3) << ',' << fixed(r.post_avg, 3) << ','
          << fixed(r.eating_rate, 1) << ',' << fixed(r.remaining_rate, 1) << '\n';
    }
    out << csv_field(report.food_type) << ",Total," << fixed(report.total_pre, 3) << ','
        << fixed(report.total_post, 3) << ",,\n";
  }
}

}  // namespace platewaste
