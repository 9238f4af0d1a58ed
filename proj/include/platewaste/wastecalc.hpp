#pragma once

#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "platewaste/maskcore.hpp"

namespace platewaste {

struct DatasetManifest;

// Pooled mean pre-consumption proportion per class.
struct PreBenchmark {
  std::vector<double> values;
  int n_pre_images = 0;
};

struct EatingRecord {
  std::string dish_id;
  std::vector<double> rates;  // percent, index = class; background entry unused
};

struct WasteRow {
  int class_index = 0;
  std::string class_name;
  double pre_avg = 0.0;
  double post_avg = 0.0;
  double eating_rate = 0.0;     // percent
  double remaining_rate = 0.0;  // percent
  double raw_eating_rate = 0.0; // before clamping
};

struct WasteReport {
  std::string food_type;
  std::vector<WasteRow> rows;  // food classes only, ascending index
  int n_pre = 0;
  int n_post = 0;
  double total_pre = 0.0;
  double total_post = 0.0;
};

struct WasteOptions {
  // Negative per-dish eating rates (post proportion above the benchmark)
  // are clamped to 0 unless disabled.
  bool clamp_eating_rate = true;
};

// Pooled pixel counts over all masks divided by pooled area.
// Throws EmptyInput on an empty list, DimensionMismatch on mixed class counts.
PreBenchmark pooled_pre_benchmark(std::span<const LabelMask> pre_masks);

// ((benchmark - post) / benchmark) * 100. Throws ZeroBenchmark when
// benchmark <= 0.
double eating_rate(double benchmark, double post_prop, bool clamp = false);

double mean_eating_rate(std::span<const double> rates);

inline double remaining_rate(double mean_eating) { return 100.0 - mean_eating; }

EatingRecord dish_eating_rates(const PreBenchmark& benchmark, const LabelMask& post_mask,
                               const std::string& dish_id, bool clamp);

WasteReport waste_report(const std::string& food_type,
                         std::span<const std::string> class_names,
                         std::span<const LabelMask> pre_masks,
                         std::span<const LabelMask> post_masks,
                         const WasteOptions& options = {});

// Loads every pre/post mask named by the manifest and builds the report.
WasteReport waste_report(const DatasetManifest& manifest, const WasteOptions& options = {});

nlohmann::json to_json(const WasteReport& report);

// food_type, class, pre/post weighted averages, eating and remaining rate.
// Proportions to 3 decimals, rates to 1.
void write_waste_csv(std::ostream& out, std::span<const WasteReport> reports,
                     bool header = true);

}  // namespace platewaste
