#pragma once

#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "platewaste/maskcore.hpp"

namespace platewaste {

// Per-class score; defined[c] is false when class c is absent from both
// prediction and ground truth (0/0), and such classes never enter an average.
struct PerClassMetric {
  std::vector<double> values;
  std::vector<bool> defined;
};

enum class Aggregation { kMacro, kWeighted };

struct AggregationMode {
  Aggregation mode = Aggregation::kWeighted;
  bool include_background = false;
};

std::string_view aggregation_name(Aggregation a);
// Accepts "macro" / "weighted"; throws InvalidArgument otherwise.
Aggregation parse_aggregation(std::string_view text);

// Correct pixels over all pixels.
double pixel_accuracy(const ConfusionCounts& conf);

PerClassMetric per_class_iou(const ConfusionCounts& conf);
PerClassMetric per_class_dice(const ConfusionCounts& conf);

// 1 - |pred share - gt share| per class. Throws AreaMismatch when the two
// count vectors describe different areas.
PerClassMetric per_class_dpa(const ClassCounts& pred_counts, const ClassCounts& gt_counts);

// Macro: plain mean over defined classes. Weighted: sum(n_c v_c) / sum(n_c)
// with n_c the ground-truth pixel count. Throws NoDefinedClasses when nothing
// is left to average.
double aggregate(const PerClassMetric& metric, const ClassCounts& gt_counts,
                 const AggregationMode& mode);

// Metrics of one prediction/ground-truth pair.
struct ImageMetrics {
  double pixel_accuracy = 0.0;
  PerClassMetric iou;
  PerClassMetric dice;
  PerClassMetric dpa;
  ClassCounts gt_counts;
};

ImageMetrics image_metrics(const LabelMask& pred, const LabelMask& gt);

// Split-level report: per-image values averaged over images.
struct MetricsReport {
  AggregationMode mode;
  int num_images = 0;
  // Images whose aggregate had no defined class (e.g. an empty plate predicted
  // empty) are left out of the aggregated means and counted here.
  int num_skipped = 0;
  double pixel_accuracy = 0.0;
  double iou = 0.0;
  double dice = 0.0;
  double dpa = 0.0;
  // Per-class means over the images where the class is defined; NaN if never.
  std::vector<double> class_iou;
  std::vector<double> class_dice;
  std::vector<double> class_dpa;
};

MetricsReport summarize(const std::vector<ImageMetrics>& images, const AggregationMode& mode);

nlohmann::json to_json(const MetricsReport& report);

}  // namespace platewaste
