#include "platewaste/metrics.hpp"

#include <cmath>
#include <limits>

#include "platewaste/error.hpp"

namespace platewaste {

std::string_view aggregation_name(Aggregation a) {
  return a == Aggregation::kMacro ? "macro" : "weighted";
}

Aggregation parse_aggregation(std::string_view text) {
  if (text == "macro") return Aggregation::kMacro;
  if (text == "weighted") return Aggregation::kWeighted;
  throw Error(ErrorCode::kInvalidArgument,
              "aggregation must be 'macro' or 'weighted', got '" + std::string(text) + "'");
}

double pixel_accuracy(const ConfusionCounts& conf) {
  if (conf.total_pixels <= 0) throw Error(ErrorCode::kEmptyInput, "no pixels");
  std::int64_t correct = 0;
  for (auto t : conf.tp) correct += t;
  return static_cast<double>(correct) / static_cast<double>(conf.total_pixels);
}

namespace {

PerClassMetric overlap_metric(const ConfusionCounts& conf, std::int64_t tp_weight) {
  const auto n = static_cast<std::size_t>(conf.num_classes());
  PerClassMetric out{std::vector<double>(n, 0.0), std::vector<bool>(n, false)};
  for (std::size_t c = 0; c < n; ++c) {
    const std::int64_t den = tp_weight * conf.tp[c] + conf.fp[c] + conf.fn[c];
    if (den > 0) {
      out.values[c] = static_cast<double>(tp_weight * conf.tp[c]) / static_cast<double>(den);
      out.defined[c] = true;
    }
  }
  return out;
}

}  // namespace

PerClassMetric per_class_iou(const ConfusionCounts& conf) { return overlap_metric(conf, 1); }

PerClassMetric per_class_dice(const ConfusionCounts& conf) { return overlap_metric(conf, 2); }

PerClassMetric per_class_dpa(const ClassCounts& pred_counts, const ClassCounts& gt_counts) {
  if (pred_counts.counts.size() != gt_counts.counts.size()) {
    throw Error(ErrorCode::kDimensionMismatch, "class count vectors differ in length");
  }
  const std::int64_t t_pred = pred_counts.total();
  const std::int64_t t_gt = gt_counts.total();
  if (t_pred != t_gt || t_gt <= 0) {
    throw Error(ErrorCode::kAreaMismatch, "predicted area " + std::to_string(t_pred) +
                                              " vs ground-truth area " + std::to_string(t_gt));
  }
  const auto n = gt_counts.counts.size();
  PerClassMetric out{std::vector<double>(n, 0.0), std::vector<bool>(n, false)};
  const auto total = static_cast<double>(t_gt);
  for (std::size_t c = 0; c < n; ++c) {
    const std::int64_t p = pred_counts.counts[c];
    const std::int64_t g = gt_counts.counts[c];
    // Equal counts give exactly 1, independent of rounding in the shares.
    out.values[c] =
        p == g ? 1.0
               : 1.0 - std::abs(static_cast<double>(p) / total - static_cast<double>(g) / total);
    out.defined[c] = p > 0 || g > 0;
  }
  return out;
}

double aggregate(const PerClassMetric& metric, const ClassCounts& gt_counts,
                 const AggregationMode& mode) {
  if (metric.values.size() != gt_counts.counts.size()) {
    throw Error(ErrorCode::kDimensionMismatch, "metric and count vectors differ in length");
  }
  const std::size_t first = mode.include_background ? 0 : 1;
  double num = 0.0;
  double den = 0.0;
  for (std::size_t c = first; c < metric.values.size(); ++c) {
    if (!metric.defined[c]) continue;
    const double w =
        mode.mode == Aggregation::kMacro ? 1.0 : static_cast<double>(gt_counts.counts[c]);
    num += w * metric.values[c];
    den += w;
  }
  if (den <= 0.0) {
    throw Error(ErrorCode::kNoDefinedClasses, "no defined class with positive weight");
  }
  return num / den;
}

ImageMetrics image_metrics(const LabelMask& pred, const LabelMask& gt) {
  const ConfusionCounts conf = confusion_counts(pred, gt);
  ImageMetrics m;
  m.pixel_accuracy = pixel_accuracy(conf);
  m.iou = per_class_iou(conf);
  m.dice = per_class_dice(conf);
  m.gt_counts = class_pixel_counts(gt);
  m.dpa = per_class_dpa(class_pixel_counts(pred), m.gt_counts);
  return m;
}

MetricsReport summarize(const std::vector<ImageMetrics>& images, const AggregationMode& mode) {
  if (images.empty()) throw Error(ErrorCode::kEmptySplit, "no images to summarize");
  const auto n = images.front().gt_counts.counts.size();
  MetricsReport r;
  r.mode = mode;
  r.num_images = static_cast<int>(images.size());

  std::vector<double> sums[3] = {std::vector<double>(n, 0.0), std::vector<double>(n, 0.0),
                                 std::vector<double>(n, 0.0)};
  std::vector<int> hits[3] = {std::vector<int>(n, 0), std::vector<int>(n, 0),
                              std::vector<int>(n, 0)};
  double pa = 0.0;
  double agg[3] = {0.0, 0.0, 0.0};
  int used = 0;
  for (const auto& m : images) {
    pa += m.pixel_accuracy;
    const PerClassMetric* per[3] = {&m.iou, &m.dice, &m.dpa};
    for (int k = 0; k < 3; ++k) {
      for (std::size_t c = 0; c < n; ++c) {
        if (per[k]->defined[c]) {
          sums[k][c] += per[k]->values[c];
          ++hits[k][c];
        }
      }
    }
    try {
      const double a0 = aggregate(m.iou, m.gt_counts, mode);
      const double a1 = aggregate(m.dice, m.gt_counts, mode);
      const double a2 = aggregate(m.dpa, m.gt_counts, mode);
      agg[0] += a0;
      agg[1] += a1;
      agg[2] += a2;
      ++used;
    } catch (const Error& e) {
      if (e.code() != ErrorCode::kNoDefinedClasses) throw;
      ++r.num_skipped;
    }
  }
  r.pixel_accuracy = pa / static_cast<double>(images.size());
  const double nan = std::numeric_limits<double>::quiet_NaN();
  r.iou = used ? agg[0] / used : nan;
  r.dice = used ? agg[1] / used : nan;
  r.dpa = used ? agg[2] / used : nan;
  std::vector<double>* per_out[3] = {&r.class_iou, &r.class_dice, &r.class_dpa};
  for (int k = 0; k < 3; ++k) {
    per_out[k]->resize(n);
    for (std::size_t c = 0; c < n; ++c) {
      (*per_out[k])[c] = hits[k][c] ? sums[k][c] / hits[k][c] : nan;
    }
  }
  return r;
}

namespace {

nlohmann::json number_or_null(double v) {
  return std::isnan(v) ? nlohmann::json(nullptr) : nlohmann::json(v);
}

nlohmann::json vector_json(const std::vector<double>& v) {
  nlohmann::json out = nlohmann::json::array();
  for (double x : v) out.push_back(number_or_null(x));
  return out;
}

}  // namespace

nlohmann::json to_json(const MetricsReport& report) {
  return {{"aggregation", aggregation_name(report.mode.mode)},
          {"include_background", report.mode.include_background},
          {"num_images", report.num_images},
          {"num_skipped", report.num_skipped},
          {"pixel_accuracy", report.pixel_accuracy},
          {"iou", number_or_null(report.iou)},
          {"dice", number_or_null(report.dice)},
          {"dpa", number_or_null(report.dpa)},
          {"per_class",
           {{"iou", vector_json(report.class_iou)},
            {"dice", vector_json(report.class_dice)},
            {"dpa", vector_json(report.class_dpa)}}}};
}

}  // namespace platewaste
