#include "platewaste/maskcore.hpp"

#include <numeric>
#include <string>

#include "platewaste/error.hpp"

namespace platewaste {

namespace {

void check_geometry(int width, int height, int num_classes) {
  if (width <= 0 || height <= 0) {
    throw Error(ErrorCode::kInvalidArgument,
                "mask dimensions must be positive, got " + std::to_string(width) +
                    "x" + std::to_string(height));
  }
  if (num_classes < 1 || num_classes > 256) {
    throw Error(ErrorCode::kInvalidArgument,
                "num_classes must be in [1, 256], got " + std::to_string(num_classes));
  }
}

}  // namespace

LabelMask::LabelMask(int width, int height, int num_classes)
    : width_(width), height_(height), num_classes_(num_classes) {
  check_geometry(width, height, num_classes);
  labels_.assign(static_cast<std::size_t>(width) * static_cast<std::size_t>(height), 0);
}

LabelMask::LabelMask(int width, int height, int num_classes, std::vector<Label> labels)
    : width_(width), height_(height), num_classes_(num_classes), labels_(std::move(labels)) {
  check_geometry(width, height, num_classes);
  const auto expected = static_cast<std::size_t>(width) * static_cast<std::size_t>(height);
  if (labels_.size() != expected) {
    throw Error(ErrorCode::kDimensionMismatch,
                "label buffer has " + std::to_string(labels_.size()) + " entries, expected " +
                    std::to_string(expected));
  }
  for (std::size_t i = 0; i < labels_.size(); ++i) {
    if (labels_[i] >= num_classes) {
      throw Error(ErrorCode::kLabelOutOfRange,
                  "label " + std::to_string(labels_[i]) + " at pixel " + std::to_string(i) +
                      " exceeds num_classes " + std::to_string(num_classes));
    }
  }
}

void LabelMask::set(int x, int y, Label value) {
  if (value >= num_classes_) {
    throw Error(ErrorCode::kLabelOutOfRange,
                "label " + std::to_string(value) + " >= num_classes " +
                    std::to_string(num_classes_));
  }
  labels_[index(x, y)] = value;
}

std::int64_t ClassCounts::total() const {
  return std::accumulate(counts.begin(), counts.end(), std::int64_t{0});
}

ClassCounts& ClassCounts::operator+=(const ClassCounts& other) {
  if (counts.empty()) counts.assign(other.counts.size(), 0);
  if (counts.size() != other.counts.size()) {
    throw Error(ErrorCode::kDimensionMismatch, "class count vectors differ in length");
  }
  for (std::size_t c = 0; c < counts.size(); ++c) counts[c] += other.counts[c];
  return *this;
}

ClassCounts class_pixel_counts(const LabelMask& mask) {
  ClassCounts out;
  out.counts.assign(static_cast<std::size_t>(mask.num_classes()), 0);
  for (Label v : mask.labels()) ++out.counts[v];
  return out;
}

Proportions proportions_from_counts(const ClassCounts& counts) {
  const std::int64_t total = counts.total();
  if (total <= 0) throw Error(ErrorCode::kEmptyInput, "no pixels to take proportions of");
  Proportions out;
  out.values.reserve(counts.counts.size());
  for (std::int64_t n : counts.counts) {
    out.values.push_back(static_cast<double>(n) / static_cast<double>(total));
  }
  return out;
}

Proportions class_proportions(const LabelMask& mask) {
  return proportions_from_counts(class_pixel_counts(mask));
}

ConfusionCounts confusion_counts(const LabelMask& pred, const LabelMask& gt) {
  if (!pred.same_shape(gt)) {
    throw Error(ErrorCode::kDimensionMismatch,
                "prediction " + std::to_string(pred.width()) + "x" +
                    std::to_string(pred.height()) + "/C" + std::to_string(pred.num_classes()) +
                    " vs ground truth " + std::to_string(gt.width()) + "x" +
                    std::to_string(gt.height()) + "/C" + std::to_string(gt.num_classes()));
  }
  const auto c = static_cast<std::size_t>(gt.num_classes());
  ConfusionCounts out;
  out.tp.assign(c, 0);
  out.fp.assign(c, 0);
  out.fn.assign(c, 0);
  out.total_pixels = static_cast<std::int64_t>(gt.size());
  const auto p = pred.labels();
  const auto g = gt.labels();
  for (std::size_t i = 0; i < g.size(); ++i) {
    if (p[i] == g[i]) {
      ++out.tp[g[i]];
    } else {
      ++out.fp[p[i]];
      ++out.fn[g[i]];
    }
  }
  return out;
}

}  // namespace platewaste
