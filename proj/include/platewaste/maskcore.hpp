#pragma once

#include <cstdint>
#include <span>
#include <vector>

namespace platewaste {

using Label = std::uint8_t;

// H x W class-index map. Class 0 is background; labels are dense 0..C-1.
// Construction validates every label, so a LabelMask in hand is always valid.
class LabelMask {
 public:
  LabelMask() = default;
  LabelMask(int width, int height, int num_classes);  // all background
  LabelMask(int width, int height, int num_classes, std::vector<Label> labels);

  int width() const noexcept { return width_; }
  int height() const noexcept { return height_; }
  int num_classes() const noexcept { return num_classes_; }
  std::size_t size() const noexcept { return labels_.size(); }

  Label at(int x, int y) const { return labels_[index(x, y)]; }
  // Throws LabelOutOfRange when value >= num_classes.
  void set(int x, int y, Label value);

  std::span<const Label> labels() const noexcept { return labels_; }

  bool same_shape(const LabelMask& other) const noexcept {
    return width_ == other.width_ && height_ == other.height_ &&
           num_classes_ == other.num_classes_;
  }

  friend bool operator==(const LabelMask&, const LabelMask&) = default;

 private:
  std::size_t index(int x, int y) const {
    return static_cast<std::size_t>(y) * static_cast<std::size_t>(width_) +
           static_cast<std::size_t>(x);
  }

  int width_ = 0;
  int height_ = 0;
  int num_classes_ = 0;
  std::vector<Label> labels_;
};

struct ClassCounts {
  std::vector<std::int64_t> counts;

  std::int64_t total() const;
  int num_classes() const { return static_cast<int>(counts.size()); }
  ClassCounts& operator+=(const ClassCounts& other);
};

// Per-class fractions of the mask area.
struct Proportions {
  std::vector<double> values;
};

struct ConfusionCounts {
  std::vector<std::int64_t> tp;
  std::vector<std::int64_t> fp;
  std::vector<std::int64_t> fn;
  std::int64_t total_pixels = 0;

  int num_classes() const { return static_cast<int>(tp.size()); }
};

ClassCounts class_pixel_counts(const LabelMask& mask);

// values[c] = counts[c] / (H*W).
Proportions class_proportions(const LabelMask& mask);
Proportions proportions_from_counts(const ClassCounts& counts);

// Pixel-wise tp/fp/fn per class. Throws DimensionMismatch on shape or class
// count disagreement.
ConfusionCounts confusion_counts(const LabelMask& pred, const LabelMask& gt);

}  // namespace platewaste
