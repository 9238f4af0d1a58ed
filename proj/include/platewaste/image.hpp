#pragma once

#include <span>
#include <vector>

#include "platewaste/tensor.hpp"

namespace platewaste {

// RGB image, planar (R plane, G plane, B plane), values in [0, 1].
class Image {
 public:
  static constexpr int kChannels = 3;

  Image() = default;
  Image(int width, int height, float fill = 0.0f)
      : width_(width),
        height_(height),
        data_(static_cast<std::size_t>(width) * static_cast<std::size_t>(height) * kChannels,
              fill) {}

  int width() const noexcept { return width_; }
  int height() const noexcept { return height_; }
  std::size_t plane() const noexcept {
    return static_cast<std::size_t>(width_) * static_cast<std::size_t>(height_);
  }

  float& at(int c, int x, int y) { return data_[c * plane() + idx(x, y)]; }
  float at(int c, int x, int y) const { return data_[c * plane() + idx(x, y)]; }

  std::span<float> data() noexcept { return data_; }
  std::span<const float> data() const noexcept { return data_; }

  friend bool operator==(const Image&, const Image&) = default;

 private:
  std::size_t idx(int x, int y) const {
    return static_cast<std::size_t>(y) * static_cast<std::size_t>(width_) +
           static_cast<std::size_t>(x);
  }

  int width_ = 0;
  int height_ = 0;
  std::vector<float> data_;
};

// Stacks equally sized images into a (B, 3, H, W) tensor.
Tensor4 to_tensor(std::span<const Image> images);
Tensor4 to_tensor(std::span<const Image* const> images);

}  // namespace platewaste
