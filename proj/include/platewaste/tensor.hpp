#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

namespace platewaste {

struct Shape4 {
  int n = 0;
  int c = 0;
  int h = 0;
  int w = 0;

  std::size_t numel() const {
    return static_cast<std::size_t>(n) * static_cast<std::size_t>(c) *
           static_cast<std::size_t>(h) * static_cast<std::size_t>(w);
  }
  std::string str() const;
  friend bool operator==(const Shape4&, const Shape4&) = default;
};

// Dense NCHW tensor of doubles.
class Tensor4 {
 public:
  Tensor4() = default;
  explicit Tensor4(Shape4 shape, double fill = 0.0) : shape_(shape), data_(shape.numel(), fill) {}
  Tensor4(int n, int c, int h, int w, double fill = 0.0) : Tensor4(Shape4{n, c, h, w}, fill) {}

  const Shape4& shape() const noexcept { return shape_; }
  int n() const noexcept { return shape_.n; }
  int c() const noexcept { return shape_.c; }
  int h() const noexcept { return shape_.h; }
  int w() const noexcept { return shape_.w; }
  std::size_t size() const noexcept { return data_.size(); }
  std::size_t plane() const noexcept {
    return static_cast<std::size_t>(shape_.h) * static_cast<std::size_t>(shape_.w);
  }

  double* data() noexcept { return data_.data(); }
  const double* data() const noexcept { return data_.data(); }
  std::span<double> span() noexcept { return data_; }
  std::span<const double> span() const noexcept { return data_; }

  double& operator()(int n, int c, int y, int x) { return data_[offset(n, c, y, x)]; }
  double operator()(int n, int c, int y, int x) const { return data_[offset(n, c, y, x)]; }

  // Pointer to the (n, c) plane.
  double* channel(int n, int c) { return data_.data() + offset(n, c, 0, 0); }
  const double* channel(int n, int c) const { return data_.data() + offset(n, c, 0, 0); }
  // Pointer to sample n.
  double* sample(int n) { return channel(n, 0); }
  const double* sample(int n) const { return channel(n, 0); }

  void fill(double v);

  friend bool operator==(const Tensor4&, const Tensor4&) = default;

 private:
  std::size_t offset(int n, int c, int y, int x) const {
    return ((static_cast<std::size_t>(n) * shape_.c + static_cast<std::size_t>(c)) * shape_.h +
            static_cast<std::size_t>(y)) *
               shape_.w +
           static_cast<std::size_t>(x);
  }

  Shape4 shape_;
  std::vector<double> data_;
};

}  // namespace platewaste
