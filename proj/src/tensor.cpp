#include "platewaste/tensor.hpp"

#include <algorithm>

namespace platewaste {

std::string Shape4::str() const {
  return "(" + std::to_string(n) + ", " + std::to_string(c) + ", " + std::to_string(h) + ", " +
         std::to_string(w) + ")";
}

void Tensor4::fill(double v) { std::fill(data_.begin(), data_.end(), v); }

}  // namespace platewaste
