#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "platewaste/tensor.hpp"

namespace platewaste {

enum class Family { kUNet, kUNetPP };

std::string_view family_name(Family f);
// "unet" / "unetpp"; throws InvalidConfig otherwise.
Family parse_family(std::string_view text);

struct ModelConfig {
  Family family = Family::kUNet;
  int base_width = 64;
  int depth = 5;
  int in_channels = 3;
  int num_classes = 2;
  int input_size = 256;

  // Throws InvalidConfig with the offending field.
  void validate() const;
  int width_at(int level) const { return base_width << level; }
  friend bool operator==(const ModelConfig&, const ModelConfig&) = default;
};

nlohmann::json to_json(const ModelConfig& config);
ModelConfig model_config_from_json(const nlohmann::json& j);

// Named slice of the flat parameter vector.
struct ParamTensor {
  std::string name;
  std::vector<int> shape;
  std::size_t offset = 0;
  std::size_t size = 0;
};

struct ConvLayer {
  int in = 0;
  int out = 0;
  int kernel = 3;  // 3 (padding 1) or 1
  std::size_t weight = 0;  // offsets into the parameter vector
  std::size_t bias = 0;
};

// 2x2 stride-2 transposed convolution; weight laid out (in, out, 2, 2).
struct UpLayer {
  int in = 0;
  int out = 0;
  std::size_t weight = 0;
  std::size_t bias = 0;
};

// One X^{level,column} node: concat(skips..., up(up_source)) or the pooled
// previous encoder output, followed by two 3x3 conv + ReLU.
struct GraphNode {
  std::string name;
  int level = 0;
  int column = 0;
  std::vector<int> skips;
  int up_source = -1;
  int pool_source = -1;  // -1 with no skips and no up source means the image
  UpLayer up;
  ConvLayer conv1;
  ConvLayer conv2;
};

class ForwardCache;

class Model {
 public:
  // Builds the graph and initializes parameters from init_seed.
  static Model build(const ModelConfig& config, std::uint64_t init_seed);

  const ModelConfig& config() const noexcept { return config_; }
  std::uint64_t init_seed() const noexcept { return init_seed_; }
  std::size_t param_count() const noexcept { return params_.size(); }
  std::span<double> parameters() noexcept { return params_; }
  std::span<const double> parameters() const noexcept { return params_; }
  // Throws ShapeMismatch when the size differs from param_count().
  void set_parameters(std::span<const double> values);
  const std::vector<ParamTensor>& tensors() const noexcept { return tensors_; }
  const std::vector<GraphNode>& nodes() const noexcept { return nodes_; }

  // (B, in_channels, H, W) -> (B, num_classes, H, W). H and W must be
  // divisible by 2^(depth-1). Pass a cache to enable backward().
  Tensor4 forward(const Tensor4& images, ForwardCache* cache = nullptr) const;

  // Accumulates d loss / d params into grads (size param_count()).
  void backward(const ForwardCache& cache, const Tensor4& grad_logits,
                std::span<double> grads) const;

  // Output shape of every graph node for a given input size, from shape
  // arithmetic alone.
  std::vector<Shape4> trace_shapes(int batch, int height, int width) const;
  // Deepest encoder activation (X^{depth-1,0}) for the given input.
  Shape4 bottleneck_shape(int batch, int height, int width) const;
  int bottleneck_node() const noexcept { return config_.depth - 1; }

 private:
  Model() = default;
  void check_input(const Tensor4& images) const;

  ModelConfig config_;
  std::uint64_t init_seed_ = 0;
  std::vector<double> params_;
  std::vector<ParamTensor> tensors_;
  std::vector<GraphNode> nodes_;
  ConvLayer head_;
  int output_node_ = 0;
};

// Per-call activations kept for backward. Owned by the caller so that a
// Model can serve concurrent forward passes.
class ForwardCache {
 public:
  const Tensor4& node_output(int node) const { return outputs_.at(static_cast<std::size_t>(node)); }

 private:
  friend class Model;
  Tensor4 images_;
  std::vector<Tensor4> inputs_;   // concatenated / pooled input per node
  std::vector<Tensor4> mids_;     // after first conv + ReLU
  std::vector<Tensor4> outputs_;  // after second conv + ReLU
  std::vector<std::vector<std::uint8_t>> pool_argmax_;
};

}  // namespace platewaste
