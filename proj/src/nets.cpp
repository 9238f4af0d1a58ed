#include "platewaste/nets.hpp"

#include <cmath>
#include <string>

#include "layers.hpp"
#include "platewaste/error.hpp"
#include "platewaste/rng.hpp"

namespace platewaste {

std::string_view family_name(Family f) { return f == Family::kUNet ? "unet" : "unetpp"; }

Family parse_family(std::string_view text) {
  if (text == "unet") return Family::kUNet;
  if (text == "unetpp" || text == "unet++" || text == "nestnet") return Family::kUNetPP;
  throw Error(ErrorCode::kInvalidConfig,
              "arch: expected 'unet' or 'unetpp', got '" + std::string(text) + "'");
}

void ModelConfig::validate() const {
  auto fail = [](const std::string& field, const std::string& why) {
    throw Error(ErrorCode::kInvalidConfig, field + ": " + why);
  };
  if (base_width < 1) fail("base_width", "must be >= 1");
  if (depth < 2 || depth > 8) fail("depth", "must be in [2, 8]");
  if (in_channels < 1) fail("in_channels", "must be >= 1");
  if (num_classes < 2 || num_classes > 256) fail("num_classes", "must be in [2, 256]");
  const int stride = 1 << (depth - 1);
  if (input_size < stride || input_size % stride != 0) {
    fail("input_size", std::to_string(input_size) + " is not divisible by " +
                           std::to_string(stride));
  }
}

nlohmann::json to_json(const ModelConfig& c) {
  return {{"family", family_name(c.family)}, {"base_width", c.base_width},
          {"depth", c.depth},                {"in_channels", c.in_channels},
          {"num_classes", c.num_classes},    {"input_size", c.input_size}};
}

ModelConfig model_config_from_json(const nlohmann::json& j) {
  ModelConfig c;
  try {
    if (j.contains("family")) c.family = parse_family(j.at("family").get<std::string>());
    if (j.contains("base_width")) c.base_width = j.at("base_width").get<int>();
    if (j.contains("depth")) c.depth = j.at("depth").get<int>();
    if (j.contains("in_channels")) c.in_channels = j.at("in_channels").get<int>();
    if (j.contains("num_classes")) c.num_classes = j.at("num_classes").get<int>();
    if (j.contains("input_size")) c.input_size = j.at("input_size").get<int>();
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::kInvalidConfig, std::string("model config: ") + e.what());
  }
  return c;
}

namespace {

struct Builder {
  std::vector<ParamTensor>& tensors;
  std::size_t next = 0;

  std::size_t add(const std::string& name, std::vector<int> shape) {
    std::size_t n = 1;
    for (int d : shape) n *= static_cast<std::size_t>(d);
    tensors.push_back({name, std::move(shape), next, n});
    const std::size_t at = next;
    next += n;
    return at;
  }

  ConvLayer conv(const std::string& name, int in, int out, int kernel) {
    ConvLayer l{in, out, kernel, 0, 0};
    l.weight = add(name + ".weight", {out, in, kernel, kernel});
    l.bias = add(name + ".bias", {out});
    return l;
  }

  UpLayer up(const std::string& name, int in, int out) {
    UpLayer l{in, out, 0, 0};
    l.weight = add(name + ".weight", {in, out, 2, 2});
    l.bias = add(name + ".bias", {out});
    return l;
  }
};

std::string node_name(int level, int column) {
  return "X" + std::to_string(level) + "_" + std::to_string(column);
}

}  // namespace

Model Model::build(const ModelConfig& config, std::uint64_t init_seed) {
  config.validate();
  Model m;
  m.config_ = config;
  m.init_seed_ = init_seed;
  Builder b{m.tensors_};
  const int depth = config.depth;

  // index_of[level][column] -> node index
  std::vector<std::vector<int>> index_of(static_cast<std::size_t>(depth),
                                         std::vector<int>(static_cast<std::size_t>(depth), -1));
  auto add_node = [&](GraphNode node) {
    index_of[node.level][node.column] = static_cast<int>(m.nodes_.size());
    m.nodes_.push_back(std::move(node));
  };

  for (int level = 0; level < depth; ++level) {
    GraphNode node;
    node.level = level;
    node.column = 0;
    node.name = node_name(level, 0);
    const int in = level == 0 ? config.in_channels : config.width_at(level - 1);
    if (level > 0) node.pool_source = index_of[level - 1][0];
    node.conv1 = b.conv(node.name + ".conv1", in, config.width_at(level), 3);
    node.conv2 = b.conv(node.name + ".conv2", config.width_at(level), config.width_at(level), 3);
    add_node(std::move(node));
  }

  auto decoder_node = [&](int level, int column, std::vector<int> skips) {
    GraphNode node;
    node.level = level;
    node.column = column;
    node.name = node_name(level, column);
    node.skips = std::move(skips);
    node.up_source = index_of[level + 1][column - 1];
    const int width = config.width_at(level);
    node.up = b.up(node.name + ".up", config.width_at(level + 1), width);
    const int in = width * static_cast<int>(node.skips.size() + 1);
    node.conv1 = b.conv(node.name + ".conv1", in, width, 3);
    node.conv2 = b.conv(node.name + ".conv2", width, width, 3);
    add_node(std::move(node));
  };

  if (config.family == Family::kUNet) {
    for (int level = depth - 2; level >= 0; --level) {
      decoder_node(level, depth - 1 - level, {index_of[level][0]});
    }
  } else {
    // Dense nested decoder: X^{i,j} sees every X^{i,k<j} plus up(X^{i+1,j-1}).
    for (int column = 1; column < depth; ++column) {
      for (int level = 0; level + column < depth; ++level) {
        std::vector<int> skips;
        for (int k = 0; k < column; ++k) skips.push_back(index_of[level][k]);
        decoder_node(level, column, std::move(skips));
      }
    }
  }
  m.output_node_ = index_of[0][depth - 1];
  m.head_ = b.conv("head", config.base_width, config.num_classes, 1);

  m.params_.assign(b.next, 0.0);
  // He-uniform weights (bound sqrt(6 / fan_in)), zero biases, drawn in
  // parameter order from a single stream.
  Rng rng(mix_seed(init_seed, 0x1417));
  for (const auto& t : m.tensors_) {
    if (t.shape.size() == 1) continue;
    const bool transposed = t.name.find(".up.") != std::string::npos;
    const int fan_in = transposed ? t.shape[0] : t.shape[1] * t.shape[2] * t.shape[3];
    const double bound = std::sqrt(6.0 / static_cast<double>(fan_in));
    for (std::size_t i = 0; i < t.size; ++i) m.params_[t.offset + i] = rng.uniform(-bound, bound);
  }
  return m;
}

void Model::set_parameters(std::span<const double> values) {
  if (values.size() != params_.size()) {
    throw Error(ErrorCode::kShapeMismatch, "expected " + std::to_string(params_.size()) +
                                               " parameters, got " +
                                               std::to_string(values.size()));
  }
  std::copy(values.begin(), values.end(), params_.begin());
}

void Model::check_input(const Tensor4& images) const {
  const int stride = 1 << (config_.depth - 1);
  if (images.n() < 1 || images.c() != config_.in_channels || images.h() < stride ||
      images.w() < stride || images.h() % stride != 0 || images.w() % stride != 0) {
    throw Error(ErrorCode::kShapeMismatch,
                "input " + images.shape().str() + " needs " + std::to_string(config_.in_channels) +
                    " channels and spatial dims divisible by " + std::to_string(stride));
  }
}

Tensor4 Model::forward(const Tensor4& images, ForwardCache* cache) const {
  check_input(images);
  const double* p = params_.data();
  const std::size_t count = nodes_.size();
  std::vector<Tensor4> outputs(count);
  ForwardCache local;
  ForwardCache& fc = cache ? *cache : local;
  const bool keep = cache != nullptr;
  if (keep) {
    fc.inputs_.assign(count, Tensor4());
    fc.mids_.assign(count, Tensor4());
    fc.pool_argmax_.assign(count, {});
  }

  for (std::size_t i = 0; i < count; ++i) {
    const GraphNode& node = nodes_[i];
    Tensor4 input;
    if (node.pool_source >= 0) {
      std::vector<std::uint8_t> argmax;
      layers::maxpool_forward(outputs[static_cast<std::size_t>(node.pool_source)], input, argmax);
      if (keep) fc.pool_argmax_[i] = std::move(argmax);
    } else if (node.up_source >= 0) {
      Tensor4 up;
      layers::up_forward(outputs[static_cast<std::size_t>(node.up_source)], p + node.up.weight,
                         p + node.up.bias, node.up.out, up);
      std::vector<const Tensor4*> parts;
      for (int s : node.skips) parts.push_back(&outputs[static_cast<std::size_t>(s)]);
      parts.push_back(&up);
      input = layers::concat_channels(parts);
    }
    const Tensor4& in = node.pool_source < 0 && node.up_source < 0 ? images : input;
    Tensor4 mid;
    layers::conv_forward(in, p + node.conv1.weight, p + node.conv1.bias, node.conv1.out, 3, mid);
    layers::relu_inplace(mid);
    layers::conv_forward(mid, p + node.conv2.weight, p + node.conv2.bias, node.conv2.out, 3,
                         outputs[i]);
    layers::relu_inplace(outputs[i]);
    if (keep) {
      fc.inputs_[i] = std::move(input);
      fc.mids_[i] = std::move(mid);
    }
  }

  Tensor4 logits;
  layers::conv_forward(outputs[static_cast<std::size_t>(output_node_)], p + head_.weight,
                       p + head_.bias, head_.out, 1, logits);
  if (keep) {
    fc.images_ = images;
    fc.outputs_ = std::move(outputs);
  }
  return logits;
}

void Model::backward(const ForwardCache& cache, const Tensor4& grad_logits,
                     std::span<double> grads) const {
  if (grads.size() != params_.size()) {
    throw Error(ErrorCode::kShapeMismatch, "gradient buffer has " + std::to_string(grads.size()) +
                                               " entries, model " +
                                               std::to_string(params_.size()));
  }
  if (cache.outputs_.size() != nodes_.size()) {
    throw Error(ErrorCode::kInvalidArgument, "forward cache is empty");
  }
  const double* p = params_.data();
  double* g = grads.data();
  const std::size_t count = nodes_.size();
  std::vector<Tensor4> grad_out(count);
  auto accumulate = [&](std::size_t node, const double* src, std::size_t channel_offset,
                        const Shape4& part) {
    Tensor4& dst = grad_out[node];
    if (dst.size() == 0) dst = Tensor4(cache.outputs_[node].shape());
    const std::size_t plane = dst.plane();
    const std::size_t len = plane * static_cast<std::size_t>(dst.c());
    const std::size_t src_stride = plane * static_cast<std::size_t>(part.c);
    for (int b = 0; b < dst.n(); ++b) {
      const double* s = src + static_cast<std::size_t>(b) * src_stride + channel_offset * plane;
      double* d = dst.sample(b);
      for (std::size_t k = 0; k < len; ++k) d[k] += s[k];
    }
  };

  {
    Tensor4 grad_feat;
    layers::conv_backward(cache.outputs_[static_cast<std::size_t>(output_node_)], p + head_.weight,
                          grad_logits, 1, g + head_.weight, g + head_.bias, &grad_feat);
    grad_out[static_cast<std::size_t>(output_node_)] = std::move(grad_feat);
  }

  for (std::size_t ii = count; ii-- > 0;) {
    const GraphNode& node = nodes_[ii];
    Tensor4& dout = grad_out[ii];
    if (dout.size() == 0) continue;  // node does not reach the output
    layers::relu_backward_inplace(cache.outputs_[ii], dout);
    Tensor4 dmid;
    layers::conv_backward(cache.mids_[ii], p + node.conv2.weight, dout, 3, g + node.conv2.weight,
                          g + node.conv2.bias, &dmid);
    layers::relu_backward_inplace(cache.mids_[ii], dmid);
    const bool from_image = node.pool_source < 0 && node.up_source < 0;
    const Tensor4& in = from_image ? cache.images_ : cache.inputs_[ii];
    Tensor4 din;
    layers::conv_backward(in, p + node.conv1.weight, dmid, 3, g + node.conv1.weight,
                          g + node.conv1.bias, from_image ? nullptr : &din);
    if (from_image) continue;

    if (node.pool_source >= 0) {
      Tensor4 dsrc;
      layers::maxpool_backward(din, cache.pool_argmax_[ii], dsrc);
      accumulate(static_cast<std::size_t>(node.pool_source), dsrc.data(), 0, dsrc.shape());
      continue;
    }
    std::size_t channel = 0;
    for (int s : node.skips) {
      accumulate(static_cast<std::size_t>(s), din.data(), channel, din.shape());
      channel += static_cast<std::size_t>(cache.outputs_[static_cast<std::size_t>(s)].c());
    }
    // Remaining channels belong to the upsampled branch.
    const int up_channels = node.up.out;
    Tensor4 dup(din.n(), up_channels, din.h(), din.w());
    const std::size_t plane = din.plane();
    for (int b = 0; b < din.n(); ++b) {
      const double* s = din.sample(b) + channel * plane;
      std::copy(s, s + plane * static_cast<std::size_t>(up_channels), dup.sample(b));
    }
    const auto src = static_cast<std::size_t>(node.up_source);
    Tensor4 dsrc;
    layers::up_backward(cache.outputs_[src], p + node.up.weight, dup, g + node.up.weight,
                        g + node.up.bias, dsrc);
    accumulate(src, dsrc.data(), 0, dsrc.shape());
  }
}

std::vector<Shape4> Model::trace_shapes(int batch, int height, int width) const {
  const int stride = 1 << (config_.depth - 1);
  if (height % stride != 0 || width % stride != 0) {
    throw Error(ErrorCode::kShapeMismatch, "spatial dims must be divisible by " +
                                               std::to_string(stride));
  }
  std::vector<Shape4> shapes(nodes_.size());
  for (std::size_t i = 0; i < nodes_.size(); ++i) {
    const GraphNode& node = nodes_[i];
    Shape4 s{batch, node.conv2.out, height, width};
    if (node.pool_source >= 0) {
      const Shape4& src = shapes[static_cast<std::size_t>(node.pool_source)];
      s.h = src.h / 2;
      s.w = src.w / 2;
    } else if (node.up_source >= 0) {
      const Shape4& src = shapes[static_cast<std::size_t>(node.up_source)];
      s.h = src.h * 2;
      s.w = src.w * 2;
    }
    shapes[i] = s;
  }
  return shapes;
}

Shape4 Model::bottleneck_shape(int batch, int height, int width) const {
  return trace_shapes(batch, height, width)[static_cast<std::size_t>(bottleneck_node())];
}

}  // namespace platewaste
