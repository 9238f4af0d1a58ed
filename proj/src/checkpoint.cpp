#include "platewaste/checkpoint.hpp"

#include <bit>
#include <cstring>
#include <fstream>

#include "platewaste/error.hpp"

namespace platewaste {

static_assert(std::endian::native == std::endian::little, "checkpoint I/O assumes little-endian");

namespace {

constexpr char kMagic[8] = {'P', 'W', 'C', 'K', 'P', 'T', '\0', '\0'};

template <typename T>
void put(std::ofstream& out, const T& v) {
  out.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <typename T>
T get(std::ifstream& in, const std::filesystem::path& path) {
  T v{};
  if (!in.read(reinterpret_cast<char*>(&v), sizeof(T))) {
    throw Error(ErrorCode::kFormatError, path.string() + ": truncated header");
  }
  return v;
}

void put_doubles(std::ofstream& out, const std::vector<double>& v) {
  out.write(reinterpret_cast<const char*>(v.data()),
            static_cast<std::streamsize>(v.size() * sizeof(double)));
}

std::vector<double> get_doubles(std::ifstream& in, std::size_t n, const std::filesystem::path& path,
                                const char* what) {
  std::vector<double> v(n);
  if (!in.read(reinterpret_cast<char*>(v.data()), static_cast<std::streamsize>(n * sizeof(double)))) {
    throw Error(ErrorCode::kFormatError, path.string() + ": truncated " + what);
  }
  return v;
}

nlohmann::json tensor_table(const Model& model) {
  nlohmann::json t = nlohmann::json::array();
  for (const auto& p : model.tensors()) t.push_back({{"name", p.name}, {"shape", p.shape}});
  return t;
}

}  // namespace

void save_checkpoint(const std::filesystem::path& path, const Checkpoint& ckpt) {
  const Model model = model_from_checkpoint(ckpt);
  nlohmann::json header = {{"config", to_json(ckpt.config)},
                           {"init_seed", ckpt.init_seed},
                           {"param_count", ckpt.params.size()},
                           {"tensors", tensor_table(model)},
                           {"metadata", ckpt.metadata}};
  if (ckpt.optim) {
    const auto& o = *ckpt.optim;
    if (o.m.size() != ckpt.params.size() || o.v.size() != ckpt.params.size()) {
      throw Error(ErrorCode::kShapeMismatch, "optimizer moments do not match the parameters");
    }
    header["optimizer"] = {{"t", o.t},       {"beta1", o.beta1}, {"beta2", o.beta2},
                           {"eps", o.eps},   {"lr", o.lr},       {"weight_decay", o.weight_decay}};
  }
  const std::string text = header.dump();
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorCode::kIoError, "cannot write " + path.string());
  out.write(kMagic, sizeof(kMagic));
  put(out, kCheckpointVersion);
  put(out, static_cast<std::uint64_t>(text.size()));
  out.write(text.data(), static_cast<std::streamsize>(text.size()));
  put_doubles(out, ckpt.params);
  if (ckpt.optim) {
    put_doubles(out, ckpt.optim->m);
    put_doubles(out, ckpt.optim->v);
  }
  if (!out) throw Error(ErrorCode::kIoError, "write failed for " + path.string());
}

void save_checkpoint(const std::filesystem::path& path, const Model& model, const OptimState* optim,
                     const nlohmann::json& metadata) {
  Checkpoint c;
  c.config = model.config();
  c.init_seed = model.init_seed();
  c.params.assign(model.parameters().begin(), model.parameters().end());
  if (optim) c.optim = *optim;
  c.metadata = metadata;
  save_checkpoint(path, c);
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::kMissingFile, "cannot open " + path.string());
  char magic[8];
  if (!in.read(magic, sizeof(magic)) || std::memcmp(magic, kMagic, sizeof(magic)) != 0) {
    throw Error(ErrorCode::kFormatError, path.string() + ": not a checkpoint file");
  }
  const auto version = get<std::uint32_t>(in, path);
  if (version != kCheckpointVersion) {
    throw Error(ErrorCode::kFormatError,
                path.string() + ": unsupported checkpoint version " + std::to_string(version));
  }
  const auto len = get<std::uint64_t>(in, path);
  if (len > (1u << 26)) throw Error(ErrorCode::kFormatError, path.string() + ": header too large");
  std::string text(len, '\0');
  if (!in.read(text.data(), static_cast<std::streamsize>(len))) {
    throw Error(ErrorCode::kFormatError, path.string() + ": truncated header");
  }
  Checkpoint c;
  std::size_t count = 0;
  nlohmann::json header;
  try {
    header = nlohmann::json::parse(text);
    c.config = model_config_from_json(header.at("config"));
    c.init_seed = header.at("init_seed").get<std::uint64_t>();
    count = header.at("param_count").get<std::size_t>();
    c.metadata = header.value("metadata", nlohmann::json::object());
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::kFormatError, path.string() + ": bad header: " + e.what());
  }
  const Model probe = Model::build(c.config, c.init_seed);
  if (probe.param_count() != count || tensor_table(probe) != header.at("tensors")) {
    throw Error(ErrorCode::kShapeMismatch,
                path.string() + ": stored tensors do not match the rebuilt architecture");
  }
  c.params = get_doubles(in, count, path, "parameters");
  if (header.contains("optimizer")) {
    const auto& o = header["optimizer"];
    OptimState s;
    s.t = o.at("t").get<std::int64_t>();
    s.beta1 = o.at("beta1").get<double>();
    s.beta2 = o.at("beta2").get<double>();
    s.eps = o.at("eps").get<double>();
    s.lr = o.at("lr").get<double>();
    s.weight_decay = o.at("weight_decay").get<double>();
    s.m = get_doubles(in, count, path, "first moments");
    s.v = get_doubles(in, count, path, "second moments");
    c.optim = std::move(s);
  }
  return c;
}

Model model_from_checkpoint(const Checkpoint& ckpt) {
  Model m = Model::build(ckpt.config, ckpt.init_seed);
  m.set_parameters(ckpt.params);
  return m;
}

}  // namespace platewaste
