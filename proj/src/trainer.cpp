#include "platewaste/trainer.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numeric>

#include "platewaste/error.hpp"
#include "platewaste/rng.hpp"

namespace platewaste {

void TrainConfig::validate() const {
  if (batch_size < 1) throw Error(ErrorCode::kInvalidConfig, "train.batch_size must be >= 1");
  if (epochs < 1) throw Error(ErrorCode::kInvalidConfig, "train.epochs must be >= 1");
  if (!(weight_decay >= 0.0)) throw Error(ErrorCode::kInvalidConfig, "train.weight_decay must be >= 0");
  if (!(loss_epsilon > 0.0)) throw Error(ErrorCode::kInvalidConfig, "train.loss_epsilon must be > 0");
  if (!(cap_ratio >= 1.0)) throw Error(ErrorCode::kInvalidConfig, "train.cap_ratio must be >= 1");
}

LrSchedule TrainConfig::effective_schedule() const {
  return schedule ? *schedule : LrSchedule::tiered_default(epochs);
}

nlohmann::json to_json(const TrainConfig& c) {
  nlohmann::json j = {{"batch_size", c.batch_size},     {"epochs", c.epochs},
                      {"weight_decay", c.weight_decay}, {"loss_epsilon", c.loss_epsilon},
                      {"cap_ratio", c.cap_ratio},       {"seed", c.seed}};
  if (c.schedule) j["schedule"] = to_json(*c.schedule);
  return j;
}

TrainConfig train_config_from_json(const nlohmann::json& j) {
  if (!j.is_object()) throw Error(ErrorCode::kInvalidConfig, "train: expected an object");
  TrainConfig c;
  auto num = [&](const char* key, auto& dst) {
    if (!j.contains(key)) return;
    if (!j[key].is_number()) {
      throw Error(ErrorCode::kInvalidConfig, std::string("train.") + key + ": expected a number");
    }
    dst = j[key].get<std::remove_reference_t<decltype(dst)>>();
  };
  num("batch_size", c.batch_size);
  num("epochs", c.epochs);
  num("weight_decay", c.weight_decay);
  num("loss_epsilon", c.loss_epsilon);
  num("cap_ratio", c.cap_ratio);
  num("seed", c.seed);
  if (j.contains("schedule")) c.schedule = lr_schedule_from_json(j["schedule"]);
  c.validate();
  return c;
}

std::string TrainHistory::to_csv() const {
  std::string out = "epoch,lr,loss,train_dice,train_iou,val_dice,val_iou\n";
  char buf[256];
  for (const auto& r : epochs) {
    std::snprintf(buf, sizeof(buf), "%d,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g\n", r.epoch, r.lr,
                  r.loss, r.train_dice, r.train_iou, r.val_dice, r.val_iou);
    out += buf;
  }
  return out;
}

void TrainHistory::write_csv(const std::filesystem::path& path) const {
  std::ofstream out(path);
  if (!out) throw Error(ErrorCode::kIoError, "cannot write " + path.string());
  out << to_csv();
}

namespace {

LabelMask argmax_mask(const Tensor4& logits, int n) {
  const int c_count = logits.c();
  const std::size_t plane = logits.plane();
  std::vector<Label> labels(plane, 0);
  for (std::size_t i = 0; i < plane; ++i) {
    double best = logits.channel(n, 0)[i];
    for (int c = 1; c < c_count; ++c) {
      const double v = logits.channel(n, c)[i];
      if (v > best) {
        best = v;
        labels[i] = static_cast<Label>(c);
      }
    }
  }
  return LabelMask(logits.w(), logits.h(), c_count, std::move(labels));
}

Tensor4 batch_images(const std::vector<LabeledImage>& set, const std::vector<std::size_t>& idx) {
  std::vector<const Image*> ptrs;
  ptrs.reserve(idx.size());
  for (auto i : idx) ptrs.push_back(&set[i].image);
  return to_tensor(std::span<const Image* const>(ptrs));
}

void check_split(const std::vector<LabeledImage>& s, const Model& model, const char* name) {
  if (s.empty()) throw Error(ErrorCode::kEmptySplit, std::string(name) + " split is empty");
  for (const auto& x : s) {
    if (x.mask.num_classes() != model.config().num_classes) {
      throw Error(ErrorCode::kDimensionMismatch,
                  std::string(name) + " mask class count differs from the model's");
    }
  }
}

const AggregationMode kSelection{Aggregation::kWeighted, false};

}  // namespace

std::vector<LabelMask> predict(const Model& model, const std::vector<Image>& images, int batch_size) {
  if (batch_size < 1) throw Error(ErrorCode::kInvalidArgument, "batch_size must be >= 1");
  std::vector<LabelMask> out;
  out.reserve(images.size());
  for (std::size_t start = 0; start < images.size(); start += static_cast<std::size_t>(batch_size)) {
    const std::size_t end = std::min(images.size(), start + static_cast<std::size_t>(batch_size));
    std::vector<const Image*> ptrs;
    for (std::size_t i = start; i < end; ++i) ptrs.push_back(&images[i]);
    const Tensor4 logits = model.forward(to_tensor(std::span<const Image* const>(ptrs)));
    for (int n = 0; n < logits.n(); ++n) out.push_back(argmax_mask(logits, n));
  }
  return out;
}

MetricsReport evaluate(const Model& model, const std::vector<LabeledImage>& split,
                       const AggregationMode& mode, int batch_size) {
  if (split.empty()) throw Error(ErrorCode::kEmptySplit, "nothing to evaluate");
  std::vector<Image> images;
  images.reserve(split.size());
  for (const auto& s : split) images.push_back(s.image);
  const auto preds = predict(model, images, batch_size);
  std::vector<ImageMetrics> per;
  per.reserve(split.size());
  for (std::size_t i = 0; i < split.size(); ++i) per.push_back(image_metrics(preds[i], split[i].mask));
  return summarize(per, mode);
}

TrainResult train(const TrainConfig& config, Model& model, const TrainData& data,
                  const TrainHooks& hooks) {
  config.validate();
  check_split(data.train, model, "train");
  check_split(data.val, model, "val");
  const LrSchedule schedule = config.effective_schedule();

  TrainResult result;
  OptimState optim = OptimState::zeros(model.param_count(), schedule.lr_at(0), config.weight_decay);
  std::vector<double> grads(model.param_count());
  std::vector<std::size_t> order(data.train.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  const auto batch = static_cast<std::size_t>(config.batch_size);

  for (int epoch = 0; epoch < config.epochs; ++epoch) {
    optim.lr = schedule.lr_at(epoch);
    Rng rng(mix_seed(config.seed, static_cast<std::uint64_t>(epoch)));
    rng.shuffle(order);

    double loss_sum = 0.0;
    int batches = 0;
    std::vector<ImageMetrics> train_metrics;
    train_metrics.reserve(order.size());
    for (std::size_t start = 0; start < order.size(); start += batch, ++batches) {
      const std::vector<std::size_t> idx(order.begin() + static_cast<std::ptrdiff_t>(start),
                                         order.begin() + static_cast<std::ptrdiff_t>(std::min(order.size(), start + batch)));
      std::vector<LabelMask> gt;
      gt.reserve(idx.size());
      for (auto i : idx) gt.push_back(data.train[i].mask);

      const LossWeights w =
          capped_weights(batch_frequencies(gt), config.loss_epsilon, config.cap_ratio);
      if (hooks.on_weights) hooks.on_weights(epoch + 1, batches, w);

      ForwardCache cache;
      const Tensor4 logits = model.forward(batch_images(data.train, idx), &cache);
      const LossValue lv = weighted_ce_loss(logits, gt, w, true);
      if (!std::isfinite(lv.loss)) {
        throw Error(ErrorCode::kDivergence, "non-finite loss at epoch " + std::to_string(epoch + 1) +
                                                ", batch " + std::to_string(batches));
      }
      loss_sum += lv.loss;
      for (int n = 0; n < logits.n(); ++n) {
        train_metrics.push_back(image_metrics(argmax_mask(logits, n), gt[static_cast<std::size_t>(n)]));
      }
      std::fill(grads.begin(), grads.end(), 0.0);
      model.backward(cache, lv.grad, grads);
      adamw_step(model.parameters(), grads, optim);
    }

    const MetricsReport tr = summarize(train_metrics, kSelection);
    const MetricsReport va = evaluate(model, data.val, kSelection, config.batch_size);
    EpochRecord rec{epoch + 1, optim.lr, loss_sum / batches, tr.dice, tr.iou, va.dice, va.iou};
    result.history.epochs.push_back(rec);
    if (hooks.on_epoch) hooks.on_epoch(rec);
    // Strict improvement keeps the earliest epoch on ties.
    if (epoch == 0 || va.iou > result.best_val_iou) {
      result.best_epoch = epoch + 1;
      result.best_val_iou = va.iou;
      result.best_params.assign(model.parameters().begin(), model.parameters().end());
    }
  }
  result.final_optim = std::move(optim);
  model.set_parameters(result.best_params);
  return result;
}

ThroughputReport benchmark_throughput(const Model& model, int batch_size, int warmup, int iters,
                                      std::uint64_t seed) {
  if (iters < 1) throw Error(ErrorCode::kInvalidArgument, "iters must be >= 1");
  if (batch_size < 1) throw Error(ErrorCode::kInvalidArgument, "batch_size must be >= 1");
  const auto& cfg = model.config();
  const int s = cfg.input_size;
  Rng rng(seed);
  Tensor4 x(batch_size, cfg.in_channels, s, s);
  for (auto& v : x.span()) v = rng.uniform();
  std::vector<LabelMask> gt;
  for (int b = 0; b < batch_size; ++b) {
    std::vector<Label> labels(static_cast<std::size_t>(s) * s);
    for (auto& l : labels) l = static_cast<Label>(rng.below(static_cast<std::uint64_t>(cfg.num_classes)));
    gt.emplace_back(s, s, cfg.num_classes, std::move(labels));
  }

  Model work = model;
  OptimState optim = OptimState::zeros(work.param_count());
  std::vector<double> grads(work.param_count());
  auto train_step = [&] {
    ForwardCache cache;
    const Tensor4 logits = work.forward(x, &cache);
    const LossValue lv = weighted_ce_loss(logits, gt, capped_weights(batch_frequencies(gt)), true);
    std::fill(grads.begin(), grads.end(), 0.0);
    work.backward(cache, lv.grad, grads);
    adamw_step(work.parameters(), grads, optim);
  };
  auto infer_step = [&] { (void)work.forward(x); };

  auto measure = [&](auto&& fn) {
    for (int i = 0; i < warmup; ++i) fn();
    ThroughputStats st;
    st.min = std::numeric_limits<double>::infinity();
    double total = 0.0;
    for (int i = 0; i < iters; ++i) {
      const auto t0 = std::chrono::steady_clock::now();
      fn();
      const double sec = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
      const double ips = batch_size / std::max(sec, 1e-12);
      total += sec;
      st.min = std::min(st.min, ips);
      st.max = std::max(st.max, ips);
    }
    st.mean = batch_size * iters / std::max(total, 1e-12);
    return st;
  };

  ThroughputReport r;
  r.batch_size = batch_size;
  r.input_size = s;
  r.train_step = measure(train_step);
  r.inference = measure(infer_step);
  return r;
}

nlohmann::json to_json(const ThroughputReport& r) {
  auto stats = [](const ThroughputStats& s) {
    return nlohmann::json{{"mean", s.mean}, {"min", s.min}, {"max", s.max}};
  };
  return {{"batch_size", r.batch_size},
          {"input_size", r.input_size},
          {"unit", "images_per_second"},
          {"train_step", stats(r.train_step)},
          {"inference", stats(r.inference)}};
}

}  // namespace platewaste
