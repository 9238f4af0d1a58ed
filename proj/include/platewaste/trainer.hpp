#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <vector>

#include "platewaste/augment.hpp"
#include "platewaste/lossfn.hpp"
#include "platewaste/metrics.hpp"
#include "platewaste/nets.hpp"
#include "platewaste/optim.hpp"

namespace platewaste {

struct TrainConfig {
  int batch_size = 4;
  int epochs = 50;
  std::optional<LrSchedule> schedule;  // empty: LrSchedule::tiered_default(epochs)
  double weight_decay = 1e-4;
  double loss_epsilon = kDefaultLossEpsilon;
  double cap_ratio = kDefaultCapRatio;
  std::uint64_t seed = 1;

  void validate() const;  // InvalidConfig
  LrSchedule effective_schedule() const;
};

nlohmann::json to_json(const TrainConfig& config);
TrainConfig train_config_from_json(const nlohmann::json& j);

struct EpochRecord {
  int epoch = 0;  // 1-based
  double lr = 0.0;
  double loss = 0.0;  // mean batch loss
  // Train metrics come from the forward passes made during the epoch.
  double train_dice = 0.0;
  double train_iou = 0.0;
  double val_dice = 0.0;
  double val_iou = 0.0;
  friend bool operator==(const EpochRecord&, const EpochRecord&) = default;
};

struct TrainHistory {
  std::vector<EpochRecord> epochs;
  std::string to_csv() const;  // epoch,lr,loss,train_dice,train_iou,val_dice,val_iou
  void write_csv(const std::filesystem::path& path) const;
};

struct TrainData {
  std::vector<LabeledImage> train;
  std::vector<LabeledImage> val;
};

// Called once per batch with the weights used for that batch.
using WeightHook = std::function<void(int epoch, int batch, const LossWeights&)>;
using EpochHook = std::function<void(const EpochRecord&)>;

struct TrainHooks {
  WeightHook on_weights;
  EpochHook on_epoch;
};

struct TrainResult {
  std::vector<double> best_params;
  int best_epoch = 0;
  double best_val_iou = 0.0;
  TrainHistory history;
  OptimState final_optim;
};

// Leaves the best-epoch parameters in model. EmptySplit for an empty train
// or val set; Divergence on a non-finite loss.
TrainResult train(const TrainConfig& config, Model& model, const TrainData& data,
                  const TrainHooks& hooks = {});

// Ties go to the lowest class index.
std::vector<LabelMask> predict(const Model& model, const std::vector<Image>& images,
                               int batch_size = 4);

// Per-image metrics of argmax predictions, summarized. EmptySplit if empty.
MetricsReport evaluate(const Model& model, const std::vector<LabeledImage>& split,
                       const AggregationMode& mode = {}, int batch_size = 4);

struct ThroughputStats {
  double mean = 0.0;  // images / second
  double min = 0.0;
  double max = 0.0;
};

struct ThroughputReport {
  int batch_size = 0;
  int input_size = 0;
  ThroughputStats train_step;
  ThroughputStats inference;
};

// Random inputs at the model's configured input size; the model itself is
// not modified.
ThroughputReport benchmark_throughput(const Model& model, int batch_size, int warmup, int iters,
                                      std::uint64_t seed = 1);

nlohmann::json to_json(const ThroughputReport& report);

}  // namespace platewaste
