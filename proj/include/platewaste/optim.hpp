#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include <nlohmann/json.hpp>

namespace platewaste {

// Moments, step counter and hyperparameters of Adam / AdamW. weight_decay is
// the decay coefficient, unrelated to the loss cap ratio.
struct OptimState {
  std::vector<double> m;
  std::vector<double> v;
  std::int64_t t = 0;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  double lr = 1e-3;
  double weight_decay = 1e-4;

  static OptimState zeros(std::size_t n, double lr = 1e-3, double weight_decay = 1e-4);
  friend bool operator==(const OptimState&, const OptimState&) = default;
};

// Adam with bias-corrected moments. With l2_in_gradient, weight_decay * theta
// is folded into the gradient before the moment updates.
void adam_step(std::span<double> params, std::span<const double> grads, OptimState& state,
               bool l2_in_gradient = true);

// Decoupled decay: theta <- theta * (1 - lr * wd) - lr * m_hat / (sqrt(v_hat) + eps).
void adamw_step(std::span<double> params, std::span<const double> grads, OptimState& state);

struct LrTier {
  int start_epoch = 0;
  double lr = 0.0;
  friend bool operator==(const LrTier&, const LrTier&) = default;
};

// Piecewise-constant, non-increasing learning rate.
class LrSchedule {
 public:
  // Throws InvalidConfig unless the first tier starts at 0, starts strictly
  // increase and rates are positive and non-increasing.
  explicit LrSchedule(std::vector<LrTier> tiers);

  // 1e-3, 5e-4, 1e-4, 5e-5, 1e-5 at equal fractions of the epoch budget.
  static LrSchedule tiered_default(int epochs);
  static LrSchedule constant(double lr) { return LrSchedule({{0, lr}}); }

  double lr_at(int epoch) const;
  const std::vector<LrTier>& tiers() const noexcept { return tiers_; }

 private:
  std::vector<LrTier> tiers_;
};

nlohmann::json to_json(const LrSchedule& schedule);
LrSchedule lr_schedule_from_json(const nlohmann::json& j);

}  // namespace platewaste
