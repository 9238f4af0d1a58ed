#include "platewaste/optim.hpp"

#include <cmath>
#include <string>

#include "platewaste/error.hpp"

namespace platewaste {

OptimState OptimState::zeros(std::size_t n, double lr, double weight_decay) {
  OptimState s;
  s.m.assign(n, 0.0);
  s.v.assign(n, 0.0);
  s.lr = lr;
  s.weight_decay = weight_decay;
  return s;
}

namespace {

void check_shapes(std::span<double> params, std::span<const double> grads,
                  const OptimState& state) {
  if (grads.size() != params.size() || state.m.size() != params.size() ||
      state.v.size() != params.size()) {
    throw Error(ErrorCode::kShapeMismatch,
                "params " + std::to_string(params.size()) + ", grads " +
                    std::to_string(grads.size()) + ", moments " + std::to_string(state.m.size()));
  }
}

// Shared moment update; returns the step applied after optional decay.
template <typename Update>
void step(std::span<double> params, std::span<const double> grads, OptimState& s,
          double grad_decay, Update&& update) {
  ++s.t;
  const double c1 = 1.0 - std::pow(s.beta1, static_cast<double>(s.t));
  const double c2 = 1.0 - std::pow(s.beta2, static_cast<double>(s.t));
  for (std::size_t i = 0; i < params.size(); ++i) {
    const double g = grad_decay != 0.0 ? grads[i] + grad_decay * params[i] : grads[i];
    s.m[i] = s.beta1 * s.m[i] + (1.0 - s.beta1) * g;
    s.v[i] = s.beta2 * s.v[i] + (1.0 - s.beta2) * g * g;
    const double m_hat = s.m[i] / c1;
    const double v_hat = s.v[i] / c2;
    update(params[i], s.lr * m_hat / (std::sqrt(v_hat) + s.eps));
  }
}

}  // namespace

void adam_step(std::span<double> params, std::span<const double> grads, OptimState& state,
               bool l2_in_gradient) {
  check_shapes(params, grads, state);
  step(params, grads, state, l2_in_gradient ? state.weight_decay : 0.0,
       [](double& theta, double delta) { theta = theta - delta; });
}

void adamw_step(std::span<double> params, std::span<const double> grads, OptimState& state) {
  check_shapes(params, grads, state);
  const double shrink = 1.0 - state.lr * state.weight_decay;
  step(params, grads, state, 0.0,
       [shrink](double& theta, double delta) { theta = theta * shrink - delta; });
}

LrSchedule::LrSchedule(std::vector<LrTier> tiers) : tiers_(std::move(tiers)) {
  if (tiers_.empty()) throw Error(ErrorCode::kInvalidConfig, "schedule: no tiers");
  if (tiers_.front().start_epoch != 0) {
    throw Error(ErrorCode::kInvalidConfig, "schedule: first tier must start at epoch 0");
  }
  for (std::size_t i = 0; i < tiers_.size(); ++i) {
    if (!(tiers_[i].lr > 0.0)) {
      throw Error(ErrorCode::kInvalidConfig,
                  "schedule.tiers[" + std::to_string(i) + "].lr must be positive");
    }
    if (i > 0 && tiers_[i].start_epoch <= tiers_[i - 1].start_epoch) {
      throw Error(ErrorCode::kInvalidConfig,
                  "schedule.tiers[" + std::to_string(i) + "].start_epoch must increase");
    }
    if (i > 0 && tiers_[i].lr > tiers_[i - 1].lr) {
      throw Error(ErrorCode::kInvalidConfig,
                  "schedule.tiers[" + std::to_string(i) + "].lr must not increase");
    }
  }
}

LrSchedule LrSchedule::tiered_default(int epochs) {
  static constexpr double kRates[] = {1e-3, 5e-4, 1e-4, 5e-5, 1e-5};
  constexpr int kTiers = 5;
  if (epochs < 1) throw Error(ErrorCode::kInvalidConfig, "epochs must be >= 1");
  std::vector<LrTier> tiers;
  for (int k = 0; k < kTiers; ++k) {
    const int start = k * epochs / kTiers;
    // Short budgets collapse tiers that would share a start epoch.
    if (!tiers.empty() && start <= tiers.back().start_epoch) continue;
    tiers.push_back({start, kRates[k]});
  }
  return LrSchedule(std::move(tiers));
}

double LrSchedule::lr_at(int epoch) const {
  double lr = tiers_.front().lr;
  for (const auto& t : tiers_) {
    if (t.start_epoch <= epoch) lr = t.lr;
  }
  return lr;
}

nlohmann::json to_json(const LrSchedule& schedule) {
  nlohmann::json tiers = nlohmann::json::array();
  for (const auto& t : schedule.tiers()) {
    tiers.push_back({{"start_epoch", t.start_epoch}, {"lr", t.lr}});
  }
  return tiers;
}

LrSchedule lr_schedule_from_json(const nlohmann::json& j) {
  if (!j.is_array()) throw Error(ErrorCode::kInvalidConfig, "schedule: expected an array of tiers");
  std::vector<LrTier> tiers;
  for (std::size_t i = 0; i < j.size(); ++i) {
    const auto& t = j[i];
    if (!t.is_object() || !t.contains("start_epoch") || !t.contains("lr") ||
        !t["start_epoch"].is_number_integer() || !t["lr"].is_number()) {
      throw Error(ErrorCode::kInvalidConfig,
                  "schedule[" + std::to_string(i) + "]: needs integer start_epoch and numeric lr");
    }
    tiers.push_back({t["start_epoch"].get<int>(), t["lr"].get<double>()});
  }
  return LrSchedule(std::move(tiers));
}

}  // namespace platewaste
