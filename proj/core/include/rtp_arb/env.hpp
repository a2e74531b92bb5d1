#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string_view>
#include <utility>
#include <vector>

#include "rtp_arb/price_series.hpp"

namespace rtp_arb {

// Battery under hourly real-time pricing. Prices are cents/kWh, energy is kWh
// and every step is one hour, so a rate of P kW moves P kWh per step.
struct BatteryConfig {
  double capacity_kwh = 13.5;
  double rate_kw = 5.0;
  std::size_t window = 48;

  // Throws ConfigError unless capacity > 0, rate > 0 and window >= 1.
  void validate() const;

  friend bool operator==(const BatteryConfig&, const BatteryConfig&) = default;
};

// Integer codes are part of the checkpoint format and of the greedy tie-break.
enum class Action : std::uint8_t { Charge = 0, Discharge = 1, Idle = 2 };

inline constexpr std::size_t kNumActions = 3;
inline constexpr std::array<Action, kNumActions> kAllActions{Action::Charge, Action::Discharge, Action::Idle};

constexpr std::size_t action_index(Action a) noexcept { return static_cast<std::size_t>(a); }
std::string_view to_string(Action a) noexcept;
std::optional<Action> action_from_string(std::string_view name) noexcept;

struct EnvState {
  std::size_t step_index = 0;
  double charge = 0.0;
};

struct Observation {
  std::vector<double> recent_prices;  // oldest first, exactly `window` entries
  double charge = 0.0;

  friend bool operator==(const Observation&, const Observation&) = default;
};

struct Transition {
  Observation obs;
  Action action = Action::Idle;
  double reward = 0.0;
  Observation next_obs;
  bool done = false;
};

struct StepResult {
  EnvState state;
  Observation obs;
  double reward = 0.0;
  bool done = false;
};

// Clamped charge update. Throws DomainError if `charge` is outside [0, W].
double apply_action(double charge, Action action, const BatteryConfig& config);

// Change in asset value over hour n for the charge held at the start of the hour.
constexpr double reward(double charge_before_action, double price_now, double price_next) noexcept {
  return charge_before_action * (price_next - price_now);
}

// Prices p_{n-L+1..n}; indices before the start of the series repeat p_0.
Observation observe(const PriceSeries& prices, std::size_t step_index, double charge, std::size_t window);

std::pair<EnvState, Observation> reset(const PriceSeries& prices, const BatteryConfig& config,
                                       double initial_charge = 0.0);

// One hour. The reward uses the pre-action charge, so an action first pays off
// one step later. `done` is set on the step that reaches the last price.
StepResult step(const EnvState& state, Action action, const PriceSeries& prices, const BatteryConfig& config);

// Number of steps in an episode over `prices`.
inline std::size_t episode_length(const PriceSeries& prices) noexcept { return prices.size() - 1; }

// Closure of {0} under clamped +-P moves, sorted ascending. Values that differ
// only by floating-point path drift are merged, so the size is at most
// 2*ceil(W/P) + 2.
std::vector<double> reachable_charges(const BatteryConfig& config);

double episode_return(std::span<const Transition> transitions) noexcept;

// Per-step record of one episode driven by a policy.
struct Rollout {
  std::vector<Action> actions;
  std::vector<double> charges_after;
  std::vector<double> rewards;
  double total = 0.0;
};

using Policy = std::function<Action(const Observation&)>;

Rollout run_policy(const PriceSeries& prices, const BatteryConfig& config, const Policy& policy,
                   double initial_charge = 0.0);

// Replays a fixed action sequence (one action per step) and returns the episode return.
double simulate_actions(const PriceSeries& prices, const BatteryConfig& config, std::span<const Action> actions,
                        double initial_charge = 0.0);

// Stateful wrapper over reset/step for a fixed series. Holds a reference to
// the series, which must outlive the environment.
class BatteryEnv {
 public:
  BatteryEnv(const PriceSeries& prices, BatteryConfig config);

  const Observation& reset(double initial_charge = 0.0);
  StepResult step(Action action);

  const EnvState& state() const noexcept { return state_; }
  const Observation& observation() const noexcept { return obs_; }
  bool done() const noexcept { return done_; }
  const BatteryConfig& config() const noexcept { return config_; }
  const PriceSeries& prices() const noexcept { return prices_.get(); }

 private:
  std::reference_wrapper<const PriceSeries> prices_;
  BatteryConfig config_;
  EnvState state_;
  Observation obs_;
  bool done_ = false;
};

}  // namespace rtp_arb
