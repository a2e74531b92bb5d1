#include "rtp_arb/env.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <string>

#include "rtp_arb/errors.hpp"

namespace rtp_arb {

void BatteryConfig::validate() const {
  if (!(capacity_kwh > 0.0) || !std::isfinite(capacity_kwh)) {
    throw ConfigError("battery capacity must be positive and finite, got " + std::to_string(capacity_kwh));
  }
  if (!(rate_kw > 0.0) || !std::isfinite(rate_kw)) {
    throw ConfigError("charge/discharge rate must be positive and finite, got " + std::to_string(rate_kw));
  }
  if (window < 1) {
    throw ConfigError("observation window must be at least 1");
  }
}

std::string_view to_string(Action a) noexcept {
  switch (a) {
    case Action::Charge:
      return "charge";
    case Action::Discharge:
      return "discharge";
    case Action::Idle:
      return "idle";
  }
  return "unknown";
}

std::optional<Action> action_from_string(std::string_view name) noexcept {
  for (Action a : kAllActions) {
    if (to_string(a) == name) return a;
  }
  return std::nullopt;
}

double apply_action(double charge, Action action, const BatteryConfig& config) {
  if (!(charge >= 0.0 && charge <= config.capacity_kwh)) {
    throw DomainError("charge " + std::to_string(charge) + " kWh outside [0, " +
                      std::to_string(config.capacity_kwh) + "]");
  }
  switch (action) {
    case Action::Charge:
      return charge + std::min(config.rate_kw, config.capacity_kwh - charge);
    case Action::Discharge:
      return charge - std::min(config.rate_kw, charge);
    case Action::Idle:
      return charge;
  }
  throw DomainError("unknown action code " + std::to_string(static_cast<int>(action)));
}

Observation observe(const PriceSeries& prices, std::size_t step_index, double charge, std::size_t window) {
  Observation obs;
  obs.charge = charge;
  obs.recent_prices.resize(window);
  const auto p = prices.prices();
  // Entry k holds p_{n - window + 1 + k}.
  for (std::size_t k = 0; k < window; ++k) {
    const std::size_t back = window - 1 - k;
    obs.recent_prices[k] = back > step_index ? p[0] : p[step_index - back];
  }
  return obs;
}

std::pair<EnvState, Observation> reset(const PriceSeries& prices, const BatteryConfig& config,
                                       double initial_charge) {
  config.validate();
  if (prices.size() < 2) {
    throw ConfigError("episode needs at least 2 prices");
  }
  if (!(initial_charge >= 0.0 && initial_charge <= config.capacity_kwh)) {
    throw DomainError("initial charge " + std::to_string(initial_charge) + " kWh outside [0, " +
                      std::to_string(config.capacity_kwh) + "]");
  }
  EnvState state{0, initial_charge};
  return {state, observe(prices, 0, initial_charge, config.window)};
}

StepResult step(const EnvState& state, Action action, const PriceSeries& prices, const BatteryConfig& config) {
  const std::size_t n = state.step_index;
  if (n + 1 >= prices.size()) {
    throw StateError("episode finished at step " + std::to_string(n) + "; call reset first");
  }
  const auto p = prices.prices();
  StepResult out;
  out.reward = reward(state.charge, p[n], p[n + 1]);
  out.state.charge = apply_action(state.charge, action, config);
  out.state.step_index = n + 1;
  out.done = n + 1 == prices.size() - 1;
  out.obs = observe(prices, n + 1, out.state.charge, config.window);
  return out;
}

std::vector<double> reachable_charges(const BatteryConfig& config) {
  config.validate();
  const double tol = 1e-11 * config.capacity_kwh;
  std::vector<double> found{0.0};
  std::deque<double> frontier{0.0};
  auto known = [&](double w) {
    return std::any_of(found.begin(), found.end(), [&](double v) { return std::abs(v - w) <= tol; });
  };
  while (!frontier.empty()) {
    const double w = frontier.front();
    frontier.pop_front();
    for (Action a : {Action::Charge, Action::Discharge}) {
      const double next = apply_action(w, a, config);
      if (!known(next)) {
        found.push_back(next);
        frontier.push_back(next);
      }
    }
  }
  std::sort(found.begin(), found.end());
  return found;
}

double episode_return(std::span<const Transition> transitions) noexcept {
  double total = 0.0;
  for (const auto& t : transitions) total += t.reward;
  return total;
}

Rollout run_policy(const PriceSeries& prices, const BatteryConfig& config, const Policy& policy,
                   double initial_charge) {
  auto [state, obs] = reset(prices, config, initial_charge);
  Rollout out;
  const std::size_t steps = episode_length(prices);
  out.actions.reserve(steps);
  out.charges_after.reserve(steps);
  out.rewards.reserve(steps);
  for (bool done = false; !done;) {
    const Action a = policy(obs);
    StepResult r = step(state, a, prices, config);
    out.actions.push_back(a);
    out.charges_after.push_back(r.state.charge);
    out.rewards.push_back(r.reward);
    out.total += r.reward;
    state = r.state;
    obs = std::move(r.obs);
    done = r.done;
  }
  return out;
}

double simulate_actions(const PriceSeries& prices, const BatteryConfig& config, std::span<const Action> actions,
                        double initial_charge) {
  if (actions.size() != episode_length(prices)) {
    throw ParameterError("action sequence has " + std::to_string(actions.size()) + " entries; episode has " +
                         std::to_string(episode_length(prices)) + " steps");
  }
  config.validate();
  if (!(initial_charge >= 0.0 && initial_charge <= config.capacity_kwh)) {
    throw DomainError("initial charge outside [0, W]");
  }
  // Observations are not needed to replay fixed actions.
  const auto p = prices.prices();
  double charge = initial_charge;
  double total = 0.0;
  for (std::size_t n = 0; n < actions.size(); ++n) {
    total += reward(charge, p[n], p[n + 1]);
    charge = apply_action(charge, actions[n], config);
  }
  return total;
}

BatteryEnv::BatteryEnv(const PriceSeries& prices, BatteryConfig config) : prices_(prices), config_(config) {
  config_.validate();
  reset();
}

const Observation& BatteryEnv::reset(double initial_charge) {
  auto [state, obs] = rtp_arb::reset(prices_.get(), config_, initial_charge);
  state_ = state;
  obs_ = std::move(obs);
  done_ = false;
  return obs_;
}

StepResult BatteryEnv::step(Action action) {
  if (done_) {
    throw StateError("episode finished; call reset first");
  }
  StepResult r = rtp_arb::step(state_, action, prices_.get(), config_);
  state_ = r.state;
  obs_ = r.obs;
  done_ = r.done;
  return r;
}

}  // namespace rtp_arb
