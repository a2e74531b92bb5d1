#include "rtp_arb/oracle.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <string>

#include "rtp_arb/errors.hpp"

namespace rtp_arb {

namespace {

// successor[s][a] = index of apply_action(states[s], a) in `states`.
std::vector<std::array<std::size_t, kNumActions>> successor_table(const std::vector<double>& states,
                                                                  const BatteryConfig& config) {
  std::vector<std::array<std::size_t, kNumActions>> table(states.size());
  for (std::size_t s = 0; s < states.size(); ++s) {
    for (Action a : kAllActions) {
      const double next = apply_action(states[s], a, config);
      auto it = std::min_element(states.begin(), states.end(),
                                 [&](double x, double y) { return std::abs(x - next) < std::abs(y - next); });
      table[s][action_index(a)] = static_cast<std::size_t>(it - states.begin());
    }
  }
  return table;
}

bool near_tie(double candidate, double best) { return candidate >= best - 1e-12 * std::abs(best); }

}  // namespace

HindsightPlan hindsight_optimal(const PriceSeries& prices, const BatteryConfig& config) {
  config.validate();
  const auto states = reachable_charges(config);
  const auto next = successor_table(states, config);
  const auto p = prices.prices();
  const std::size_t steps = episode_length(prices);
  const std::size_t ns = states.size();

  // value[n * ns + s]: best return from step n holding states[s]; value at n = steps is zero.
  std::vector<double> value((steps + 1) * ns, 0.0);
  for (std::size_t n = steps; n-- > 0;) {
    const double* later = &value[(n + 1) * ns];
    for (std::size_t s = 0; s < ns; ++s) {
      double best = -std::numeric_limits<double>::infinity();
      for (std::size_t a = 0; a < kNumActions; ++a) best = std::max(best, later[next[s][a]]);
      value[n * ns + s] = reward(states[s], p[n], p[n + 1]) + best;
    }
  }

  HindsightPlan plan;
  plan.actions.reserve(steps);
  std::size_t s = 0;  // states[0] == 0: start empty
  for (std::size_t n = 0; n < steps; ++n) {
    const double* later = &value[(n + 1) * ns];
    double best = -std::numeric_limits<double>::infinity();
    for (std::size_t a = 0; a < kNumActions; ++a) best = std::max(best, later[next[s][a]]);
    std::size_t chosen = 0;
    while (!near_tie(later[next[s][chosen]], best)) ++chosen;
    plan.actions.push_back(static_cast<Action>(chosen));
    s = next[s][chosen];
  }
  plan.value = value[0];
  return plan;
}

namespace {

void search(const PriceSeries& prices, const BatteryConfig& config, const EnvState& state, double so_far,
            double& best) {
  for (Action a : kAllActions) {
    const StepResult r = step(state, a, prices, config);
    const double total = so_far + r.reward;
    if (r.done) {
      best = std::max(best, total);
    } else {
      search(prices, config, r.state, total, best);
    }
  }
}

}  // namespace

double brute_force_optimal(const PriceSeries& prices, const BatteryConfig& config) {
  const std::size_t steps = episode_length(prices);
  if (steps > kBruteForceMaxSteps) {
    throw ParameterError("brute force refuses " + std::to_string(steps) + " steps (limit " +
                         std::to_string(kBruteForceMaxSteps) + ")");
  }
  auto [state, obs] = reset(prices, config, 0.0);
  (void)obs;
  double best = -std::numeric_limits<double>::infinity();
  search(prices, config, state, 0.0, best);
  return best;
}

Action threshold_policy(const Observation& obs, double low, double high) {
  if (!(low <= high)) throw ParameterError("threshold policy needs low <= high");
  if (obs.recent_prices.empty()) throw ShapeError("observation has no prices");
  const double latest = obs.recent_prices.back();
  if (latest < low) return Action::Charge;
  if (latest > high) return Action::Discharge;
  return Action::Idle;
}

}  // namespace rtp_arb
