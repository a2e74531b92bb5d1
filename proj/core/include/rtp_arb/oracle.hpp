#pragma once

#include <cstddef>
#include <vector>

#include "rtp_arb/env.hpp"
#include "rtp_arb/price_series.hpp"

namespace rtp_arb {

// Best action sequence with full knowledge of the price series.
struct HindsightPlan {
  std::vector<Action> actions;  // one per step
  double value = 0.0;           // cents
};

// Exact backward dynamic program over reachable_charges(config), starting
// empty. Near-ties in plan recovery go to the lowest action code.
// O(steps * states).
HindsightPlan hindsight_optimal(const PriceSeries& prices, const BatteryConfig& config);

inline constexpr std::size_t kBruteForceMaxSteps = 12;

// Exhaustive search over all 3^steps action sequences through the
// environment. Throws ParameterError beyond kBruteForceMaxSteps steps.
double brute_force_optimal(const PriceSeries& prices, const BatteryConfig& config);

// Charge below `low`, discharge above `high`, otherwise idle, keyed on the
// latest observed price.
Action threshold_policy(const Observation& obs, double low, double high);

constexpr Action idle_policy() noexcept { return Action::Idle; }

}  // namespace rtp_arb
