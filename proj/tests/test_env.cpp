#include <gtest/gtest.h>

#include <algorithm>
#include <set>

#include "rtp_arb/env.hpp"
#include "rtp_arb/errors.hpp"
#include "test_support.hpp"

namespace rtp_arb {
namespace {

using testing::random_action;
using testing::random_series;

const BatteryConfig kPowerwall{13.5, 5.0, 48};

TEST(ApplyAction, ChargeSaturatesAtCapacity) { EXPECT_EQ(apply_action(11.0, Action::Charge, kPowerwall), 13.5); }

TEST(ApplyAction, DischargeStopsAtEmpty) { EXPECT_EQ(apply_action(3.5, Action::Discharge, kPowerwall), 0.0); }

TEST(ApplyAction, IdleKeepsCharge) {
  EXPECT_EQ(apply_action(5.0, Action::Idle, kPowerwall), 5.0);
  EXPECT_EQ(apply_action(5.0, Action::Idle, BatteryConfig{7.0, 1.0, 1}), 5.0);
}

TEST(ApplyAction, RejectsChargeOutsideBounds) {
  EXPECT_THROW(apply_action(-0.1, Action::Idle, kPowerwall), DomainError);
  EXPECT_THROW(apply_action(13.6, Action::Charge, kPowerwall), DomainError);
}

TEST(ApplyAction, FullBatteryChargeIsLegalNoOp) { EXPECT_EQ(apply_action(13.5, Action::Charge, kPowerwall), 13.5); }

TEST(Reward, Examples) {
  EXPECT_DOUBLE_EQ(reward(10.0, 3.0, 4.2), 12.0);
  EXPECT_EQ(reward(0.0, 7.0, -3.0), 0.0);
  EXPECT_EQ(reward(13.5, 5.0, 5.0), 0.0);
}

TEST(Reset, PadsWindowWithFirstPrice) {
  const auto s = PriceSeries::from_prices({2.1, 3.0, 4.0});
  auto [state, obs] = reset(s, BatteryConfig{13.5, 5.0, 3}, 0.0);
  EXPECT_EQ(state.step_index, 0u);
  EXPECT_EQ(obs.recent_prices, (std::vector<double>{2.1, 2.1, 2.1}));
  EXPECT_EQ(obs.charge, 0.0);
}

TEST(Reset, WindowOfOneNeedsNoPadding) {
  const auto s = PriceSeries::from_prices({2.1, 3.0});
  auto [state, obs] = reset(s, BatteryConfig{13.5, 5.0, 1}, 0.0);
  EXPECT_EQ(obs.recent_prices, std::vector<double>{2.1});
}

TEST(Reset, FullInitialCharge) {
  const auto s = PriceSeries::from_prices({2.1, 3.0});
  auto [state, obs] = reset(s, kPowerwall, 13.5);
  EXPECT_EQ(state.charge, 13.5);
  EXPECT_EQ(obs.charge, 13.5);
}

TEST(Reset, RejectsBadInitialChargeAndConfig) {
  const auto s = PriceSeries::from_prices({2.1, 3.0});
  EXPECT_THROW(reset(s, kPowerwall, 14.0), DomainError);
  EXPECT_THROW(reset(s, BatteryConfig{0.0, 5.0, 1}), ConfigError);
  EXPECT_THROW(reset(s, BatteryConfig{1.0, 5.0, 0}), ConfigError);
}

TEST(PriceSeriesTest, TooShortIsInsufficient) {
  EXPECT_THROW(PriceSeries::from_prices({1.0}), InsufficientDataError);
}

TEST(Step, RewardUsesPreActionCharge) {
  const auto s = PriceSeries::from_prices({3.0, 1.0, 5.0});
  const BatteryConfig cfg{1.0, 1.0, 1};
  auto [state, obs] = reset(s, cfg);
  const StepResult first = step(state, Action::Charge, s, cfg);
  EXPECT_EQ(first.state.charge, 1.0);
  EXPECT_EQ(first.reward, 0.0);
  EXPECT_EQ(first.obs.recent_prices, std::vector<double>{1.0});
  EXPECT_FALSE(first.done);

  const StepResult second = step(first.state, Action::Idle, s, cfg);
  EXPECT_EQ(second.state.charge, 1.0);
  EXPECT_EQ(second.reward, 4.0);
  EXPECT_TRUE(second.done);
}

// Independent enumeration of all 9 two-step action pairs on [3, 1, 5]:
// the best return is 4, so the (Charge, Idle) trajectory above is optimal.
TEST(Step, TwoStepExampleIsEpisodeOptimum) {
  const std::vector<double> p{3.0, 1.0, 5.0};
  double best = -1e9;
  for (int a0 = 0; a0 < 3; ++a0) {
    for (int a1 = 0; a1 < 3; ++a1) {
      double w = 0.0, total = 0.0;
      for (int n = 0, a = a0; n < 2; ++n, a = a1) {
        total += w * (p[n + 1] - p[n]);
        w = a == 0 ? std::min(w + 1.0, 1.0) : a == 1 ? std::max(w - 1.0, 0.0) : w;
      }
      best = std::max(best, total);
    }
  }
  EXPECT_EQ(best, 4.0);
}

TEST(Step, ChargingWhenFullLeavesChargeUnchanged) {
  const auto s = PriceSeries::from_prices({4.0, 6.0, 5.0});
  const BatteryConfig cfg{13.5, 5.0, 1};
  auto [state, obs] = reset(s, cfg, 13.5);
  const StepResult r = step(state, Action::Charge, s, cfg);
  EXPECT_EQ(r.state.charge, 13.5);
  EXPECT_DOUBLE_EQ(r.reward, 13.5 * 2.0);
}

TEST(Step, SteppingFinishedEpisodeIsStateError) {
  const auto s = PriceSeries::from_prices({1.0, 2.0});
  const BatteryConfig cfg{1.0, 1.0, 1};
  auto [state, obs] = reset(s, cfg);
  const StepResult r = step(state, Action::Idle, s, cfg);
  ASSERT_TRUE(r.done);
  EXPECT_THROW(step(r.state, Action::Idle, s, cfg), StateError);

  BatteryEnv env(s, cfg);
  env.step(Action::Idle);
  EXPECT_THROW(env.step(Action::Idle), StateError);
  env.reset();
  EXPECT_NO_THROW(env.step(Action::Idle));
}

// Fixed-point closure in integer tenths of a kWh, independent of the
// floating-point implementation.
std::set<int> closure_tenths(int w_tenths, int p_tenths) {
  std::set<int> seen{0};
  std::vector<int> todo{0};
  while (!todo.empty()) {
    const int w = todo.back();
    todo.pop_back();
    for (int next : {std::min(w + p_tenths, w_tenths), std::max(w - p_tenths, 0)}) {
      if (seen.insert(next).second) todo.push_back(next);
    }
  }
  return seen;
}

TEST(ReachableCharges, PowerwallMatchesIntegerClosure) {
  const auto got = reachable_charges(kPowerwall);
  std::vector<double> expected;
  for (int t : closure_tenths(135, 50)) expected.push_back(t / 10.0);
  EXPECT_EQ(got, expected);
  EXPECT_EQ(got, (std::vector<double>{0.0, 3.5, 5.0, 8.5, 10.0, 13.5}));
}

TEST(ReachableCharges, MultipleAndSaturatingCases) {
  EXPECT_EQ(reachable_charges(BatteryConfig{10.0, 5.0, 1}), (std::vector<double>{0.0, 5.0, 10.0}));
  EXPECT_EQ(reachable_charges(BatteryConfig{2.0, 5.0, 1}), (std::vector<double>{0.0, 2.0}));
}

TEST(ReachableCharges, SizeBoundAndClosureOnRandomConfigs) {
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> d(0.5, 20.0);
  for (int i = 0; i < 500; ++i) {
    const BatteryConfig cfg{d(rng), d(rng), 1};
    const auto states = reachable_charges(cfg);
    const auto bound = 2 * static_cast<std::size_t>(std::ceil(cfg.capacity_kwh / cfg.rate_kw)) + 2;
    EXPECT_LE(states.size(), bound);
    EXPECT_EQ(states.front(), 0.0);
    EXPECT_EQ(states.back(), cfg.capacity_kwh);
    for (double w : states) {
      for (Action a : kAllActions) {
        const double next = apply_action(w, a, cfg);
        const bool member = std::any_of(states.begin(), states.end(),
                                        [&](double v) { return std::abs(v - next) <= 1e-9 * cfg.capacity_kwh; });
        EXPECT_TRUE(member) << "W=" << cfg.capacity_kwh << " P=" << cfg.rate_kw << " w=" << w;
      }
    }
  }
}

TEST(EpisodeReturn, ConstantChargeTelescopes) {
  std::mt19937_64 rng(3);
  const auto s = random_series(rng, 300);
  const BatteryConfig cfg{13.5, 5.0, 4};
  const Rollout r = run_policy(s, cfg, [](const Observation&) { return Action::Idle; }, 7.25);
  EXPECT_NEAR(r.total, 7.25 * (s.prices().back() - s.prices().front()), 1e-9 * 7.25 * 20);
}

TEST(EpisodeReturn, AllIdleFromEmptyIsZero) {
  std::mt19937_64 rng(4);
  const auto s = random_series(rng, 100);
  EXPECT_EQ(run_policy(s, kPowerwall, [](const Observation&) { return Action::Idle; }).total, 0.0);
}

TEST(EpisodeReturn, RandomTrajectoryMatchesIndependentAccumulator) {
  std::mt19937_64 rng(5);
  const auto s = random_series(rng, 201);
  BatteryEnv env(s, kPowerwall);
  std::vector<Transition> ts;
  std::vector<double> charges{0.0};
  while (!env.done()) {
    Observation obs = env.observation();
    const Action a = random_action(rng);
    StepResult r = env.step(a);
    charges.push_back(r.state.charge);
    ts.push_back({std::move(obs), a, r.reward, r.obs, r.done});
  }
  ASSERT_EQ(ts.size(), 200u);
  double expected = 0.0;
  for (std::size_t n = 0; n < ts.size(); ++n) expected += charges[n] * (s.price(n + 1) - s.price(n));
  EXPECT_TRUE(testing::close_rel(episode_return(ts), expected, 1e-9));
  EXPECT_TRUE(ts.back().done);
  EXPECT_TRUE(std::none_of(ts.begin(), ts.end() - 1, [](const Transition& t) { return t.done; }));
}

TEST(EnvProperties, AccountingIdentityOverRandomEpisodes) {
  std::mt19937_64 rng(8);
  std::uniform_int_distribution<std::size_t> len(2, 400);
  std::uniform_real_distribution<double> d(0.5, 20.0);
  for (int episode = 0; episode < 1000; ++episode) {
    const BatteryConfig cfg{d(rng), d(rng), 2};
    const auto s = random_series(rng, len(rng));
    std::vector<Action> actions(s.size() - 1);
    for (auto& a : actions) a = random_action(rng);

    BatteryEnv env(s, cfg);
    double accumulated = 0.0;
    for (Action a : actions) accumulated += env.step(a).reward;

    double w = 0.0, expected = 0.0;
    for (std::size_t n = 0; n < actions.size(); ++n) {
      expected += w * (s.price(n + 1) - s.price(n));
      w = actions[n] == Action::Charge      ? std::min(w + cfg.rate_kw, cfg.capacity_kwh)
          : actions[n] == Action::Discharge ? std::max(w - cfg.rate_kw, 0.0)
                                            : w;
    }
    ASSERT_TRUE(testing::close_rel(accumulated, expected, 1e-9)) << "episode " << episode;
    ASSERT_TRUE(testing::close_rel(simulate_actions(s, cfg, actions), expected, 1e-9));
  }
}

// Property: charge bounds, idle fixpoint, round trip, determinism and window
// contents over random configurations and action sequences.
TEST(EnvProperties, RandomEpisodes) {
  std::mt19937_64 rng(6);
  std::uniform_real_distribution<double> d(0.5, 20.0);
  std::uniform_int_distribution<std::size_t> win(1, 30), len(2, 120);
  for (int trial = 0; trial < 300; ++trial) {
    const BatteryConfig cfg{d(rng), d(rng), win(rng)};
    const auto s = random_series(rng, len(rng));
    std::vector<Action> actions(s.size() - 1);
    for (auto& a : actions) a = random_action(rng);

    auto run = [&] {
      std::vector<StepResult> out;
      auto [state, obs] = reset(s, cfg);
      for (Action a : actions) {
        out.push_back(step(state, a, s, cfg));
        state = out.back().state;
      }
      return out;
    };
    const auto first = run();
    const auto second = run();
    for (std::size_t n = 0; n < first.size(); ++n) {
      const auto& r = first[n];
      EXPECT_GE(r.state.charge, 0.0);
      EXPECT_LE(r.state.charge, cfg.capacity_kwh);
      EXPECT_EQ(r.obs.recent_prices.size(), cfg.window);
      EXPECT_EQ(r.reward, second[n].reward);
      EXPECT_EQ(r.state.charge, second[n].state.charge);
      EXPECT_EQ(r.obs, second[n].obs);
      const std::size_t idx = n + 1;
      if (idx + 1 >= cfg.window) {
        for (std::size_t k = 0; k < cfg.window; ++k) {
          EXPECT_EQ(r.obs.recent_prices[k], s.price(idx + 1 - cfg.window + k));
        }
      }
      const double before = n == 0 ? 0.0 : first[n - 1].state.charge;
      if (actions[n] == Action::Idle) {
        EXPECT_EQ(r.state.charge, before);
      }
      if (before + cfg.rate_kw <= cfg.capacity_kwh) {
        EXPECT_NEAR(apply_action(apply_action(before, Action::Charge, cfg), Action::Discharge, cfg), before,
                    1e-12 * (cfg.capacity_kwh + cfg.rate_kw));
      }
    }
  }
}

TEST(EnvProperties, PriceShiftInvariance) {
  std::mt19937_64 rng(7);
  for (int trial = 0; trial < 100; ++trial) {
    const auto s = random_series(rng, 60);
    const double c = std::uniform_real_distribution<double>(-50.0, 50.0)(rng);
    std::vector<double> shifted(s.prices().begin(), s.prices().end());
    for (auto& p : shifted) p += c;
    const auto t = PriceSeries::from_prices(shifted);
    std::vector<Action> actions(s.size() - 1);
    for (auto& a : actions) a = random_action(rng);
    double charge = 0.0;
    for (std::size_t n = 0; n < actions.size(); ++n) {
      EXPECT_NEAR(reward(charge, s.price(n), s.price(n + 1)), reward(charge, t.price(n), t.price(n + 1)), 1e-9 * 20 * 100);
      charge = apply_action(charge, actions[n], kPowerwall);
    }
    EXPECT_NEAR(simulate_actions(s, kPowerwall, actions), simulate_actions(t, kPowerwall, actions), 1e-7);
  }
}

TEST(Actions, NamesRoundTrip) {
  for (Action a : kAllActions) EXPECT_EQ(action_from_string(to_string(a)), a);
  EXPECT_FALSE(action_from_string("hold").has_value());
  EXPECT_EQ(action_index(Action::Charge), 0u);
  EXPECT_EQ(action_index(Action::Discharge), 1u);
  EXPECT_EQ(action_index(Action::Idle), 2u);
}

}  // namespace
}  // namespace rtp_arb
