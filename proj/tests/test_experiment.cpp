#include <gtest/gtest.h>

#include <fstream>
#include <sstream>

#include <boost/property_tree/ptree.hpp>
#include <boost/property_tree/xml_parser.hpp>

#include "rtp_arb/errors.hpp"
#include "rtp_arb/experiment.hpp"
#include "rtp_arb/oracle.hpp"
#include "test_support.hpp"

namespace rtp_arb {
namespace {

using namespace std::chrono;

std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

std::size_t count_lines(const std::string& text) { return static_cast<std::size_t>(std::count(text.begin(), text.end(), '\n')); }

// Number of elements named `tag` anywhere in a well-formed XML document.
// Throws if the document does not parse.
std::size_t count_elements(const std::string& xml, const std::string& tag) {
  boost::property_tree::ptree tree;
  std::istringstream in(xml);
  boost::property_tree::read_xml(in, tree);
  std::function<std::size_t(const boost::property_tree::ptree&)> walk = [&](const boost::property_tree::ptree& t) {
    std::size_t n = 0;
    for (const auto& [name, child] : t) n += (name == tag) + walk(child);
    return n;
  };
  return walk(tree);
}

// Output biases fix the greedy action regardless of input: all-zero picks
// Charge by tie-break, a positive Idle bias picks Idle.
Checkpoint constant_policy(std::size_t window, QValues output_bias) {
  const std::array<std::size_t, 4> dims{window + 1, 64, 64, 3};
  Checkpoint c;
  c.net = QNetwork::zeros(dims);
  c.net.layers.back().bias.assign(output_bias.begin(), output_bias.end());
  c.optimizer = OptimizerState::for_network(c.net);
  return c;
}

// Charge-to-full-and-hold from empty, accumulated independently.
double charge_and_hold_return(const PriceSeries& s, const BatteryConfig& cfg) {
  double w = 0.0, total = 0.0;
  for (std::size_t n = 0; n + 1 < s.size(); ++n) {
    total += w * (s.price(n + 1) - s.price(n));
    w = std::min(w + cfg.rate_kw, cfg.capacity_kwh);
  }
  return total;
}

TrainOptions quick_options(std::uint64_t seed) {
  TrainOptions o;
  o.battery = BatteryConfig{13.5, 5.0, 24};
  o.total_steps = 6000;
  o.eval_every = 1000;
  o.seed = seed;
  o.year = 2016;
  return o;
}

TEST(Train, CurveCadenceAndBestCheckpoint) {
  const auto s = testing::square_wave(24 * 20);
  std::vector<CurvePoint> seen;
  TrainOptions o = quick_options(3);
  o.on_eval = [&](const CurvePoint& p) { seen.push_back(p); };
  const TrainResult r = train_agent(s, o);
  ASSERT_FALSE(r.failure.has_value());
  ASSERT_EQ(r.curve.points.size(), 7u);
  EXPECT_EQ(r.curve.year, 2016);
  EXPECT_EQ(seen, r.curve.points);
  for (std::size_t i = 0; i < r.curve.points.size(); ++i) EXPECT_EQ(r.curve.points[i].step, i * 1000);

  const double opt = hindsight_optimal(s, o.battery).value;
  auto best = r.curve.points.begin();
  for (auto it = r.curve.points.begin(); it != r.curve.points.end(); ++it) {
    EXPECT_LE(it->greedy_return, opt + 1e-9 * opt);
    if (it->greedy_return > best->greedy_return) best = it;
  }
  EXPECT_EQ(r.best.metadata.step, best->step);
  EXPECT_EQ(r.best.metadata.eval_reward, best->greedy_return);
  EXPECT_EQ(r.best.metadata.training_year, 2016);
  EXPECT_EQ(evaluate_greedy(r.best, s, o.battery), best->greedy_return);
  EXPECT_EQ(evaluate_greedy(r.final, s, o.battery), r.curve.points.back().greedy_return);
  EXPECT_EQ(r.final.metadata.step, 6000u);
}

TEST(Train, DefaultCadenceGivesTwentyOnePoints) {
  // 200000 / 10000 evaluations after step 0, plus step 0 itself. Exercised
  // with a tiny series and the same step/eval ratio scaled down 100x.
  TrainOptions o;
  o.battery = BatteryConfig{13.5, 5.0, 2};
  o.hyper.learning_starts = 100;
  o.total_steps = 2000;
  o.eval_every = 100;
  const TrainResult r = train_agent(testing::square_wave(48), o);
  EXPECT_EQ(r.curve.points.size(), 2000u / 100u + 1);
}

TEST(Train, IdenticalSeedsGiveIdenticalRuns) {
  const auto s = testing::square_wave(24 * 10);
  const TrainResult a = train_agent(s, quick_options(11));
  const TrainResult b = train_agent(s, quick_options(11));
  EXPECT_EQ(a.curve, b.curve);
  EXPECT_EQ(a.best.net, b.best.net);
  EXPECT_EQ(a.final.net, b.final.net);
  EXPECT_EQ(a.final.optimizer, b.final.optimizer);
  EXPECT_EQ(serialize_checkpoint(a.final), serialize_checkpoint(b.final));
  const TrainResult c = train_agent(s, quick_options(12));
  EXPECT_NE(c.final.net, a.final.net);
}

TEST(Train, RejectsBadCadence) {
  TrainOptions o = quick_options(0);
  o.total_steps = 2500;
  EXPECT_THROW(train_agent(testing::square_wave(48), o), ParameterError);
  o.total_steps = 0;
  EXPECT_THROW(train_agent(testing::square_wave(48), o), ParameterError);
}

TEST(Train, DivergenceStopsWithPartialCurve) {
  TrainOptions o = quick_options(1);
  o.hyper.learning_rate = 1e300;
  const TrainResult r = train_agent(testing::square_wave(24 * 10), o);
  ASSERT_TRUE(r.failure.has_value());
  EXPECT_NE(r.failure->find("gradient updates"), std::string::npos) << *r.failure;
  ASSERT_FALSE(r.curve.points.empty());
  EXPECT_EQ(r.curve.points.front().step, 0u);
  EXPECT_LT(r.curve.points.size(), 7u);
}

TEST(Evaluate, ZeroNetworkChargesToFullAndHolds) {
  std::mt19937_64 rng(41);
  const BatteryConfig cfg{13.5, 5.0, 6};
  const Checkpoint c = constant_policy(6, {0, 0, 0});
  for (int i = 0; i < 20; ++i) {
    const auto s = testing::random_series(rng, 500);
    const Rollout roll = greedy_rollout(c, s, cfg);
    EXPECT_TRUE(std::all_of(roll.actions.begin(), roll.actions.end(), [](Action a) { return a == Action::Charge; }));
    EXPECT_TRUE(testing::close_rel(roll.total, charge_and_hold_return(s, cfg), 1e-9));
    EXPECT_EQ(evaluate_greedy(c, s, cfg), roll.total);
    EXPECT_LE(roll.total, hindsight_optimal(s, cfg).value + 1e-9);
  }
}

TEST(Evaluate, WindowMismatchIsConfigError) {
  const Checkpoint c = constant_policy(6, {0, 0, 0});
  EXPECT_THROW(evaluate_greedy(c, testing::square_wave(48), BatteryConfig{13.5, 5.0, 5}), ConfigError);
}

TEST(CrossTest, NormalizationExamples) {
  const auto m = normalize_cross_test({2015, 2016}, {{100.0, 47.0}, {94.0, 50.0}});
  EXPECT_EQ(m.normalized[0][0], 1.0);
  EXPECT_EQ(m.normalized[1][1], 1.0);
  EXPECT_DOUBLE_EQ(*m.normalized[1][0], 0.94);
  EXPECT_DOUBLE_EQ(*m.normalized[0][1], 0.94);
  EXPECT_DOUBLE_EQ(*m.off_diagonal_mean(0), 0.94);
}

TEST(CrossTest, NonPositiveSameYearSuppressesNormalization) {
  const auto m = normalize_cross_test({2015, 2016, 2017}, {{0.0, 10.0, 5.0}, {3.0, 20.0, 5.0}, {1.0, 10.0, -4.0}});
  for (std::size_t a = 0; a < 3; ++a) {
    EXPECT_FALSE(m.normalized[a][0].has_value());
    EXPECT_FALSE(m.normalized[a][2].has_value());
    EXPECT_TRUE(m.normalized[a][1].has_value());
  }
  EXPECT_DOUBLE_EQ(*m.off_diagonal_mean(0), 0.5);
  EXPECT_DOUBLE_EQ(*m.off_diagonal_mean(2), 0.5);
  EXPECT_FALSE(m.off_diagonal_mean(1).has_value());
}

std::vector<YearInput> five_years(const std::vector<QValues>& biases, std::size_t window, std::mt19937_64& rng) {
  std::vector<YearInput> inputs;
  for (int y = 0; y < 5; ++y) {
    // Upward drift so that charge-and-hold earns a positive same-year return.
    std::vector<double> p(400);
    std::normal_distribution<double> step(0.25, 1.0);
    double level = 3.0;
    for (auto& v : p) v = level += step(rng);
    inputs.push_back({2015 + y, constant_policy(window, biases[static_cast<std::size_t>(y)]),
                      PriceSeries::from_prices(p, sys_days{year{2015 + y} / 1 / 1})});
  }
  return inputs;
}

TEST(CrossTest, FiveByFiveCountsAndDiagonal) {
  std::mt19937_64 rng(42);
  const BatteryConfig cfg{13.5, 5.0, 3};
  auto inputs = five_years(std::vector<QValues>(5, QValues{0, 0, 0}), 3, rng);
  for (const auto& in : inputs) ASSERT_GT(charge_and_hold_return(in.prices, cfg), 0.0);
  const CrossTestMatrix m = cross_test(inputs, cfg);
  ASSERT_EQ(m.years, (std::vector<int>{2015, 2016, 2017, 2018, 2019}));
  std::size_t raw = 0, off_diagonal = 0;
  for (std::size_t a = 0; a < 5; ++a) {
    ASSERT_EQ(m.raw[a].size(), 5u);
    for (std::size_t y = 0; y < 5; ++y) {
      ++raw;
      EXPECT_TRUE(testing::close_rel(m.raw[a][y], charge_and_hold_return(inputs[y].prices, cfg), 1e-9));
      ASSERT_TRUE(m.normalized[a][y].has_value());
      if (a == y) {
        EXPECT_EQ(*m.normalized[a][y], 1.0);
      } else {
        ++off_diagonal;
      }
    }
    ASSERT_TRUE(m.off_diagonal_mean(a).has_value());
  }
  EXPECT_EQ(raw, 25u);
  EXPECT_EQ(off_diagonal, 20u);
}

TEST(CrossTest, IdleAgentsSuppressTheirYear) {
  std::mt19937_64 rng(43);
  const BatteryConfig cfg{13.5, 5.0, 3};
  const QValues charge{0, 0, 0}, idle{0, 0, 1};
  const auto inputs = five_years({charge, idle, charge, idle, charge}, 3, rng);
  const CrossTestMatrix m = cross_test(inputs, cfg);
  for (std::size_t a = 0; a < 5; ++a) {
    EXPECT_EQ(m.raw[1][a], 0.0);
    EXPECT_FALSE(m.normalized[a][1].has_value());
    EXPECT_FALSE(m.normalized[a][3].has_value());
  }
}

TEST(CrossTest, NeedsTwoYears) {
  std::mt19937_64 rng(44);
  auto inputs = five_years(std::vector<QValues>(5, QValues{0, 0, 0}), 3, rng);
  inputs.erase(inputs.begin() + 1, inputs.end());
  EXPECT_THROW(cross_test(inputs, BatteryConfig{13.5, 5.0, 3}), ParameterError);
}

TEST(DailyPolicy, TwentyFourRowsFromFullPass) {
  const auto s = testing::square_wave(24 * 5);
  const BatteryConfig cfg{13.5, 5.0, 4};
  const Checkpoint c = constant_policy(4, {0, 0, 0});
  const auto day = sys_days{year{2018} / 1 / 3};
  const auto rows = daily_policy(c, s, cfg, day);
  ASSERT_EQ(rows.size(), 24u);
  EXPECT_EQ(rows.front().hour, HourStamp{day});
  for (std::size_t h = 0; h < 24; ++h) {
    EXPECT_EQ(rows[h].price, h < 12 ? 2.0 : 6.0);
    EXPECT_EQ(rows[h].action, Action::Charge);
    EXPECT_EQ(rows[h].charge_after, 13.5);
  }
  EXPECT_THROW(daily_policy(c, s, cfg, sys_days{year{2018} / 1 / 5}), ParameterError);
  EXPECT_THROW(daily_policy(c, s, cfg, sys_days{year{2017} / 1 / 5}), ParameterError);
}

TEST(Outputs, CsvRoundTrips) {
  const std::vector<TrainingCurve> curves{{2015, {{0, 1.5}, {10, -2.25}}}, {2016, {{0, 0.0}, {10, 7.0}}}};
  EXPECT_EQ(parse_training_curves_csv(training_curves_csv(curves)), curves);

  const auto m = normalize_cross_test({2015, 2016}, {{100.0, 47.0}, {-3.0, 0.0}});
  const auto back = parse_cross_test_csv(cross_test_csv(m));
  EXPECT_EQ(back.years, m.years);
  EXPECT_EQ(back.raw, m.raw);
  EXPECT_EQ(back.normalized, m.normalized);

  const std::vector<DailyPolicyRow> rows{{HourStamp{sys_days{year{2018} / 7 / 1}}, 2.5, Action::Discharge, 8.5}};
  const auto rows_back = parse_daily_policy_csv(daily_policy_csv(rows));
  ASSERT_EQ(rows_back.size(), 1u);
  EXPECT_EQ(rows_back[0].hour, rows[0].hour);
  EXPECT_EQ(rows_back[0].action, Action::Discharge);
  EXPECT_EQ(rows_back[0].charge_after, 8.5);
  EXPECT_EQ(daily_policy_csv(rows),
            "hour_start_utc,price_cents_per_kwh,action,charge_kwh_after\n2018-07-01T00:00:00Z,2.5,discharge,8.5\n");
}

TEST(Outputs, EmitWritesCsvAndWellFormedSvg) {
  std::vector<TrainingCurve> curves;
  for (int y = 2015; y <= 2019; ++y) {
    TrainingCurve c{y, {}};
    for (std::size_t k = 0; k <= 20; ++k) c.points.push_back({k * 10000, 100.0 * static_cast<double>(k) - y % 7});
    curves.push_back(c);
  }
  std::vector<std::vector<double>> raw(5, std::vector<double>(5, 100.0));
  raw[2][2] = -1.0;
  const auto s = testing::square_wave(24 * 5);
  ExperimentOutputs out{curves, normalize_cross_test({2015, 2016, 2017, 2018, 2019}, raw),
                        daily_policy(constant_policy(4, {0, 0, 0}), s, BatteryConfig{13.5, 5.0, 4},
                                     sys_days{year{2018} / 1 / 2})};

  const auto dir = testing::scratch_dir("emit");
  const auto written = emit_outputs(out, dir);
  EXPECT_EQ(written.size(), 6u);
  const std::string curves_csv = slurp(dir / "training_curves.csv");
  EXPECT_EQ(count_lines(curves_csv), 5u * 21u + 1u);
  EXPECT_EQ(count_lines(slurp(dir / "daily_policy.csv")), 25u);
  EXPECT_EQ(count_lines(slurp(dir / "cross_test.csv")), 26u);

  EXPECT_EQ(count_elements(slurp(dir / "training_curves.svg"), "polyline"), 5u);
  EXPECT_GT(count_elements(slurp(dir / "cross_test.svg"), "rect"), 0u);
  EXPECT_GT(count_elements(slurp(dir / "daily_policy.svg"), "polyline"), 0u);

  // One agent's curve with 21 points gives 21 rows plus the header.
  EXPECT_EQ(count_lines(training_curves_csv(std::span(curves).first(1))), 22u);

  std::filesystem::remove(dir / "training_curves.svg");
  const auto rendered = render_directory(dir);
  EXPECT_EQ(rendered.size(), 3u);
  EXPECT_EQ(count_elements(slurp(dir / "training_curves.svg"), "polyline"), 5u);
}

TEST(Outputs, SvgEscapesText) {
  const std::vector<TrainingCurve> curves{{2015, {{0, 1.0}, {1, 2.0}}}};
  EXPECT_NO_THROW(count_elements(training_curves_svg(curves), "polyline"));
}

TEST(Outputs, UnwritableDirectoryIsIoError) {
  const auto dir = testing::scratch_dir("emit_blocked");
  std::ofstream(dir / "file") << "x";
  ExperimentOutputs out;
  out.curves = {{2015, {{0, 1.0}}}};
  EXPECT_THROW(emit_outputs(out, dir / "file" / "sub"), IoError);
}

}  // namespace
}  // namespace rtp_arb
