#pragma once

#include <chrono>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "rtp_arb/checkpoint.hpp"
#include "rtp_arb/dqn.hpp"
#include "rtp_arb/env.hpp"
#include "rtp_arb/price_series.hpp"

namespace rtp_arb {

struct CurvePoint {
  std::size_t step = 0;
  double greedy_return = 0.0;  // cents

  friend bool operator==(const CurvePoint&, const CurvePoint&) = default;
};

// Greedy evaluations taken during training, starting at step 0.
struct TrainingCurve {
  int year = 0;
  std::vector<CurvePoint> points;

  friend bool operator==(const TrainingCurve&, const TrainingCurve&) = default;
};

struct TrainOptions {
  BatteryConfig battery;
  DqnHyperparams hyper;
  std::size_t total_steps = 200'000;
  std::size_t eval_every = 10'000;
  std::uint64_t seed = 0;
  int year = 0;
  // Called after each greedy evaluation, including the one at step 0.
  std::function<void(const CurvePoint&)> on_eval;
};

struct TrainResult {
  TrainingCurve curve;
  Checkpoint best;   // snapshot at the first curve maximum
  Checkpoint final;  // network after the last step
  std::optional<std::string> failure;  // set when training stopped on a numerical error
};

// Trains on `prices` looped episodically (charge reset to 0 each pass) and
// evaluates greedily every `eval_every` steps. Throws ParameterError unless
// total_steps is a positive multiple of eval_every.
TrainResult train_agent(const PriceSeries& prices, const TrainOptions& options);

// One full pass from empty with epsilon = 0. Throws ConfigError if the
// checkpoint's window differs from config.window.
Rollout greedy_rollout(const Checkpoint& ckpt, const PriceSeries& prices, const BatteryConfig& config);
double evaluate_greedy(const Checkpoint& ckpt, const PriceSeries& prices, const BatteryConfig& config);

struct YearInput {
  int year = 0;
  Checkpoint checkpoint;
  PriceSeries prices;
};

// raw[a][y]: agent trained in years[a] evaluated on years[y].
struct CrossTestMatrix {
  std::vector<int> years;
  std::vector<std::vector<double>> raw;
  // raw[a][y] / raw[y][y]; nullopt when raw[y][y] <= 0.
  std::vector<std::vector<std::optional<double>>> normalized;

  // Mean normalized reward over the years the agent did not train on;
  // nullopt if none of them could be normalized.
  std::optional<double> off_diagonal_mean(std::size_t agent) const;
};

CrossTestMatrix normalize_cross_test(std::vector<int> years, std::vector<std::vector<double>> raw);

// Evaluates every agent on every year, one thread per agent.
CrossTestMatrix cross_test(std::span<const YearInput> inputs, const BatteryConfig& config);

struct DailyPolicyRow {
  HourStamp hour;
  double price = 0.0;
  Action action = Action::Idle;
  double charge_after = 0.0;
};

// The 24 hours of `day` from a greedy pass over the whole series.
std::vector<DailyPolicyRow> daily_policy(const Checkpoint& ckpt, const PriceSeries& prices,
                                         const BatteryConfig& config, std::chrono::sys_days day);

// CSV schemas
//   training_curves.csv: year,step,greedy_return_cents
//   cross_test.csv:      agent_year,test_year,raw_return_cents,normalized (blank when suppressed)
//   daily_policy.csv:    hour_start_utc,price_cents_per_kwh,action,charge_kwh_after
std::string training_curves_csv(std::span<const TrainingCurve> curves);
std::string cross_test_csv(const CrossTestMatrix& matrix);
std::string daily_policy_csv(std::span<const DailyPolicyRow> rows);

std::vector<TrainingCurve> parse_training_curves_csv(std::string_view text);
CrossTestMatrix parse_cross_test_csv(std::string_view text);
std::vector<DailyPolicyRow> parse_daily_policy_csv(std::string_view text);

std::string training_curves_svg(std::span<const TrainingCurve> curves);
std::string cross_test_svg(const CrossTestMatrix& matrix);
std::string daily_policy_svg(std::span<const DailyPolicyRow> rows);

struct ExperimentOutputs {
  std::vector<TrainingCurve> curves;
  std::optional<CrossTestMatrix> matrix;
  std::vector<DailyPolicyRow> daily;
};

// Writes each present data set as CSV plus its SVG rendering. Returns the
// paths written. Throws IoError when the directory cannot be written.
std::vector<std::filesystem::path> emit_outputs(const ExperimentOutputs& outputs,
                                                const std::filesystem::path& out_dir);

// Re-renders SVGs from whichever CSVs exist in `dir`.
std::vector<std::filesystem::path> render_directory(const std::filesystem::path& dir);

}  // namespace rtp_arb
