#include "rtp_arb/experiment.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <future>
#include <map>
#include <sstream>

#include "rtp_arb/errors.hpp"
#include "rtp_arb/ingest.hpp"
#include "rtp_arb/network.hpp"
#include "rtp_arb/svg.hpp"

namespace rtp_arb {

namespace {

Rng derived_rng(std::uint64_t seed, std::uint64_t stream) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(stream)};
  return Rng(seq);
}

void check_window(const Checkpoint& ckpt, const BatteryConfig& config) {
  if (ckpt.window() != config.window) {
    throw ConfigError("checkpoint was trained with window " + std::to_string(ckpt.window()) +
                      " but the configuration uses window " + std::to_string(config.window));
  }
}

std::vector<std::string> split_csv_line(std::string_view line) {
  std::vector<std::string> out;
  std::size_t start = 0;
  for (;;) {
    const auto comma = line.find(',', start);
    out.emplace_back(line.substr(start, comma == std::string_view::npos ? std::string_view::npos : comma - start));
    if (comma == std::string_view::npos) break;
    start = comma + 1;
  }
  return out;
}

// Yields data rows (header checked) as split fields with their 1-based line numbers.
template <typename F>
void for_each_row(std::string_view text, std::string_view header, F&& f) {
  std::size_t row = 0;
  bool header_seen = false;
  while (!text.empty()) {
    const auto nl = text.find('\n');
    std::string_view line = text.substr(0, nl);
    text = nl == std::string_view::npos ? std::string_view{} : text.substr(nl + 1);
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    ++row;
    if (!header_seen) {
      if (line != header) {
        throw ValidationError("expected header '" + std::string(header) + "'", row);
      }
      header_seen = true;
      continue;
    }
    if (line.empty()) continue;
    f(split_csv_line(line), row);
  }
  if (!header_seen) throw ValidationError("missing header '" + std::string(header) + "'", 0);
}

template <typename T>
T parse_number(const std::string& s, std::size_t row, std::string_view column) {
  T v{};
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc{} || ptr != s.data() + s.size()) {
    throw ValidationError("column '" + std::string(column) + "': '" + s + "' is not a number", row);
  }
  return v;
}

void write_text(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open '" + path.string() + "' for writing");
  out << text;
  if (!out) throw IoError("write to '" + path.string() + "' failed");
}

std::optional<std::string> read_text_if_exists(const std::filesystem::path& path) {
  if (!std::filesystem::exists(path)) return std::nullopt;
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open '" + path.string() + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

}  // namespace

TrainResult train_agent(const PriceSeries& prices, const TrainOptions& options) {
  const auto& battery = options.battery;
  const auto& hp = options.hyper;
  battery.validate();
  hp.validate();
  if (options.eval_every == 0 || options.total_steps == 0 || options.total_steps % options.eval_every != 0) {
    throw ParameterError("total_steps (" + std::to_string(options.total_steps) +
                         ") must be a positive multiple of eval_every (" + std::to_string(options.eval_every) + ")");
  }

  Checkpoint live;
  live.net = init_network(battery.window, options.seed);
  live.normalizer = ObservationNormalizer::fit(prices, battery);
  live.optimizer = OptimizerState::for_network(live.net, hp.learning_rate);
  live.metadata.training_year = options.year;
  QNetwork target = live.net;

  Rng explore_rng = derived_rng(options.seed, 1);
  Rng sample_rng = derived_rng(options.seed, 2);
  ReplayBuffer buffer(hp.buffer_capacity);

  TrainResult result;
  result.curve.year = options.year;
  auto evaluate_now = [&](std::size_t step) {
    const double ret = greedy_rollout(live, prices, battery).total;
    const CurvePoint point{step, ret};
    result.curve.points.push_back(point);
    if (result.curve.points.size() == 1 || ret > result.best.metadata.eval_reward) {
      result.best = live;
      result.best.metadata.step = step;
      result.best.metadata.eval_reward = ret;
    }
    if (options.on_eval) options.on_eval(point);
  };
  evaluate_now(0);

  BatteryEnv env(prices, battery);
  Observation obs = env.reset();
  std::size_t updates = 0;
  try {
    for (std::size_t t = 0; t < options.total_steps; ++t) {
      const double eps = epsilon_at(hp.exploration, t, options.total_steps);
      const QValues q = forward(live.net, obs, live.normalizer);
      const Action action = select_action(q, eps, explore_rng);
      StepResult r = env.step(action);
      Observation next_obs = r.done ? env.reset() : r.obs;
      buffer.push(Transition{std::move(obs), action, r.reward, std::move(r.obs), r.done});
      obs = std::move(next_obs);

      const std::size_t done_steps = t + 1;
      if (done_steps >= hp.learning_starts && done_steps % hp.train_every == 0) {
        if (train_step(live.net, target, buffer, live.optimizer, live.normalizer, hp.batch_size, hp.gamma,
                       sample_rng)) {
          if (++updates % hp.target_sync_every == 0) sync_target(live.net, target);
        }
      }
      if (done_steps % options.eval_every == 0) evaluate_now(done_steps);
    }
  } catch (const NumericalError& e) {
    result.failure = std::string(e.what()) + " (after " + std::to_string(updates) + " gradient updates, " +
                     std::to_string(result.curve.points.size()) + " curve points recorded)";
  }
  result.final = live;
  if (!result.curve.points.empty()) {
    result.final.metadata.step = result.curve.points.back().step;
    result.final.metadata.eval_reward = result.curve.points.back().greedy_return;
  }
  return result;
}

Rollout greedy_rollout(const Checkpoint& ckpt, const PriceSeries& prices, const BatteryConfig& config) {
  check_window(ckpt, config);
  std::vector<double> features(config.window + 1);
  return run_policy(prices, config, [&](const Observation& obs) {
    ckpt.normalizer.features_into(obs, features);
    return greedy_action(ckpt.net.evaluate(features));
  });
}

double evaluate_greedy(const Checkpoint& ckpt, const PriceSeries& prices, const BatteryConfig& config) {
  return greedy_rollout(ckpt, prices, config).total;
}

std::optional<double> CrossTestMatrix::off_diagonal_mean(std::size_t agent) const {
  double sum = 0.0;
  std::size_t count = 0;
  for (std::size_t y = 0; y < years.size(); ++y) {
    if (y == agent || !normalized.at(agent)[y]) continue;
    sum += *normalized[agent][y];
    ++count;
  }
  if (count == 0) return std::nullopt;
  return sum / static_cast<double>(count);
}

CrossTestMatrix normalize_cross_test(std::vector<int> years, std::vector<std::vector<double>> raw) {
  const std::size_t n = years.size();
  if (raw.size() != n || std::any_of(raw.begin(), raw.end(), [n](const auto& row) { return row.size() != n; })) {
    throw ShapeError("cross-test grid must be square over the year list");
  }
  CrossTestMatrix m;
  m.years = std::move(years);
  m.raw = std::move(raw);
  m.normalized.assign(n, std::vector<std::optional<double>>(n));
  for (std::size_t y = 0; y < n; ++y) {
    const double same_year = m.raw[y][y];
    if (!(same_year > 0.0)) continue;
    for (std::size_t a = 0; a < n; ++a) {
      m.normalized[a][y] = a == y ? 1.0 : m.raw[a][y] / same_year;
    }
  }
  return m;
}

CrossTestMatrix cross_test(std::span<const YearInput> inputs, const BatteryConfig& config) {
  if (inputs.size() < 2) throw ParameterError("cross-test needs at least 2 years");
  std::vector<int> years;
  for (const auto& in : inputs) years.push_back(in.year);
  std::vector<std::future<std::vector<double>>> rows;
  for (const auto& agent : inputs) {
    check_window(agent.checkpoint, config);
    rows.push_back(std::async(std::launch::async, [&agent, &inputs, &config] {
      std::vector<double> row;
      for (const auto& test : inputs) row.push_back(evaluate_greedy(agent.checkpoint, test.prices, config));
      return row;
    }));
  }
  std::vector<std::vector<double>> raw;
  for (auto& f : rows) raw.push_back(f.get());
  return normalize_cross_test(std::move(years), std::move(raw));
}

std::vector<DailyPolicyRow> daily_policy(const Checkpoint& ckpt, const PriceSeries& prices,
                                         const BatteryConfig& config, std::chrono::sys_days day) {
  const HourStamp first = day;
  const auto hours = prices.hours();
  const auto it = std::find(hours.begin(), hours.end(), first);
  if (it == hours.end()) {
    throw ParameterError("day " + format_hour_utc(first).substr(0, 10) + " is not covered by the price series");
  }
  const auto start = static_cast<std::size_t>(it - hours.begin());
  if (start + 24 > episode_length(prices)) {
    throw ParameterError("day " + format_hour_utc(first).substr(0, 10) +
                         " needs 24 actionable hours; the series ends too early");
  }
  const Rollout roll = greedy_rollout(ckpt, prices, config);
  std::vector<DailyPolicyRow> rows;
  for (std::size_t n = start; n < start + 24; ++n) {
    rows.push_back({prices.hour(n), prices.price(n), roll.actions[n], roll.charges_after[n]});
  }
  return rows;
}

std::string training_curves_csv(std::span<const TrainingCurve> curves) {
  std::string out = "year,step,greedy_return_cents\n";
  for (const auto& c : curves) {
    for (const auto& p : c.points) {
      out += std::to_string(c.year) + "," + std::to_string(p.step) + "," + format_shortest(p.greedy_return) + "\n";
    }
  }
  return out;
}

std::string cross_test_csv(const CrossTestMatrix& m) {
  std::string out = "agent_year,test_year,raw_return_cents,normalized\n";
  for (std::size_t a = 0; a < m.years.size(); ++a) {
    for (std::size_t y = 0; y < m.years.size(); ++y) {
      out += std::to_string(m.years[a]) + "," + std::to_string(m.years[y]) + "," + format_shortest(m.raw[a][y]) + ",";
      if (m.normalized[a][y]) out += format_shortest(*m.normalized[a][y]);
      out += "\n";
    }
  }
  return out;
}

std::string daily_policy_csv(std::span<const DailyPolicyRow> rows) {
  std::string out = "hour_start_utc,price_cents_per_kwh,action,charge_kwh_after\n";
  for (const auto& r : rows) {
    out += format_hour_utc(r.hour) + "," + format_shortest(r.price) + "," + std::string(to_string(r.action)) + "," +
           format_shortest(r.charge_after) + "\n";
  }
  return out;
}

std::vector<TrainingCurve> parse_training_curves_csv(std::string_view text) {
  std::vector<TrainingCurve> curves;
  for_each_row(text, "year,step,greedy_return_cents", [&](const std::vector<std::string>& f, std::size_t row) {
    if (f.size() != 3) throw ValidationError("expected 3 columns", row);
    const int year = parse_number<int>(f[0], row, "year");
    const CurvePoint p{parse_number<std::size_t>(f[1], row, "step"),
                       parse_number<double>(f[2], row, "greedy_return_cents")};
    if (curves.empty() || curves.back().year != year) curves.push_back({year, {}});
    curves.back().points.push_back(p);
  });
  return curves;
}

CrossTestMatrix parse_cross_test_csv(std::string_view text) {
  std::vector<int> years;
  std::map<std::pair<int, int>, double> raw;
  for_each_row(text, "agent_year,test_year,raw_return_cents,normalized",
               [&](const std::vector<std::string>& f, std::size_t row) {
                 if (f.size() != 4) throw ValidationError("expected 4 columns", row);
                 const int agent = parse_number<int>(f[0], row, "agent_year");
                 const int test = parse_number<int>(f[1], row, "test_year");
                 raw[{agent, test}] = parse_number<double>(f[2], row, "raw_return_cents");
                 if (std::find(years.begin(), years.end(), agent) == years.end()) years.push_back(agent);
               });
  std::vector<std::vector<double>> grid(years.size(), std::vector<double>(years.size()));
  for (std::size_t a = 0; a < years.size(); ++a) {
    for (std::size_t y = 0; y < years.size(); ++y) {
      auto it = raw.find({years[a], years[y]});
      if (it == raw.end()) {
        throw ValidationError("missing entry for agent " + std::to_string(years[a]) + " on year " +
                                  std::to_string(years[y]),
                              0);
      }
      grid[a][y] = it->second;
    }
  }
  return normalize_cross_test(std::move(years), std::move(grid));
}

std::vector<DailyPolicyRow> parse_daily_policy_csv(std::string_view text) {
  std::vector<DailyPolicyRow> rows;
  for_each_row(text, "hour_start_utc,price_cents_per_kwh,action,charge_kwh_after",
               [&](const std::vector<std::string>& f, std::size_t row) {
                 if (f.size() != 4) throw ValidationError("expected 4 columns", row);
                 DailyPolicyRow r;
                 try {
                   r.hour = parse_hour_utc(f[0]);
                 } catch (const ParseError& e) {
                   throw ValidationError(e.what(), row);
                 }
                 r.price = parse_number<double>(f[1], row, "price_cents_per_kwh");
                 const auto action = action_from_string(f[2]);
                 if (!action) throw ValidationError("unknown action '" + f[2] + "'", row);
                 r.action = *action;
                 r.charge_after = parse_number<double>(f[3], row, "charge_kwh_after");
                 rows.push_back(r);
               });
  return rows;
}

std::string training_curves_svg(std::span<const TrainingCurve> curves) {
  std::vector<svg::LineSeries> series;
  for (const auto& c : curves) {
    svg::LineSeries s{"agent " + std::to_string(c.year), {}};
    // Dollars per year read better on the axis than cents.
    for (const auto& p : c.points) s.points.emplace_back(static_cast<double>(p.step), p.greedy_return / 100.0);
    series.push_back(std::move(s));
  }
  return svg::line_chart("Training curves", "training step (hours)", "greedy return ($)", series);
}

std::string cross_test_svg(const CrossTestMatrix& m) {
  std::vector<svg::Bar> bars;
  for (std::size_t a = 0; a < m.years.size(); ++a) {
    if (auto mean = m.off_diagonal_mean(a)) bars.push_back({std::to_string(m.years[a]), *mean});
  }
  return svg::bar_chart("Mean normalized reward in non-training years", "normalized reward", bars);
}

std::string daily_policy_svg(std::span<const DailyPolicyRow> rows) {
  std::vector<std::string> ticks;
  std::vector<double> prices;
  std::vector<svg::StepMarker> markers;
  for (const auto& r : rows) {
    ticks.push_back(format_hour_utc(r.hour).substr(11, 5));
    prices.push_back(r.price);
    markers.push_back({static_cast<int>(action_index(r.action)),
                       format_hour_utc(r.hour) + " " + std::string(to_string(r.action))});
  }
  const std::string day = rows.empty() ? std::string{} : format_hour_utc(rows.front().hour).substr(0, 10);
  return svg::step_chart("Actions on " + day, "hour (UTC)", "price (cents/kWh)", ticks, prices, markers);
}

std::vector<std::filesystem::path> emit_outputs(const ExperimentOutputs& outputs,
                                                const std::filesystem::path& out_dir) {
  std::error_code ec;
  std::filesystem::create_directories(out_dir, ec);
  if (ec) throw IoError("cannot create output directory '" + out_dir.string() + "': " + ec.message());
  std::vector<std::filesystem::path> written;
  auto put = [&](const char* name, const std::string& text) {
    write_text(out_dir / name, text);
    written.push_back(out_dir / name);
  };
  if (!outputs.curves.empty()) {
    put("training_curves.csv", training_curves_csv(outputs.curves));
    put("training_curves.svg", training_curves_svg(outputs.curves));
  }
  if (outputs.matrix) {
    put("cross_test.csv", cross_test_csv(*outputs.matrix));
    put("cross_test.svg", cross_test_svg(*outputs.matrix));
  }
  if (!outputs.daily.empty()) {
    put("daily_policy.csv", daily_policy_csv(outputs.daily));
    put("daily_policy.svg", daily_policy_svg(outputs.daily));
  }
  return written;
}

std::vector<std::filesystem::path> render_directory(const std::filesystem::path& dir) {
  if (!std::filesystem::is_directory(dir)) throw IoError("'" + dir.string() + "' is not a directory");
  std::vector<std::filesystem::path> written;
  auto rethrow_with_file = [](const std::filesystem::path& p, const ValidationError& e) {
    throw ValidationError(e.detail(), e.row(), p.string());
  };
  if (auto text = read_text_if_exists(dir / "training_curves.csv")) {
    try {
      write_text(dir / "training_curves.svg", training_curves_svg(parse_training_curves_csv(*text)));
    } catch (const ValidationError& e) {
      rethrow_with_file(dir / "training_curves.csv", e);
    }
    written.push_back(dir / "training_curves.svg");
  }
  if (auto text = read_text_if_exists(dir / "cross_test.csv")) {
    try {
      write_text(dir / "cross_test.svg", cross_test_svg(parse_cross_test_csv(*text)));
    } catch (const ValidationError& e) {
      rethrow_with_file(dir / "cross_test.csv", e);
    }
    written.push_back(dir / "cross_test.svg");
  }
  if (auto text = read_text_if_exists(dir / "daily_policy.csv")) {
    try {
      write_text(dir / "daily_policy.svg", daily_policy_svg(parse_daily_policy_csv(*text)));
    } catch (const ValidationError& e) {
      rethrow_with_file(dir / "daily_policy.csv", e);
    }
    written.push_back(dir / "daily_policy.svg");
  }
  return written;
}

}  // namespace rtp_arb
