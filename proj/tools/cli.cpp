#include "cli.hpp"

#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <map>
#include <optional>
#include <ostream>
#include <sstream>

#include <CLI11.hpp>

#include "rtp_arb/checkpoint.hpp"
#include "rtp_arb/errors.hpp"
#include "rtp_arb/experiment.hpp"
#include "rtp_arb/ingest.hpp"
#include "rtp_arb/oracle.hpp"
#include "run_config.hpp"

namespace rtp_arb::cli {

namespace {

namespace fs = std::filesystem;

std::string cents(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.1f cents ($%.2f)", v, v / 100.0);
  return buf;
}

std::chrono::sys_days parse_day(const std::string& text) {
  try {
    return std::chrono::floor<std::chrono::days>(parse_hour_utc(text + "T00:00:00Z"));
  } catch (const ParseError&) {
    throw ParameterError("--day expects YYYY-MM-DD, got '" + text + "'");
  }
}

struct ManifestRow {
  int year = 0;
  fs::path checkpoint;
  fs::path prices;
};

std::vector<ManifestRow> read_manifest(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open manifest '" + path.string() + "'");
  std::vector<ManifestRow> rows;
  std::string line;
  std::size_t row = 0;
  const fs::path base = path.parent_path();
  auto resolve = [&](const std::string& p) { return fs::path(p).is_absolute() ? fs::path(p) : base / p; };
  while (std::getline(in, line)) {
    ++row;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (row == 1) {
      if (line != "year,checkpoint_path,prices_path") {
        throw ValidationError("expected header 'year,checkpoint_path,prices_path'", row, path.string());
      }
      continue;
    }
    if (line.empty()) continue;
    std::stringstream ss(line);
    std::string year, ckpt, prices, extra;
    if (!std::getline(ss, year, ',') || !std::getline(ss, ckpt, ',') || !std::getline(ss, prices, ',') ||
        std::getline(ss, extra, ',')) {
      throw ValidationError("expected 3 columns", row, path.string());
    }
    ManifestRow r;
    try {
      r.year = std::stoi(year);
    } catch (const std::exception&) {
      throw ValidationError("year '" + year + "' is not an integer", row, path.string());
    }
    r.checkpoint = resolve(ckpt);
    r.prices = resolve(prices);
    rows.push_back(std::move(r));
  }
  if (row == 0) throw ValidationError("empty manifest", 0, path.string());
  return rows;
}

fs::path unique_run_dir(const fs::path& root, const std::string& stem) {
  fs::path dir = root / stem;
  for (int i = 2; fs::exists(dir); ++i) dir = root / (stem + "-" + std::to_string(i));
  return dir;
}

}  // namespace

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err, const Services& services) {
  CLI::App app{"Battery arbitrage under hourly real-time pricing: data, DQN training, hindsight oracle"};
  app.name("rtp-arb");
  app.require_subcommand(1);
  app.fallthrough();

  Overrides o;
  app.add_option("--config", o.config_file, "Flat key = value config file");
  app.add_option("--capacity", o.capacity, "Battery capacity W (kWh)");
  app.add_option("--rate", o.rate, "Charge/discharge rate P (kW)");
  app.add_option("--window", o.window, "Observation length L (hours)");
  app.add_option("--gamma", o.gamma, "Discount factor");
  app.add_option("--lr", o.learning_rate, "Learning rate");
  app.add_option("--batch", o.batch_size, "Minibatch size");
  app.add_option("--buffer", o.buffer_capacity, "Replay capacity");
  app.add_option("--learning-starts", o.learning_starts, "Steps before the first update");
  app.add_option("--train-every", o.train_every, "Environment steps per update");
  app.add_option("--target-sync", o.target_sync_every, "Updates per target-network copy");
  app.add_option("--data-dir", o.data_dir, "Price cache directory (overrides RTP_ARB_DATA_DIR)");
  app.add_option("--endpoint", o.endpoint, "5-minute price feed endpoint");

  auto* fetch = app.add_subcommand("fetch", "Download a year of 5-minute prices and cache hourly CSV");
  int fetch_year = 0;
  bool force = false;
  fetch->add_option("--year", fetch_year, "Calendar year (UTC)")->required();
  fetch->add_flag("--force", force, "Allow 2020");

  auto* train = app.add_subcommand("train", "Train a DQN agent on one price series");
  std::string train_prices;
  std::optional<int> train_year;
  train->add_option("--prices", train_prices, "Hourly price CSV")->required();
  train->add_option("--steps", o.steps, "Total environment steps");
  train->add_option("--eval-every", o.eval_every, "Steps between greedy evaluations");
  train->add_option("--seed", o.seed, "Random seed");
  train->add_option("--year", train_year, "Year label stored in the checkpoint");
  train->add_option("--out", o.output_dir, "Output root; each run gets its own subdirectory");

  auto* eval = app.add_subcommand("eval", "Greedy evaluation of a checkpoint");
  std::string eval_ckpt, eval_prices;
  std::optional<std::string> eval_day;
  std::optional<std::string> eval_out;
  eval->add_option("--checkpoint", eval_ckpt, "Checkpoint file")->required();
  eval->add_option("--prices", eval_prices, "Hourly price CSV")->required();
  eval->add_option("--day", eval_day, "Write the day's actions (YYYY-MM-DD, UTC)");
  eval->add_option("--out", eval_out, "Directory for daily_policy.csv/.svg");

  auto* xtest = app.add_subcommand("cross-test", "Evaluate every agent on every year");
  std::string manifest;
  std::optional<std::string> xtest_out;
  xtest->add_option("--manifest", manifest, "CSV: year,checkpoint_path,prices_path")->required();
  xtest->add_option("--out", xtest_out, "Output directory");

  auto* oracle = app.add_subcommand("oracle", "Hindsight-optimal dispatch for a price series");
  std::string oracle_prices;
  std::optional<std::string> oracle_out;
  oracle->add_option("--prices", oracle_prices, "Hourly price CSV")->required();
  oracle->add_option("--out", oracle_out, "Directory for oracle_plan.csv");

  auto* plot = app.add_subcommand("plot", "Render SVGs from CSV outputs");
  std::string plot_dir;
  plot->add_option("--in", plot_dir, "Directory holding the CSV outputs")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e, out, err);
  } catch (const CLI::ParseError& e) {
    app.exit(e, out, err);
    if (e.get_exit_code() == 0) return kExitOk;
    err << "\n" << app.help();
    return kExitUsage;
  }

  RunConfig config;
  try {
    config = resolve_config(o, std::getenv(std::string(kDataDirEnvVar).c_str()));
  } catch (const ConfigError& e) {
    err << "error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kExitRuntime;
  }

  try {

    if (*fetch) {
      if (fetch_year == 2020 && !force) {
        err << "error: 2020 prices are excluded by default (pandemic-era irregularities); pass --force to fetch\n";
        return kExitUsage;
      }
      using namespace std::chrono;
      const sys_seconds start = sys_days{year{fetch_year} / January / 1};
      const sys_seconds end = sys_days{year{fetch_year + 1} / January / 1};
      FetchOptions opts;
      opts.endpoint = config.endpoint;
      opts.get = services.http;
      opts.sleep = services.sleep;
      const FetchResult fetched = fetch_five_minute_feed(start, end, opts);
      auto [series, report] = aggregate_hourly(fetched.samples);
      fs::create_directories(config.data_dir);
      const fs::path path = config.data_dir / ("comed_" + std::to_string(fetch_year) + ".csv");
      write_price_csv(series, path);
      for (const auto& w : fetched.warnings) err << "warning: " << w << "\n";
      out << "fetched " << fetched.samples.size() << " five-minute samples\n"
          << "wrote " << report.hours_emitted << " hours to " << path.string() << "\n"
          << "interpolated hours: " << report.hours_interpolated.size() << "\n"
          << "min samples in an observed hour: " << report.samples_per_hour_min << "\n";
      return kExitOk;
    }

    if (*train) {
      const PriceSeries prices = read_price_csv(train_prices);
      TrainOptions opts;
      opts.battery = config.battery;
      opts.hyper = config.hyper;
      opts.total_steps = config.steps;
      opts.eval_every = config.eval_every;
      opts.seed = config.seed;
      opts.year = train_year.value_or(0);
      opts.on_eval = [&out](const CurvePoint& p) {
        out << "step " << p.step << ": greedy return " << cents(p.greedy_return) << "\n" << std::flush;
      };
      const std::string stem = "train-" + (train_year ? std::to_string(*train_year) : fs::path(train_prices).stem().string());
      const fs::path dir = unique_run_dir(config.output_dir, stem);
      fs::create_directories(dir);
      const TrainResult result = train_agent(prices, opts);
      save_checkpoint(result.best, dir / "checkpoint_best.bin");
      save_checkpoint(result.final, dir / "checkpoint_final.bin");
      emit_outputs(ExperimentOutputs{{result.curve}, std::nullopt, {}}, dir);
      const HindsightPlan plan = hindsight_optimal(prices, config.battery);
      out << "best greedy return " << cents(result.best.metadata.eval_reward) << " at step "
          << result.best.metadata.step << "\n"
          << "hindsight optimum " << cents(plan.value) << "\n"
          << "outputs in " << dir.string() << "\n";
      if (result.failure) {
        err << "error: training aborted: " << *result.failure << "\n";
        return kExitRuntime;
      }
      return kExitOk;
    }

    if (*eval) {
      const Checkpoint ckpt = load_checkpoint(eval_ckpt);
      const PriceSeries prices = read_price_csv(eval_prices);
      const double ret = evaluate_greedy(ckpt, prices, config.battery);
      const HindsightPlan plan = hindsight_optimal(prices, config.battery);
      out << "greedy return " << cents(ret) << "\n"
          << "hindsight optimum " << cents(plan.value) << "\n";
      if (plan.value > 0.0) out << "fraction of optimum " << ret / plan.value << "\n";
      if (eval_day) {
        const auto rows = daily_policy(ckpt, prices, config.battery, parse_day(*eval_day));
        const fs::path dir = eval_out ? fs::path(*eval_out) : unique_run_dir(config.output_dir, "eval-" + *eval_day);
        for (const auto& p : emit_outputs(ExperimentOutputs{{}, std::nullopt, rows}, dir)) {
          out << "wrote " << p.string() << "\n";
        }
      }
      return kExitOk;
    }

    if (*xtest) {
      std::vector<YearInput> inputs;
      for (const auto& row : read_manifest(manifest)) {
        inputs.push_back({row.year, load_checkpoint(row.checkpoint), read_price_csv(row.prices)});
      }
      const CrossTestMatrix m = cross_test(inputs, config.battery);
      for (std::size_t a = 0; a < m.years.size(); ++a) {
        out << "agent " << m.years[a] << ":";
        for (std::size_t y = 0; y < m.years.size(); ++y) {
          out << "  " << m.years[y] << "=" << cents(m.raw[a][y]);
          if (!m.normalized[a][y]) out << " [normalization suppressed]";
        }
        if (auto mean = m.off_diagonal_mean(a)) {
          out << "  mean normalized (other years) " << *mean;
        }
        out << "\n";
      }
      const fs::path dir = xtest_out ? fs::path(*xtest_out) : unique_run_dir(config.output_dir, "cross-test");
      for (const auto& p : emit_outputs(ExperimentOutputs{{}, m, {}}, dir)) out << "wrote " << p.string() << "\n";
      return kExitOk;
    }

    if (*oracle) {
      const PriceSeries prices = read_price_csv(oracle_prices);
      const HindsightPlan plan = hindsight_optimal(prices, config.battery);
      std::map<Action, std::size_t> counts;
      for (Action a : plan.actions) ++counts[a];
      out << "hindsight-optimal value: " << cents(plan.value) << "\n"
          << "steps: " << plan.actions.size() << " (charge " << counts[Action::Charge] << ", discharge "
          << counts[Action::Discharge] << ", idle " << counts[Action::Idle] << ")\n";
      if (oracle_out) {
        fs::create_directories(*oracle_out);
        std::vector<DailyPolicyRow> rows;
        double charge = 0.0;
        for (std::size_t n = 0; n < plan.actions.size(); ++n) {
          charge = apply_action(charge, plan.actions[n], config.battery);
          rows.push_back({prices.hour(n), prices.price(n), plan.actions[n], charge});
        }
        const fs::path path = fs::path(*oracle_out) / "oracle_plan.csv";
        std::ofstream f(path, std::ios::binary | std::ios::trunc);
        if (!f) throw IoError("cannot open '" + path.string() + "' for writing");
        f << daily_policy_csv(rows);
        out << "wrote " << path.string() << "\n";
      }
      return kExitOk;
    }

    if (*plot) {
      const auto written = render_directory(plot_dir);
      if (written.empty()) {
        err << "error: no training_curves.csv, cross_test.csv or daily_policy.csv in '" << plot_dir << "'\n";
        return kExitRuntime;
      }
      for (const auto& p : written) out << "wrote " << p.string() << "\n";
      return kExitOk;
    }
  } catch (const ParameterError& e) {
    err << "error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kExitRuntime;
  }
  return kExitUsage;
}

}  // namespace rtp_arb::cli
