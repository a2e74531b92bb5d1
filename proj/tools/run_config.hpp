#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "rtp_arb/dqn.hpp"
#include "rtp_arb/env.hpp"

namespace rtp_arb::cli {

// Everything a run needs. Defaults: the residential battery (13.5 kWh,
// 5 kW, 48-hour window) and the DQN settings in DqnHyperparams.
struct RunConfig {
  BatteryConfig battery;
  DqnHyperparams hyper;
  std::filesystem::path data_dir = "data";
  std::filesystem::path output_dir = "runs";
  std::uint64_t seed = 0;
  std::vector<int> years{2015, 2016, 2017, 2018, 2019};
  std::size_t steps = 200'000;
  std::size_t eval_every = 10'000;
  std::string endpoint;

  RunConfig();

  // Throws ConfigError naming the bad field.
  void validate() const;
};

// Flat "key = value" lines; '#' or ';' starts a comment. Unknown keys and
// unparsable values raise ConfigError naming the key.
void apply_config_text(RunConfig& config, std::string_view text, const std::string& source = "<config>");
void apply_config_file(RunConfig& config, const std::filesystem::path& path);

// Command-line values. Unset fields leave the lower layers alone.
struct Overrides {
  std::optional<std::string> config_file;
  std::optional<double> capacity;
  std::optional<double> rate;
  std::optional<std::size_t> window;
  std::optional<double> gamma;
  std::optional<double> learning_rate;
  std::optional<std::size_t> batch_size;
  std::optional<std::size_t> buffer_capacity;
  std::optional<std::size_t> learning_starts;
  std::optional<std::size_t> train_every;
  std::optional<std::size_t> target_sync_every;
  std::optional<std::uint64_t> seed;
  std::optional<std::size_t> steps;
  std::optional<std::size_t> eval_every;
  std::optional<std::string> data_dir;
  std::optional<std::string> output_dir;
  std::optional<std::string> endpoint;
};

// Layers, lowest first: built-in defaults, config file, `env_data_dir`
// (data_dir only; ignored when null or empty), flags. Validates the result.
RunConfig resolve_config(const Overrides& overrides, const char* env_data_dir);

}  // namespace rtp_arb::cli
