#include "run_config.hpp"

#include <charconv>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

#include "rtp_arb/errors.hpp"
#include "rtp_arb/ingest.hpp"

namespace rtp_arb::cli {

namespace {

template <typename T>
T parse_value(const std::string& key, const std::string& text) {
  T v{};
  auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
  if (ec != std::errc{} || ptr != text.data() + text.size()) {
    throw ConfigError("config key '" + key + "': cannot parse '" + text + "'");
  }
  return v;
}

std::vector<int> parse_years(const std::string& key, const std::string& text) {
  std::vector<int> years;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    const auto b = item.find_first_not_of(" \t");
    const auto e = item.find_last_not_of(" \t");
    if (b == std::string::npos) continue;
    years.push_back(parse_value<int>(key, item.substr(b, e - b + 1)));
  }
  if (years.empty()) throw ConfigError("config key '" + key + "': empty year list");
  return years;
}

using Setter = std::function<void(RunConfig&, const std::string& key, const std::string& value)>;

const std::map<std::string, Setter, std::less<>>& setters() {
  static const std::map<std::string, Setter, std::less<>> table = {
      {"capacity_kwh", [](RunConfig& c, const std::string& k, const std::string& v) { c.battery.capacity_kwh = parse_value<double>(k, v); }},
      {"rate_kw", [](RunConfig& c, const std::string& k, const std::string& v) { c.battery.rate_kw = parse_value<double>(k, v); }},
      {"window", [](RunConfig& c, const std::string& k, const std::string& v) { c.battery.window = parse_value<std::size_t>(k, v); }},
      {"gamma", [](RunConfig& c, const std::string& k, const std::string& v) { c.hyper.gamma = parse_value<double>(k, v); }},
      {"learning_rate", [](RunConfig& c, const std::string& k, const std::string& v) { c.hyper.learning_rate = parse_value<double>(k, v); }},
      {"batch_size", [](RunConfig& c, const std::string& k, const std::string& v) { c.hyper.batch_size = parse_value<std::size_t>(k, v); }},
      {"buffer_capacity", [](RunConfig& c, const std::string& k, const std::string& v) { c.hyper.buffer_capacity = parse_value<std::size_t>(k, v); }},
      {"learning_starts", [](RunConfig& c, const std::string& k, const std::string& v) { c.hyper.learning_starts = parse_value<std::size_t>(k, v); }},
      {"train_every", [](RunConfig& c, const std::string& k, const std::string& v) { c.hyper.train_every = parse_value<std::size_t>(k, v); }},
      {"target_sync_every", [](RunConfig& c, const std::string& k, const std::string& v) { c.hyper.target_sync_every = parse_value<std::size_t>(k, v); }},
      {"epsilon_start", [](RunConfig& c, const std::string& k, const std::string& v) { c.hyper.exploration.start = parse_value<double>(k, v); }},
      {"epsilon_end", [](RunConfig& c, const std::string& k, const std::string& v) { c.hyper.exploration.end = parse_value<double>(k, v); }},
      {"epsilon_fraction", [](RunConfig& c, const std::string& k, const std::string& v) { c.hyper.exploration.fraction = parse_value<double>(k, v); }},
      {"data_dir", [](RunConfig& c, const std::string&, const std::string& v) { c.data_dir = v; }},
      {"output_dir", [](RunConfig& c, const std::string&, const std::string& v) { c.output_dir = v; }},
      {"seed", [](RunConfig& c, const std::string& k, const std::string& v) { c.seed = parse_value<std::uint64_t>(k, v); }},
      {"years", [](RunConfig& c, const std::string& k, const std::string& v) { c.years = parse_years(k, v); }},
      {"steps", [](RunConfig& c, const std::string& k, const std::string& v) { c.steps = parse_value<std::size_t>(k, v); }},
      {"eval_every", [](RunConfig& c, const std::string& k, const std::string& v) { c.eval_every = parse_value<std::size_t>(k, v); }},
      {"endpoint", [](RunConfig& c, const std::string&, const std::string& v) { c.endpoint = v; }},
  };
  return table;
}

}  // namespace

RunConfig::RunConfig() : endpoint(kDefaultFeedEndpoint) {}

void RunConfig::validate() const {
  battery.validate();
  hyper.validate();
  if (eval_every == 0) throw ConfigError("eval_every must be positive");
  if (steps == 0 || steps % eval_every != 0) throw ConfigError("steps must be a positive multiple of eval_every");
}

void apply_config_text(RunConfig& config, std::string_view text, const std::string& source) {
  boost::property_tree::ptree tree;
  std::istringstream in{std::string(text)};
  try {
    boost::property_tree::ini_parser::read_ini(in, tree);
  } catch (const boost::property_tree::ini_parser_error& e) {
    throw ConfigError(source + ":" + std::to_string(e.line()) + ": " + e.message());
  }
  for (const auto& [key, node] : tree) {
    if (!node.empty()) {
      throw ConfigError(source + ": sections are not supported ('[" + key + "]'); use flat key = value lines");
    }
    auto it = setters().find(key);
    if (it == setters().end()) throw ConfigError(source + ": unknown config key '" + key + "'");
    try {
      it->second(config, key, node.data());
    } catch (const ConfigError& e) {
      throw ConfigError(source + ": " + e.what());
    }
  }
}

void apply_config_file(RunConfig& config, const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open config file '" + path.string() + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  apply_config_text(config, buf.str(), path.string());
}

RunConfig resolve_config(const Overrides& o, const char* env_data_dir) {
  RunConfig c;
  if (o.config_file) apply_config_file(c, *o.config_file);
  if (env_data_dir != nullptr && *env_data_dir != '\0') c.data_dir = env_data_dir;
  if (o.capacity) c.battery.capacity_kwh = *o.capacity;
  if (o.rate) c.battery.rate_kw = *o.rate;
  if (o.window) c.battery.window = *o.window;
  if (o.gamma) c.hyper.gamma = *o.gamma;
  if (o.learning_rate) c.hyper.learning_rate = *o.learning_rate;
  if (o.batch_size) c.hyper.batch_size = *o.batch_size;
  if (o.buffer_capacity) c.hyper.buffer_capacity = *o.buffer_capacity;
  if (o.learning_starts) c.hyper.learning_starts = *o.learning_starts;
  if (o.train_every) c.hyper.train_every = *o.train_every;
  if (o.target_sync_every) c.hyper.target_sync_every = *o.target_sync_every;
  if (o.seed) c.seed = *o.seed;
  if (o.steps) c.steps = *o.steps;
  if (o.eval_every) c.eval_every = *o.eval_every;
  if (o.data_dir) c.data_dir = *o.data_dir;
  if (o.output_dir) c.output_dir = *o.output_dir;
  if (o.endpoint) c.endpoint = *o.endpoint;
  c.validate();
  return c;
}

}  // namespace rtp_arb::cli
