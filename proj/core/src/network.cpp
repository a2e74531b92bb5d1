#include "rtp_arb/network.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <string>

#include "rtp_arb/errors.hpp"

namespace rtp_arb {

QNetwork QNetwork::zeros(std::span<const std::size_t> dims) {
  if (dims.size() < 2) {
    throw ShapeError("a network needs at least an input and an output width");
  }
  QNetwork net;
  for (std::size_t i = 0; i + 1 < dims.size(); ++i) {
    if (dims[i] == 0 || dims[i + 1] == 0) throw ShapeError("layer widths must be positive");
    net.layers.emplace_back(dims[i], dims[i + 1]);
  }
  return net;
}

QNetwork QNetwork::zeros_like(const QNetwork& other) {
  const auto d = other.dims();
  return zeros(d);
}

std::vector<std::size_t> QNetwork::dims() const {
  std::vector<std::size_t> d;
  if (layers.empty()) return d;
  d.push_back(layers.front().inputs);
  for (const auto& l : layers) d.push_back(l.outputs);
  return d;
}

std::size_t QNetwork::parameter_count() const {
  std::size_t n = 0;
  for (const auto& l : layers) n += l.weights.size() + l.bias.size();
  return n;
}

bool QNetwork::all_finite() const {
  auto finite = [](double v) { return std::isfinite(v); };
  return std::all_of(layers.begin(), layers.end(), [&](const DenseLayer& l) {
    return std::all_of(l.weights.begin(), l.weights.end(), finite) && std::all_of(l.bias.begin(), l.bias.end(), finite);
  });
}

QValues QNetwork::evaluate(std::span<const double> features) const {
  if (output_width() != kNumActions) {
    throw ShapeError("network output width " + std::to_string(output_width()) + " != " +
                     std::to_string(kNumActions));
  }
  if (features.size() != input_width()) {
    throw ShapeError("feature width " + std::to_string(features.size()) + " does not match network input " +
                     std::to_string(input_width()));
  }
  std::vector<double> cur(features.begin(), features.end());
  std::vector<double> next;
  for (std::size_t k = 0; k < layers.size(); ++k) {
    const auto& l = layers[k];
    const bool hidden = k + 1 < layers.size();
    next.assign(l.outputs, 0.0);
    for (std::size_t o = 0; o < l.outputs; ++o) {
      const double* row = &l.weights[o * l.inputs];
      double acc = l.bias[o];
      for (std::size_t i = 0; i < l.inputs; ++i) acc += row[i] * cur[i];
      next[o] = hidden ? std::max(acc, 0.0) : acc;
    }
    cur.swap(next);
  }
  return {cur[0], cur[1], cur[2]};
}

ObservationNormalizer ObservationNormalizer::fit(const PriceSeries& prices, const BatteryConfig& config) {
  config.validate();
  const auto p = prices.prices();
  double mean = 0.0;
  for (double v : p) mean += v;
  mean /= static_cast<double>(p.size());
  double var = 0.0;
  for (double v : p) var += (v - mean) * (v - mean);
  var /= static_cast<double>(p.size());
  const double sd = std::sqrt(var);
  return {mean, sd > 1e-12 ? sd : 1.0, config.capacity_kwh};
}

std::vector<double> ObservationNormalizer::features(const Observation& obs) const {
  std::vector<double> out(obs.recent_prices.size() + 1);
  features_into(obs, out);
  return out;
}

void ObservationNormalizer::features_into(const Observation& obs, std::span<double> out) const {
  if (out.size() != obs.recent_prices.size() + 1) {
    throw ShapeError("feature buffer width " + std::to_string(out.size()) + " != window + 1 (" +
                     std::to_string(obs.recent_prices.size() + 1) + ")");
  }
  for (std::size_t i = 0; i < obs.recent_prices.size(); ++i) {
    out[i] = (obs.recent_prices[i] - price_mean) / price_scale;
  }
  out.back() = obs.charge / charge_scale;
}

QNetwork init_network(std::size_t window, std::uint64_t seed) {
  if (window < 1) throw ConfigError("observation window must be at least 1");
  const std::array<std::size_t, 4> dims{window + 1, kHiddenWidth, kHiddenWidth, kNumActions};
  QNetwork net = QNetwork::zeros(dims);
  std::mt19937_64 rng(seed);
  for (auto& l : net.layers) {
    const double limit = std::sqrt(6.0 / static_cast<double>(l.inputs));
    std::uniform_real_distribution<double> dist(-limit, limit);
    for (double& w : l.weights) w = dist(rng);
  }
  return net;
}

QValues forward(const QNetwork& net, const Observation& obs, const ObservationNormalizer& norm) {
  if (obs.recent_prices.size() + 1 != net.input_width()) {
    throw ShapeError("observation has " + std::to_string(obs.recent_prices.size()) +
                     " prices but the network expects a window of " +
                     std::to_string(net.input_width() == 0 ? 0 : net.input_width() - 1));
  }
  return net.evaluate(norm.features(obs));
}

void forward_batch(const QNetwork& net, std::span<const double> inputs, std::size_t rows, BatchActivations& acts) {
  if (inputs.size() != rows * net.input_width()) {
    throw ShapeError("batch input size " + std::to_string(inputs.size()) + " != rows x input width");
  }
  acts.rows = rows;
  acts.values.resize(net.layers.size() + 1);
  acts.values[0].assign(inputs.begin(), inputs.end());
  for (std::size_t k = 0; k < net.layers.size(); ++k) {
    const auto& l = net.layers[k];
    const bool hidden = k + 1 < net.layers.size();
    const auto& in = acts.values[k];
    auto& out = acts.values[k + 1];
    out.resize(rows * l.outputs);
    for (std::size_t r = 0; r < rows; ++r) {
      const double* x = &in[r * l.inputs];
      double* y = &out[r * l.outputs];
      for (std::size_t o = 0; o < l.outputs; ++o) {
        const double* row = &l.weights[o * l.inputs];
        double acc = l.bias[o];
        for (std::size_t i = 0; i < l.inputs; ++i) acc += row[i] * x[i];
        y[o] = hidden ? std::max(acc, 0.0) : acc;
      }
    }
  }
}

void backward_batch(const QNetwork& net, const BatchActivations& acts, std::span<const double> output_grad,
                    QNetwork& grad) {
  const std::size_t rows = acts.rows;
  if (output_grad.size() != rows * net.output_width()) {
    throw ShapeError("output gradient size mismatch");
  }
  std::vector<double> delta(output_grad.begin(), output_grad.end());
  std::vector<double> delta_in;
  for (std::size_t k = net.layers.size(); k-- > 0;) {
    const auto& l = net.layers[k];
    auto& g = grad.layers[k];
    const auto& in = acts.values[k];
    const bool propagate = k > 0;
    if (propagate) delta_in.assign(rows * l.inputs, 0.0);
    for (std::size_t r = 0; r < rows; ++r) {
      const double* x = &in[r * l.inputs];
      const double* d = &delta[r * l.outputs];
      double* dx = propagate ? &delta_in[r * l.inputs] : nullptr;
      for (std::size_t o = 0; o < l.outputs; ++o) {
        const double dout = d[o];
        if (dout == 0.0) continue;
        g.bias[o] += dout;
        double* gw = &g.weights[o * l.inputs];
        const double* w = &l.weights[o * l.inputs];
        for (std::size_t i = 0; i < l.inputs; ++i) gw[i] += dout * x[i];
        if (propagate) {
          for (std::size_t i = 0; i < l.inputs; ++i) dx[i] += dout * w[i];
        }
      }
    }
    if (propagate) {
      // rectifier derivative of the layer below: its post-activation output is `in`
      for (std::size_t j = 0; j < delta_in.size(); ++j) {
        if (!(in[j] > 0.0)) delta_in[j] = 0.0;
      }
      delta.swap(delta_in);
    }
  }
}

}  // namespace rtp_arb
