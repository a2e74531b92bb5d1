#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "rtp_arb/env.hpp"
#include "rtp_arb/price_series.hpp"

namespace rtp_arb {

using QValues = std::array<double, kNumActions>;

inline constexpr std::size_t kHiddenWidth = 64;

// Fully connected layer, weights row-major [outputs][inputs].
struct DenseLayer {
  std::size_t inputs = 0;
  std::size_t outputs = 0;
  std::vector<double> weights;
  std::vector<double> bias;

  DenseLayer() = default;
  DenseLayer(std::size_t in, std::size_t out) : inputs(in), outputs(out), weights(in * out, 0.0), bias(out, 0.0) {}

  double& w(std::size_t row, std::size_t col) { return weights[row * inputs + col]; }
  double w(std::size_t row, std::size_t col) const { return weights[row * inputs + col]; }

  friend bool operator==(const DenseLayer&, const DenseLayer&) = default;
};

// Feed-forward Q-function: rectified-linear hidden layers, identity output
// with one unit per action. Gradients and optimizer moments reuse this type
// since they share its shape.
struct QNetwork {
  std::vector<DenseLayer> layers;

  static QNetwork zeros(std::span<const std::size_t> dims);
  static QNetwork zeros_like(const QNetwork& other);

  std::vector<std::size_t> dims() const;
  std::size_t input_width() const { return layers.empty() ? 0 : layers.front().inputs; }
  std::size_t output_width() const { return layers.empty() ? 0 : layers.back().outputs; }
  std::size_t parameter_count() const;
  bool all_finite() const;

  // Q-values for one pre-normalized feature vector. Throws ShapeError on a
  // width mismatch or if the output layer is not kNumActions wide.
  QValues evaluate(std::span<const double> features) const;

  friend bool operator==(const QNetwork&, const QNetwork&) = default;
};

// Maps an observation to network inputs: prices standardized with the
// training series' statistics, charge divided by capacity. Frozen at the
// start of training and stored with the checkpoint.
struct ObservationNormalizer {
  double price_mean = 0.0;
  double price_scale = 1.0;
  double charge_scale = 1.0;

  // Falls back to a unit scale for a constant series.
  static ObservationNormalizer fit(const PriceSeries& prices, const BatteryConfig& config);

  std::vector<double> features(const Observation& obs) const;
  void features_into(const Observation& obs, std::span<double> out) const;

  friend bool operator==(const ObservationNormalizer&, const ObservationNormalizer&) = default;
};

// Dims [window + 1, 64, 64, 3]; weights uniform in +-sqrt(6 / fan_in), biases zero.
QNetwork init_network(std::size_t window, std::uint64_t seed);

QValues forward(const QNetwork& net, const Observation& obs, const ObservationNormalizer& norm);

// Per-layer activations for a batch of `rows` inputs. values[0] is the input
// block, values[k] the post-activation output of layer k, all row-major.
struct BatchActivations {
  std::size_t rows = 0;
  std::vector<std::vector<double>> values;

  std::span<const double> output() const { return values.back(); }
};

void forward_batch(const QNetwork& net, std::span<const double> inputs, std::size_t rows, BatchActivations& acts);

// Adds d(loss)/d(parameters) into `grad` given d(loss)/d(outputs), row-major
// [rows][output_width]. `acts` must come from forward_batch on the same net.
void backward_batch(const QNetwork& net, const BatchActivations& acts, std::span<const double> output_grad,
                    QNetwork& grad);

}  // namespace rtp_arb
