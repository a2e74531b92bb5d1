#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <random>
#include <span>
#include <vector>

#include "rtp_arb/env.hpp"
#include "rtp_arb/network.hpp"

namespace rtp_arb {

using Rng = std::mt19937_64;

// Linear decay from `start` to `end` over the first `fraction` of training,
// then constant.
struct EpsilonSchedule {
  double start = 1.0;
  double end = 0.05;
  double fraction = 0.1;
};

double epsilon_at(const EpsilonSchedule& schedule, std::size_t step, std::size_t total_steps);

struct DqnHyperparams {
  double gamma = 0.99;
  double learning_rate = 1e-4;
  std::size_t batch_size = 32;
  std::size_t buffer_capacity = 200'000;
  std::size_t learning_starts = 1'000;    // environment steps before the first update
  std::size_t train_every = 4;            // environment steps per gradient update
  std::size_t target_sync_every = 1'000;  // gradient updates per hard target copy
  EpsilonSchedule exploration;

  // Throws ConfigError on a non-positive cadence or an out-of-range rate.
  void validate() const;
};

// Argmax; ties go to the lowest action code.
Action greedy_action(const QValues& q) noexcept;

// Uniform random action with probability epsilon, otherwise greedy.
Action select_action(const QValues& q, double epsilon, Rng& rng);

using TransitionRef = std::reference_wrapper<const Transition>;

// Fixed-capacity ring; once full, each push evicts the oldest entry.
class ReplayBuffer {
 public:
  explicit ReplayBuffer(std::size_t capacity);

  void push(Transition t);

  std::size_t size() const noexcept { return storage_.size(); }
  std::size_t capacity() const noexcept { return capacity_; }
  bool ready(std::size_t batch_size) const noexcept { return batch_size > 0 && size() >= batch_size; }

  // i = 0 is the oldest entry.
  const Transition& at(std::size_t i) const;

  // Uniform with replacement. Empty when fewer than `batch_size` entries are
  // stored. References stay valid until the next push.
  std::optional<std::vector<TransitionRef>> sample(std::size_t batch_size, Rng& rng) const;

 private:
  std::size_t capacity_;
  std::size_t cursor_ = 0;  // next slot to overwrite once full
  std::vector<Transition> storage_;
};

// r + gamma * (1 - done) * max_a Q_target(s', a)
std::vector<double> td_targets(std::span<const TransitionRef> batch, const QNetwork& target_net,
                               const ObservationNormalizer& norm, double gamma);

// Adaptive-moment optimizer state; moments share the network's shape.
struct OptimizerState {
  QNetwork first_moment;
  QNetwork second_moment;
  std::uint64_t step = 0;
  double learning_rate = 1e-4;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;

  static OptimizerState for_network(const QNetwork& net, double learning_rate = 1e-4);

  // One bias-corrected update of `net` with gradient `grad`.
  void apply(QNetwork& net, const QNetwork& grad);

  friend bool operator==(const OptimizerState&, const OptimizerState&) = default;
};

// Mean Huber (delta = 1) loss between Q(s_i, a_i) and fixed targets over a
// batch of pre-normalized feature rows. Adds the parameter gradient into
// `grad` when it is non-null.
double huber_td_loss(const QNetwork& net, std::span<const double> features, std::size_t rows,
                     std::span<const Action> actions, std::span<const double> targets, QNetwork* grad);

// Samples a batch, regresses the online network towards the target
// network's TD targets and takes one optimizer step. Returns the loss, or
// nullopt when the buffer holds fewer than `batch_size` transitions. Throws
// NumericalError if the loss or the updated parameters are non-finite.
std::optional<double> train_step(QNetwork& net, const QNetwork& target_net, const ReplayBuffer& buffer,
                                 OptimizerState& opt, const ObservationNormalizer& norm, std::size_t batch_size,
                                 double gamma, Rng& rng);

inline void sync_target(const QNetwork& net, QNetwork& target_net) { target_net = net; }

}  // namespace rtp_arb
