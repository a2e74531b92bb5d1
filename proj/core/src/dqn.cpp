#include "rtp_arb/dqn.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "rtp_arb/errors.hpp"

namespace rtp_arb {

double epsilon_at(const EpsilonSchedule& schedule, std::size_t step, std::size_t total_steps) {
  const double horizon = schedule.fraction * static_cast<double>(total_steps);
  if (!(horizon > 0.0)) return schedule.end;
  const double progress = static_cast<double>(step) / horizon;
  if (progress >= 1.0) return schedule.end;
  const double value = schedule.start + progress * (schedule.end - schedule.start);
  return std::clamp(value, std::min(schedule.start, schedule.end), std::max(schedule.start, schedule.end));
}

void DqnHyperparams::validate() const {
  if (!(gamma >= 0.0 && gamma <= 1.0)) throw ConfigError("gamma must lie in [0, 1]");
  if (!(learning_rate > 0.0)) throw ConfigError("learning rate must be positive");
  if (batch_size == 0) throw ConfigError("batch size must be positive");
  if (buffer_capacity < batch_size) throw ConfigError("replay capacity must hold at least one batch");
  if (train_every == 0) throw ConfigError("train_every must be positive");
  if (target_sync_every == 0) throw ConfigError("target_sync_every must be positive");
  const auto& e = exploration;
  if (!(e.end >= 0.0 && e.end <= e.start && e.start <= 1.0)) {
    throw ConfigError("exploration must satisfy 0 <= end <= start <= 1");
  }
  if (!(e.fraction >= 0.0 && e.fraction <= 1.0)) throw ConfigError("exploration fraction must lie in [0, 1]");
}

Action greedy_action(const QValues& q) noexcept {
  std::size_t best = 0;
  for (std::size_t a = 1; a < q.size(); ++a) {
    if (q[a] > q[best]) best = a;
  }
  return static_cast<Action>(best);
}

Action select_action(const QValues& q, double epsilon, Rng& rng) {
  std::uniform_real_distribution<double> coin(0.0, 1.0);
  if (epsilon > 0.0 && coin(rng) < epsilon) {
    std::uniform_int_distribution<int> pick(0, static_cast<int>(kNumActions) - 1);
    return static_cast<Action>(pick(rng));
  }
  return greedy_action(q);
}

ReplayBuffer::ReplayBuffer(std::size_t capacity) : capacity_(capacity) {
  if (capacity == 0) throw ConfigError("replay capacity must be positive");
  storage_.reserve(std::min<std::size_t>(capacity, 1 << 16));
}

void ReplayBuffer::push(Transition t) {
  if (storage_.size() < capacity_) {
    storage_.push_back(std::move(t));
    return;
  }
  storage_[cursor_] = std::move(t);
  cursor_ = (cursor_ + 1) % capacity_;
}

const Transition& ReplayBuffer::at(std::size_t i) const {
  if (i >= storage_.size()) throw ParameterError("replay index out of range");
  return storage_[(cursor_ + i) % storage_.size()];
}

std::optional<std::vector<TransitionRef>> ReplayBuffer::sample(std::size_t batch_size, Rng& rng) const {
  if (!ready(batch_size)) return std::nullopt;
  std::uniform_int_distribution<std::size_t> pick(0, storage_.size() - 1);
  std::vector<TransitionRef> batch;
  batch.reserve(batch_size);
  for (std::size_t i = 0; i < batch_size; ++i) batch.emplace_back(storage_[pick(rng)]);
  return batch;
}

namespace {

std::vector<double> stack_features(std::span<const TransitionRef> batch, const ObservationNormalizer& norm,
                                   std::size_t width, bool next) {
  std::vector<double> out(batch.size() * width);
  for (std::size_t r = 0; r < batch.size(); ++r) {
    const Transition& t = batch[r];
    const Observation& obs = next ? t.next_obs : t.obs;
    if (obs.recent_prices.size() + 1 != width) {
      throw ShapeError("transition observation width does not match network input");
    }
    norm.features_into(obs, std::span<double>(out).subspan(r * width, width));
  }
  return out;
}

}  // namespace

std::vector<double> td_targets(std::span<const TransitionRef> batch, const QNetwork& target_net,
                               const ObservationNormalizer& norm, double gamma) {
  if (batch.empty()) throw ParameterError("td_targets needs a nonempty batch");
  const std::size_t width = target_net.input_width();
  const auto inputs = stack_features(batch, norm, width, true);
  BatchActivations acts;
  forward_batch(target_net, inputs, batch.size(), acts);
  const auto q = acts.output();
  const std::size_t k = target_net.output_width();
  std::vector<double> targets(batch.size());
  for (std::size_t r = 0; r < batch.size(); ++r) {
    const Transition& t = batch[r];
    const double best = *std::max_element(q.begin() + r * k, q.begin() + (r + 1) * k);
    targets[r] = t.reward + (t.done ? 0.0 : gamma * best);
  }
  return targets;
}

OptimizerState OptimizerState::for_network(const QNetwork& net, double learning_rate) {
  OptimizerState s;
  s.first_moment = QNetwork::zeros_like(net);
  s.second_moment = QNetwork::zeros_like(net);
  s.learning_rate = learning_rate;
  return s;
}

void OptimizerState::apply(QNetwork& net, const QNetwork& grad) {
  ++step;
  const double t = static_cast<double>(step);
  const double correction1 = 1.0 - std::pow(beta1, t);
  const double correction2 = 1.0 - std::pow(beta2, t);
  auto update = [&](std::vector<double>& theta, const std::vector<double>& g, std::vector<double>& m,
                    std::vector<double>& v) {
    for (std::size_t i = 0; i < theta.size(); ++i) {
      m[i] = beta1 * m[i] + (1.0 - beta1) * g[i];
      v[i] = beta2 * v[i] + (1.0 - beta2) * g[i] * g[i];
      const double m_hat = m[i] / correction1;
      const double v_hat = v[i] / correction2;
      theta[i] -= learning_rate * m_hat / (std::sqrt(v_hat) + epsilon);
    }
  };
  for (std::size_t k = 0; k < net.layers.size(); ++k) {
    update(net.layers[k].weights, grad.layers[k].weights, first_moment.layers[k].weights,
           second_moment.layers[k].weights);
    update(net.layers[k].bias, grad.layers[k].bias, first_moment.layers[k].bias, second_moment.layers[k].bias);
  }
}

double huber_td_loss(const QNetwork& net, std::span<const double> features, std::size_t rows,
                     std::span<const Action> actions, std::span<const double> targets, QNetwork* grad) {
  if (rows == 0 || actions.size() != rows || targets.size() != rows) {
    throw ShapeError("loss batch size mismatch");
  }
  BatchActivations acts;
  forward_batch(net, features, rows, acts);
  const auto q = acts.output();
  const std::size_t k = net.output_width();
  const double inv_rows = 1.0 / static_cast<double>(rows);
  std::vector<double> dq(rows * k, 0.0);
  double loss = 0.0;
  for (std::size_t r = 0; r < rows; ++r) {
    const std::size_t a = action_index(actions[r]);
    const double err = q[r * k + a] - targets[r];
    const double abs_err = std::abs(err);
    loss += abs_err <= 1.0 ? 0.5 * err * err : abs_err - 0.5;
    dq[r * k + a] = std::clamp(err, -1.0, 1.0) * inv_rows;
  }
  loss *= inv_rows;
  if (grad != nullptr) backward_batch(net, acts, dq, *grad);
  return loss;
}

std::optional<double> train_step(QNetwork& net, const QNetwork& target_net, const ReplayBuffer& buffer,
                                 OptimizerState& opt, const ObservationNormalizer& norm, std::size_t batch_size,
                                 double gamma, Rng& rng) {
  auto batch = buffer.sample(batch_size, rng);
  if (!batch) return std::nullopt;
  const auto targets = td_targets(*batch, target_net, norm, gamma);
  const auto inputs = stack_features(*batch, norm, net.input_width(), false);
  std::vector<Action> actions;
  actions.reserve(batch->size());
  for (const Transition& t : *batch) actions.push_back(t.action);

  QNetwork grad = QNetwork::zeros_like(net);
  const double loss = huber_td_loss(net, inputs, batch->size(), actions, targets, &grad);
  if (!std::isfinite(loss)) {
    throw NumericalError("non-finite TD loss at optimizer step " + std::to_string(opt.step + 1));
  }
  opt.apply(net, grad);
  if (!net.all_finite()) {
    throw NumericalError("non-finite network parameters after optimizer step " + std::to_string(opt.step));
  }
  return loss;
}

}  // namespace rtp_arb
