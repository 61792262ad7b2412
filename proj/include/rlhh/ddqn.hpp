#pragma once

#include <algorithm>
#include <functional>
#include <json.hpp>
#include <optional>
#include <span>
#include <vector>

#include "rlhh/common.hpp"
#include "rlhh/qnetwork.hpp"

namespace rlhh {

struct Transition {
  std::vector<double> state;
  int action = 0;
  double reward = 0;
  std::vector<double> next_state;
  bool terminal = false;
};

/// Fixed-capacity FIFO of transitions.
class ReplayBuffer {
 public:
  explicit ReplayBuffer(std::size_t capacity) : capacity_(capacity) {
    if (capacity == 0) throw ArgumentError("replay capacity must be positive");
    data_.reserve(std::min<std::size_t>(capacity, 4096));
  }

  void push(Transition t) {
    if (data_.size() < capacity_) {
      data_.push_back(std::move(t));
    } else {
      data_[head_] = std::move(t);
      head_ = (head_ + 1) % capacity_;
    }
  }

  std::size_t size() const { return data_.size(); }
  std::size_t capacity() const { return capacity_; }
  /// i-th oldest stored transition.
  const Transition& at(std::size_t i) const { return data_[(head_ + i) % data_.size()]; }

  /// Uniform sample with replacement.
  std::vector<const Transition*> sample(std::size_t n, Rng& rng) const {
    if (data_.empty()) throw ArgumentError("sampling from an empty buffer");
    std::vector<const Transition*> out(n);
    for (auto& p : out) p = &data_[rng.index(data_.size())];
    return out;
  }

 private:
  std::size_t capacity_;
  std::size_t head_ = 0;
  std::vector<Transition> data_;
};

/// Linear decay from start to end over the first `fraction` of episodes, then flat.
inline double epsilon_at(int episode, int episodes, const DdqnConfig& c) {
  const double horizon = std::max(1.0, c.epsilon_fraction * episodes);
  const double t = std::min(1.0, episode / horizon);
  return c.epsilon_start + t * (c.epsilon_end - c.epsilon_start);
}

/// Bootstrap targets for already-standardized next states. Terminal samples
/// get y = r. With `double_q` the online network picks the next action and
/// the target network scores it; otherwise the target network does both.
inline std::vector<double> ddqn_target(std::span<const double> rewards, std::span<const std::uint8_t> terminal,
                                       const Eigen::MatrixXd& next_states, const Mlp& online, const Mlp& target,
                                       double gamma, bool double_q = true) {
  const auto n = rewards.size();
  if (terminal.size() != n || static_cast<std::size_t>(next_states.cols()) != n)
    throw ArgumentError("target batch arrays disagree in length");
  std::vector<double> y(rewards.begin(), rewards.end());
  if (n == 0 || gamma == 0) return y;
  const Eigen::MatrixXd q_target = target.forward(next_states);
  const Eigen::MatrixXd q_online = double_q ? online.forward(next_states) : Eigen::MatrixXd();
  for (std::size_t i = 0; i < n; ++i) {
    if (terminal[i]) continue;
    const auto col = static_cast<Eigen::Index>(i);
    const int a = argmax(double_q ? Eigen::VectorXd(q_online.col(col)) : Eigen::VectorXd(q_target.col(col)));
    y[i] += gamma * q_target(a, col);
  }
  return y;
}

/// DDQN learner: online and target networks, Adam, replay and feature scaling.
class DdqnAgent {
 public:
  DdqnAgent(ProblemKind kind, int features, int actions, const DdqnConfig& cfg, std::uint64_t seed)
      : kind_(kind), cfg_(cfg), buffer_(cfg.buffer_capacity), scaler_(features), adam_(cfg.learning_rate),
        rng_(split_seed(seed, 11)) {
    std::vector<int> sizes{features};
    sizes.insert(sizes.end(), cfg.hidden.begin(), cfg.hidden.end());
    sizes.push_back(actions);
    online_ = Mlp(sizes);
    Rng init(split_seed(seed, 10));
    online_.initialize(init);
    target_ = online_;
  }

  const DdqnConfig& config() const { return cfg_; }
  const Mlp& online() const { return online_; }
  const Mlp& target() const { return target_; }
  Mlp& online() { return online_; }
  const ReplayBuffer& buffer() const { return buffer_; }
  FeatureScaler& scaler() { return scaler_; }
  long gradient_steps() const { return steps_; }
  int actions() const { return online_.outputs(); }

  /// Epsilon-greedy choice; the raw state also feeds the running scaler.
  int act(std::span<const double> raw, double epsilon) {
    scaler_.update(raw);
    const double u = rng_.uniform();
    if (u < epsilon) return static_cast<int>(rng_.index(static_cast<std::size_t>(actions())));
    return greedy(raw);
  }
  int greedy(std::span<const double> raw) const { return argmax(online_.forward(scaler_.transform(raw))); }

  void remember(Transition t) { buffer_.push(std::move(t)); }

  /// One gradient step on a uniform mini-batch. Returns the pre-step loss,
  /// or nullopt while the buffer holds fewer than a batch.
  std::optional<double> train_step() {
    const auto b = static_cast<std::size_t>(cfg_.batch_size);
    if (buffer_.size() < b) return std::nullopt;
    const auto batch = buffer_.sample(b, rng_);
    const auto f = static_cast<Eigen::Index>(online_.inputs());
    Eigen::MatrixXd s(f, static_cast<Eigen::Index>(b)), s2(f, static_cast<Eigen::Index>(b));
    std::vector<int> a(b);
    std::vector<double> r(b);
    std::vector<std::uint8_t> term(b);
    for (std::size_t i = 0; i < b; ++i) {
      const auto x = scaler_.transform(batch[i]->state);
      const auto x2 = scaler_.transform(batch[i]->next_state);
      s.col(static_cast<Eigen::Index>(i)) = Eigen::Map<const Eigen::VectorXd>(x.data(), f);
      s2.col(static_cast<Eigen::Index>(i)) = Eigen::Map<const Eigen::VectorXd>(x2.data(), f);
      a[i] = batch[i]->action;
      r[i] = batch[i]->reward;
      term[i] = batch[i]->terminal;
    }
    const auto y = ddqn_target(r, term, s2, online_, target_, cfg_.gamma, cfg_.double_q);
    Eigen::VectorXd grad;
    const double loss = online_.loss_and_gradient(s, a, y, grad);
    adam_.step(online_.parameters(), grad);
    if (++steps_ % cfg_.target_sync == 0) sync_target();
    return loss;
  }

  void sync_target() { target_ = online_; }

  QModel model() const {
    QModel m;
    m.kind = kind_;
    m.network = online_;
    m.scaler = scaler_;
    m.scaler.freeze();
    m.config = cfg_;
    return m;
  }

 private:
  ProblemKind kind_;
  DdqnConfig cfg_;
  ReplayBuffer buffer_;
  FeatureScaler scaler_;
  Adam adam_;
  Rng rng_;
  Mlp online_, target_;
  long steps_ = 0;
};

/// Episodic environment the trainer interacts with.
class Environment {
 public:
  struct Step {
    std::vector<double> state;
    double reward = 0;
    bool terminal = false;
  };
  virtual ~Environment() = default;
  virtual ProblemKind kind() const = 0;
  virtual int feature_count() const = 0;
  virtual int action_count() const = 0;
  /// Starts an episode and returns its first state.
  virtual std::vector<double> reset(Rng& rng) = 0;
  virtual Step step(int action) = 0;
  /// Extra fields for the episode's log record.
  virtual nlohmann::json episode_info() const { return nlohmann::json::object(); }
};

struct EpisodeLog {
  int episode = 0;
  double epsilon = 0;
  double episode_return = 0;
  int steps = 0;
  double mean_loss = 0;  ///< over this episode's gradient steps; 0 if none
  nlohmann::json info;

  nlohmann::json to_json() const {
    nlohmann::json j = {{"episode", episode}, {"epsilon", epsilon}, {"return", episode_return},
                        {"steps", steps},     {"mean_loss", mean_loss}};
    for (auto it = info.begin(); it != info.end(); ++it) j[it.key()] = it.value();
    return j;
  }
};

struct TrainOptions {
  int episodes = 100;
  double time_budget = kInf;  ///< seconds; training stops after the running episode
  int max_steps_per_episode = 100'000;
};

struct TrainResult {
  std::vector<EpisodeLog> log;
  bool stopped_on_time = false;
};

/// Runs episodes with epsilon-greedy actions, storing every transition and
/// taking one gradient step per environment step.
inline TrainResult train(Environment& env, DdqnAgent& agent, const TrainOptions& opt, Rng& rng,
                         const std::function<void(const EpisodeLog&)>& on_episode = {}) {
  TrainResult out;
  Stopwatch clock;
  for (int ep = 0; ep < opt.episodes; ++ep) {
    if (clock.seconds() > opt.time_budget) {
      out.stopped_on_time = true;
      break;
    }
    EpisodeLog log;
    log.episode = ep;
    log.epsilon = epsilon_at(ep, opt.episodes, agent.config());
    auto state = env.reset(rng);
    double loss_sum = 0;
    int loss_count = 0;
    for (int t = 0; t < opt.max_steps_per_episode; ++t) {
      const int a = agent.act(state, log.epsilon);
      auto step = env.step(a);
      log.episode_return += step.reward;
      ++log.steps;
      agent.remember({state, a, step.reward, step.state, step.terminal});
      if (const auto loss = agent.train_step()) {
        loss_sum += *loss;
        ++loss_count;
      }
      state = std::move(step.state);
      if (step.terminal) break;
    }
    log.mean_loss = loss_count ? loss_sum / loss_count : 0.0;
    log.info = env.episode_info();
    if (on_episode) on_episode(log);
    out.log.push_back(std::move(log));
  }
  return out;
}

/// Bandit-like test environment: action `good` earns +1, every other action
/// -1. States are random, episodes have fixed length.
class ToyEnvironment : public Environment {
 public:
  ToyEnvironment(int actions, int good, int features, int length)
      : actions_(actions), good_(good), features_(features), length_(length) {}
  ProblemKind kind() const override { return ProblemKind::Vrptw; }
  int feature_count() const override { return features_; }
  int action_count() const override { return actions_; }
  std::vector<double> reset(Rng& rng) override {
    rng_ = Rng(rng.next());
    t_ = 0;
    return draw();
  }
  Step step(int action) override {
    ++t_;
    return {draw(), action == good_ ? 1.0 : -1.0, t_ >= length_};
  }
  std::vector<double> draw() {
    std::vector<double> s(static_cast<std::size_t>(features_));
    for (auto& v : s) v = rng_.uniform(-1, 1);
    return s;
  }

 private:
  int actions_, good_, features_, length_;
  int t_ = 0;
  Rng rng_;
};

}  // namespace rlhh
