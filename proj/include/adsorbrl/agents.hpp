#pragma once

#include <concepts>
#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <map>
#include <optional>
#include <span>
#include <utility>
#include <vector>

#include "adsorbrl/env.hpp"
#include "adsorbrl/error.hpp"
#include "adsorbrl/nn.hpp"
#include "adsorbrl/rng.hpp"

namespace adsorbrl {

// ---------------------------------------------------------------------------
// Action selection

/// Index of the largest value; ties go to the lowest index.
std::size_t argmax(std::span<const double> values);

/// Greedy with probability 1 - epsilon, otherwise a uniform action. One
/// uniform draw decides exploration; a second picks the random action.
std::size_t epsilon_greedy(std::span<const double> q_values, double epsilon, Rng& rng);

struct TrainingLogRow {
  long step = 0;
  long episode = 0;
  std::optional<double> loss;  // empty before learning starts
  double epsilon = 0.0;
  std::optional<double> episode_return;  // set on the step that ends an episode
  std::optional<int> episode_length;
  std::optional<int> sampled_objective;  // 1..6 under objective sub-sampling
  double max_abs_q = 0.0;                // of the batch, 0 before learning starts
};

struct TrainingLog {
  std::vector<TrainingLogRow> rows;

  /// CSV `step,episode,loss,epsilon,episode_return,episode_length,sampled_objective`.
  void write_csv(std::ostream& out) const;
  std::vector<int> sampled_objectives() const;  // one per finished episode
};

// ---------------------------------------------------------------------------
// Tabular Q-learning

/// Sparse action-value table; unseen entries read as 0.
class QTable {
 public:
  explicit QTable(std::size_t action_count) : action_count_(action_count) {}

  double get(int state, int action) const;
  void set(int state, int action, double value);
  std::vector<double> row(int state) const;
  double max_value(int state) const;
  std::size_t greedy_action(int state) const;

  std::size_t action_count() const { return action_count_; }
  std::size_t size() const { return values_.size(); }
  const std::map<std::pair<int, int>, double>& entries() const { return values_; }

  /// CSV `state,action,q`.
  void write_csv(std::ostream& out) const;
  static QTable read_csv(std::istream& in, std::size_t action_count);

  friend bool operator==(const QTable&, const QTable&) = default;

 private:
  std::size_t action_count_;
  std::map<std::pair<int, int>, double> values_;
};

template <class E>
concept TabularEnvironment = requires(const E& env, Rng& rng, int s, int a, int t) {
  { env.action_count() } -> std::convertible_to<std::size_t>;
  { env.horizon() } -> std::convertible_to<int>;
  { env.reset(rng) } -> std::convertible_to<int>;
  { env.step(s, a, t) } -> std::same_as<Transition<int>>;
};

/// GridWorldEnv seen through integer action ids.
class GridWorldTabular {
 public:
  explicit GridWorldTabular(const GridWorldEnv& env) : env_(&env) {}
  std::size_t action_count() const { return GridWorldEnv::action_count(); }
  int horizon() const { return env_->horizon(); }
  int reset(Rng& rng) const { return env_->reset(rng); }
  Transition<int> step(int s, int a, int t) const {
    return env_->step(s, static_cast<Direction>(a), t);
  }

 private:
  const GridWorldEnv* env_;
};

struct QLearningConfig {
  double alpha = 0.1;
  /// Learning rate reached on the last episode (linear decay); equal to
  /// `alpha` by default, i.e. constant.
  std::optional<double> alpha_final;
  double gamma = 0.9;
  double epsilon = 0.1;
  std::uint64_t seed = 0;

  void validate() const;
};

/// Q(s,a) += alpha (r + gamma max_a' Q(s',a') - Q(s,a)) on every step; the
/// bootstrap term is dropped on terminal transitions. Episodes end on `done`
/// or at the environment's horizon. When `log` is given, one row is appended
/// per episode (step = steps taken so far, loss left empty).
template <TabularEnvironment Env>
QTable q_learning_train(const Env& env, const QLearningConfig& cfg, long episodes,
                        TrainingLog* log = nullptr) {
  cfg.validate();
  QTable q(env.action_count());
  Rng rng(cfg.seed);
  const double alpha_end = cfg.alpha_final.value_or(cfg.alpha);
  long total_steps = 0;
  for (long ep = 0; ep < episodes; ++ep) {
    const double frac = episodes > 1 ? static_cast<double>(ep) / static_cast<double>(episodes - 1) : 0.0;
    const double alpha = cfg.alpha + (alpha_end - cfg.alpha) * frac;
    int s = env.reset(rng);
    double ep_return = 0.0;
    int t = 0;
    for (; t < env.horizon(); ++t) {
      const auto row = q.row(s);
      const int a = static_cast<int>(epsilon_greedy(row, cfg.epsilon, rng));
      const Transition<int> tr = env.step(s, a, t);
      const double target = tr.reward + (tr.done ? 0.0 : cfg.gamma * q.max_value(tr.next_state));
      const double old = row[static_cast<std::size_t>(a)];
      q.set(s, a, old + alpha * (target - old));
      ep_return += tr.reward;
      if (tr.done) {
        ++t;
        break;
      }
      s = tr.next_state;
    }
    total_steps += t;
    if (log) {
      TrainingLogRow row;
      row.step = total_steps - 1;
      row.episode = ep;
      row.epsilon = cfg.epsilon;
      row.episode_return = ep_return;
      row.episode_length = t;
      log->rows.push_back(row);
    }
  }
  return q;
}

// ---------------------------------------------------------------------------
// Replay buffer

/// Fixed-capacity FIFO ring with uniform sampling.
template <class T>
class ReplayBuffer {
 public:
  explicit ReplayBuffer(std::size_t capacity) : capacity_(capacity) {
    if (capacity == 0) throw DomainError("replay buffer capacity must be positive");
    items_.reserve(std::min<std::size_t>(capacity, 1 << 16));
  }

  void push(T item) {
    if (items_.size() < capacity_) {
      items_.push_back(std::move(item));
    } else {
      items_[head_] = std::move(item);
      head_ = (head_ + 1) % capacity_;
    }
  }

  std::size_t size() const { return items_.size(); }
  std::size_t capacity() const { return capacity_; }
  bool empty() const { return items_.empty(); }

  /// i-th oldest item.
  const T& operator[](std::size_t i) const { return items_[(head_ + i) % items_.size()]; }

  /// `n` indices drawn uniformly with replacement.
  std::vector<std::size_t> sample_indices(Rng& rng, std::size_t n) const {
    if (items_.empty()) throw DomainError("cannot sample from an empty replay buffer");
    std::vector<std::size_t> idx(n);
    for (auto& i : idx) i = uniform_index(rng, items_.size());
    return idx;
  }

 private:
  std::size_t capacity_;
  std::size_t head_ = 0;  // oldest item once full
  std::vector<T> items_;
};

// ---------------------------------------------------------------------------
// Deep Q-learning

/// Builds network inputs: the multi-hot state, followed by the goal vector
/// when goal-conditioned.
class StateEncoder {
 public:
  explicit StateEncoder(Vocabulary vocab, std::optional<GoalVector> goal = std::nullopt)
      : vocab_(std::move(vocab)), goal_(goal) {}

  int input_dim() const {
    return static_cast<int>(vocab_.size() + (goal_ ? kAdsorbateCount : 0));
  }
  nn::Vector encode(const Composition& c) const;
  void encode_into(const Composition& c, Eigen::Ref<nn::Vector> out) const;

  const Vocabulary& vocabulary() const { return vocab_; }
  const std::optional<GoalVector>& goal() const { return goal_; }

 private:
  Vocabulary vocab_;
  std::optional<GoalVector> goal_;
};

/// r if done; otherwise r + gamma * Q_target(s', a*) with a* the online argmax
/// (double) or the target argmax (vanilla).
double bellman_target(double reward, bool done, const nn::Vector& next_input,
                      const nn::DenseNet& online, const nn::DenseNet& target, double gamma,
                      bool double_dqn);

/// Column-wise version of bellman_target for a batch.
nn::Vector bellman_targets(const nn::Vector& rewards, const std::vector<bool>& done,
                           const nn::Matrix& next_inputs, const nn::DenseNet& online,
                           const nn::DenseNet& target, double gamma, bool double_dqn);

enum class LossKind { Huber, Squared };

struct DQNConfig {
  std::vector<int> hidden = {512, 64};
  double learning_rate = 1e-3;
  long target_update_period = 300;
  double epsilon = 0.1;
  double gamma = 0.9;
  int batch_size = 64;
  std::size_t buffer_capacity = 50'000;
  std::size_t warmup = 1'000;
  long training_steps = 100'000;
  int max_episode_steps = 75;
  bool double_dqn = true;
  LossKind loss = LossKind::Huber;
  double huber_delta = 1.0;
  std::uint64_t seed = 0;

  void validate() const;
};

struct DQNResult {
  nn::DenseNet net;
  TrainingLog log;
};

/// Offline DQN: every step regresses on a uniform batch from the fixed tuple set.
DQNResult dqn_train_offline(std::span<const CompositionTransition> tuples,
                            const StateEncoder& encoder, std::size_t action_count,
                            const DQNConfig& cfg);

/// Online DQN on the known-subgraph environment. With `subsample`, each
/// episode draws an objective i uniformly from 1..6 and is rewarded by
/// SubSampled(goal, i); otherwise `mode` is used throughout. The episode
/// length limit comes from `env.config()`.
DQNResult dqn_train_live(const SubgraphEnv& env, const DQNConfig& cfg, const RewardMode& mode,
                         const std::optional<GoalVector>& goal, bool subsample);

/// Greedy policy over a trained network (epsilon = 0, lowest-index ties).
class GreedyPolicy {
 public:
  /// Throws DomainError when the network input size does not match the encoder.
  GreedyPolicy(nn::DenseNet net, StateEncoder encoder);

  std::size_t operator()(const Composition& state) const;
  nn::Vector q_values(const Composition& state) const;

  const nn::DenseNet& net() const { return net_; }
  const StateEncoder& encoder() const { return encoder_; }

 private:
  nn::DenseNet net_;
  StateEncoder encoder_;
};

}  // namespace adsorbrl
