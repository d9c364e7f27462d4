#include "adsorbrl/agents.hpp"

#include <algorithm>
#include <cmath>
#include <istream>
#include <limits>
#include <ostream>
#include <string>

#include "csv.hpp"

namespace adsorbrl {

std::size_t argmax(std::span<const double> values) {
  if (values.empty()) throw DomainError("argmax of an empty vector");
  std::size_t best = 0;
  for (std::size_t i = 1; i < values.size(); ++i)
    if (values[i] > values[best]) best = i;
  return best;
}

std::size_t epsilon_greedy(std::span<const double> q_values, double epsilon, Rng& rng) {
  if (q_values.empty()) throw DomainError("epsilon_greedy needs at least one action");
  if (!(epsilon >= 0.0 && epsilon <= 1.0)) throw DomainError("epsilon must be in [0, 1]");
  if (epsilon > 0.0 && uniform01(rng) < epsilon) return uniform_index(rng, q_values.size());
  return argmax(q_values);
}

// ---------------------------------------------------------------------------
// QTable

double QTable::get(int state, int action) const {
  if (action < 0 || static_cast<std::size_t>(action) >= action_count_)
    throw DomainError("action " + std::to_string(action) + " out of range");
  auto it = values_.find({state, action});
  return it == values_.end() ? 0.0 : it->second;
}

void QTable::set(int state, int action, double value) {
  if (action < 0 || static_cast<std::size_t>(action) >= action_count_)
    throw DomainError("action id out of range");
  if (!std::isfinite(value)) throw TrainingError("non-finite Q value");
  values_[{state, action}] = value;
}

std::vector<double> QTable::row(int state) const {
  std::vector<double> out(action_count_, 0.0);
  for (auto it = values_.lower_bound({state, 0}); it != values_.end() && it->first.first == state;
       ++it)
    out[static_cast<std::size_t>(it->first.second)] = it->second;
  return out;
}

double QTable::max_value(int state) const {
  const auto r = row(state);
  return *std::max_element(r.begin(), r.end());
}

std::size_t QTable::greedy_action(int state) const { return argmax(row(state)); }

void QTable::write_csv(std::ostream& out) const {
  out << "state,action,q\n";
  for (const auto& [key, v] : values_)
    out << key.first << ',' << key.second << ',' << detail::format_double(v) << '\n';
}

QTable QTable::read_csv(std::istream& in, std::size_t action_count) {
  QTable q(action_count);
  std::string line;
  std::size_t line_no = 0;
  bool header = true;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const auto f = detail::split_csv_line(line);
    if (header) {
      if (f.size() != 3 || f[0] != "state") throw DataError("Q-table header must be state,action,q", line_no);
      header = false;
      continue;
    }
    if (f.size() != 3) throw DataError("expected 3 fields", line_no);
    const int a = detail::parse_int(f[1], line_no);
    if (a < 0 || static_cast<std::size_t>(a) >= action_count) throw DataError("action out of range", line_no);
    q.values_[{detail::parse_int(f[0], line_no), a}] = detail::parse_double(f[2], line_no);
  }
  return q;
}

void QLearningConfig::validate() const {
  if (!(alpha > 0.0 && alpha <= 1.0)) throw DomainError("alpha must be in (0, 1]");
  if (alpha_final && !(*alpha_final >= 0.0 && *alpha_final <= 1.0))
    throw DomainError("alpha_final must be in [0, 1]");
  if (!(gamma > 0.0 && gamma <= 1.0)) throw DomainError("gamma must be in (0, 1]");
  if (!(epsilon >= 0.0 && epsilon <= 1.0)) throw DomainError("epsilon must be in [0, 1]");
}

// ---------------------------------------------------------------------------
// DQN

nn::Vector StateEncoder::encode(const Composition& c) const {
  nn::Vector v(input_dim());
  encode_into(c, v);
  return v;
}

void StateEncoder::encode_into(const Composition& c, Eigen::Ref<nn::Vector> out) const {
  out.setZero();
  for (AtomicNumber z : c.elements()) out(static_cast<Eigen::Index>(vocab_.index_of(z))) = 1.0;
  if (goal_) {
    const auto base = static_cast<Eigen::Index>(vocab_.size());
    for (std::size_t i = 0; i < kAdsorbateCount; ++i)
      out(base + static_cast<Eigen::Index>(i)) = goal_->values()[i];
  }
}

double bellman_target(double reward, bool done, const nn::Vector& next_input,
                      const nn::DenseNet& online, const nn::DenseNet& target, double gamma,
                      bool double_dqn) {
  if (done) return reward;
  const nn::Vector qt = target.forward(next_input);
  if (double_dqn) {
    const nn::Vector qo = online.forward(next_input);
    return reward + gamma * qt(static_cast<Eigen::Index>(argmax({qo.data(), static_cast<std::size_t>(qo.size())})));
  }
  return reward + gamma * qt.maxCoeff();
}

nn::Vector bellman_targets(const nn::Vector& rewards, const std::vector<bool>& done,
                           const nn::Matrix& next_inputs, const nn::DenseNet& online,
                           const nn::DenseNet& target, double gamma, bool double_dqn) {
  const Eigen::Index n = next_inputs.cols();
  if (rewards.size() != n || static_cast<Eigen::Index>(done.size()) != n)
    throw DomainError("bellman_targets: batch size mismatch");
  const nn::Matrix qt = target.forward_batch(next_inputs);
  nn::Matrix qo;
  if (double_dqn) qo = online.forward_batch(next_inputs);
  nn::Vector y(n);
  for (Eigen::Index j = 0; j < n; ++j) {
    if (done[static_cast<std::size_t>(j)]) {
      y(j) = rewards(j);
      continue;
    }
    double boot;
    if (double_dqn) {
      Eigen::Index best = 0;
      for (Eigen::Index a = 1; a < qo.rows(); ++a)
        if (qo(a, j) > qo(best, j)) best = a;
      boot = qt(best, j);
    } else {
      boot = qt.col(j).maxCoeff();
    }
    y(j) = rewards(j) + gamma * boot;
  }
  return y;
}

void DQNConfig::validate() const {
  for (int h : hidden)
    if (h < 1) throw DomainError("hidden layer sizes must be positive");
  if (!(learning_rate > 0.0)) throw DomainError("learning_rate must be positive");
  if (target_update_period < 1) throw DomainError("target_update_period must be positive");
  if (!(epsilon >= 0.0 && epsilon <= 1.0)) throw DomainError("epsilon must be in [0, 1]");
  if (!(gamma > 0.0 && gamma <= 1.0)) throw DomainError("gamma must be in (0, 1]");
  if (batch_size < 1) throw DomainError("batch_size must be positive");
  if (buffer_capacity < 1) throw DomainError("buffer_capacity must be positive");
  if (training_steps < 1) throw DomainError("training_steps must be positive");
  if (max_episode_steps < 1) throw DomainError("max_episode_steps must be positive");
  if (!(huber_delta > 0.0)) throw DomainError("huber_delta must be positive");
}

void TrainingLog::write_csv(std::ostream& out) const {
  out << "step,episode,loss,epsilon,episode_return,episode_length,sampled_objective\n";
  for (const auto& r : rows) {
    out << r.step << ',' << r.episode << ',';
    if (r.loss) out << detail::format_double(*r.loss);
    out << ',' << detail::format_double(r.epsilon) << ',';
    if (r.episode_return) out << detail::format_double(*r.episode_return);
    out << ',';
    if (r.episode_length) out << *r.episode_length;
    out << ',';
    if (r.sampled_objective) out << *r.sampled_objective;
    out << '\n';
  }
}

std::vector<int> TrainingLog::sampled_objectives() const {
  std::vector<int> out;
  for (const auto& r : rows)
    if (r.episode_length && r.sampled_objective) out.push_back(*r.sampled_objective);
  return out;
}

namespace {

std::vector<int> layer_dims(int input, const std::vector<int>& hidden, std::size_t outputs) {
  std::vector<int> dims{input};
  dims.insert(dims.end(), hidden.begin(), hidden.end());
  dims.push_back(static_cast<int>(outputs));
  return dims;
}

/// One gradient step on a sampled batch; returns (mean loss, max |Q|).
class Learner {
 public:
  Learner(nn::DenseNet& online, const DQNConfig& cfg)
      : online_(online), target_(online), opt_(online, nn::AdamConfig{cfg.learning_rate}), cfg_(cfg) {}

  std::pair<double, double> update(const std::vector<const CompositionTransition*>& batch,
                                   const StateEncoder& enc) {
    const auto n = static_cast<Eigen::Index>(batch.size());
    const int dim = enc.input_dim();
    nn::Matrix x(dim, n), xn(dim, n);
    nn::Vector r(n);
    std::vector<bool> done(batch.size());
    for (Eigen::Index j = 0; j < n; ++j) {
      const auto& t = *batch[static_cast<std::size_t>(j)];
      enc.encode_into(t.state, x.col(j));
      enc.encode_into(t.next_state, xn.col(j));
      r(j) = t.reward;
      done[static_cast<std::size_t>(j)] = t.done;
    }
    const nn::Vector y = bellman_targets(r, done, xn, online_, target_, cfg_.gamma, cfg_.double_dqn);
    const auto acts = online_.forward_record(x);
    const nn::Matrix& q = acts.output;

    nn::Matrix grad = nn::Matrix::Zero(q.rows(), q.cols());
    double loss = 0.0;
    const double inv_n = 1.0 / static_cast<double>(n);
    for (Eigen::Index j = 0; j < n; ++j) {
      const auto a = static_cast<Eigen::Index>(batch[static_cast<std::size_t>(j)]->action);
      const double err = q(a, j) - y(j);
      if (cfg_.loss == LossKind::Huber) {
        const double d = cfg_.huber_delta;
        const double abs_err = std::abs(err);
        loss += abs_err <= d ? 0.5 * err * err : d * (abs_err - 0.5 * d);
        grad(a, j) = std::clamp(err, -d, d) * inv_n;
      } else {
        loss += 0.5 * err * err;
        grad(a, j) = err * inv_n;
      }
    }
    loss *= inv_n;
    if (!std::isfinite(loss)) throw TrainingError("non-finite TD loss");
    opt_.apply(online_, online_.backward(acts, grad));
    if (!online_.all_finite()) throw TrainingError("network parameters became non-finite");
    return {loss, q.cwiseAbs().maxCoeff()};
  }

  void sync_target() { target_ = online_; }

 private:
  nn::DenseNet& online_;
  nn::DenseNet target_;
  nn::Adam opt_;
  const DQNConfig& cfg_;
};

}  // namespace

DQNResult dqn_train_offline(std::span<const CompositionTransition> tuples,
                            const StateEncoder& encoder, std::size_t action_count,
                            const DQNConfig& cfg) {
  cfg.validate();
  if (tuples.empty()) throw DomainError("offline training needs at least one tuple");
  Rng rng(cfg.seed);
  DQNResult result{nn::DenseNet(layer_dims(encoder.input_dim(), cfg.hidden, action_count), rng), {}};
  Learner learner(result.net, cfg);
  result.log.rows.reserve(static_cast<std::size_t>(cfg.training_steps));

  std::vector<const CompositionTransition*> batch(static_cast<std::size_t>(cfg.batch_size));
  for (long step = 0; step < cfg.training_steps; ++step) {
    for (auto& b : batch) b = &tuples[uniform_index(rng, tuples.size())];
    const auto [loss, max_q] = learner.update(batch, encoder);
    if ((step + 1) % cfg.target_update_period == 0) learner.sync_target();
    TrainingLogRow row;
    row.step = step;
    row.loss = loss;
    row.epsilon = cfg.epsilon;
    row.max_abs_q = max_q;
    result.log.rows.push_back(row);
  }
  return result;
}

DQNResult dqn_train_live(const SubgraphEnv& env, const DQNConfig& cfg, const RewardMode& mode,
                         const std::optional<GoalVector>& goal, bool subsample) {
  cfg.validate();
  if (subsample && !goal) throw DomainError("objective sub-sampling requires a goal vector");
  const StateEncoder encoder(env.vocabulary(), goal);
  Rng rng(cfg.seed);
  DQNResult result{
      nn::DenseNet(layer_dims(encoder.input_dim(), cfg.hidden, SubgraphEnv::action_count()), rng),
      {}};
  Learner learner(result.net, cfg);
  ReplayBuffer<CompositionTransition> buffer(cfg.buffer_capacity);
  result.log.rows.reserve(static_cast<std::size_t>(cfg.training_steps));

  auto draw_mode = [&](std::optional<int>& objective) -> RewardMode {
    if (!subsample) return mode;
    objective = static_cast<int>(uniform_index(rng, kAdsorbateCount)) + 1;
    return reward_mode::SubSampled{*goal, adsorbate_from_index(*objective)};
  };

  long episode = 0;
  int t = 0;
  double ep_return = 0.0;
  std::optional<int> objective;
  RewardMode ep_mode = draw_mode(objective);
  Composition state = env.reset(rng);
  nn::Vector input(encoder.input_dim());
  std::vector<const CompositionTransition*> batch(static_cast<std::size_t>(cfg.batch_size));

  for (long step = 0; step < cfg.training_steps; ++step) {
    encoder.encode_into(state, input);
    const nn::Vector q = result.net.forward(input);
    const auto a = epsilon_greedy({q.data(), static_cast<std::size_t>(q.size())}, cfg.epsilon, rng);
    const CompositionTransition tr = env.step(state, static_cast<int>(a), t, ep_mode, rng);
    buffer.push(tr);
    ep_return += tr.reward;

    TrainingLogRow row;
    row.step = step;
    row.episode = episode;
    row.epsilon = cfg.epsilon;
    row.sampled_objective = objective;
    if (buffer.size() >= std::max<std::size_t>(cfg.warmup, 1)) {
      const auto idx = buffer.sample_indices(rng, batch.size());
      for (std::size_t j = 0; j < idx.size(); ++j) batch[j] = &buffer[idx[j]];
      const auto [loss, max_q] = learner.update(batch, encoder);
      row.loss = loss;
      row.max_abs_q = max_q;
    }
    if ((step + 1) % cfg.target_update_period == 0) learner.sync_target();

    if (tr.done) {
      row.episode_return = ep_return;
      row.episode_length = t + 1;
      result.log.rows.push_back(row);
      ++episode;
      t = 0;
      ep_return = 0.0;
      ep_mode = draw_mode(objective);
      state = env.reset(rng);
    } else {
      result.log.rows.push_back(row);
      ++t;
      state = tr.next_state;
    }
  }
  return result;
}

GreedyPolicy::GreedyPolicy(nn::DenseNet net, StateEncoder encoder)
    : net_(std::move(net)), encoder_(std::move(encoder)) {
  if (net_.input_dim() != encoder_.input_dim())
    throw DomainError("network expects " + std::to_string(net_.input_dim()) +
                      " inputs but the encoder produces " + std::to_string(encoder_.input_dim()));
}

nn::Vector GreedyPolicy::q_values(const Composition& state) const {
  return net_.forward(encoder_.encode(state));
}

std::size_t GreedyPolicy::operator()(const Composition& state) const {
  const nn::Vector q = q_values(state);
  return argmax({q.data(), static_cast<std::size_t>(q.size())});
}

}  // namespace adsorbrl
