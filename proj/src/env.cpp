#include "adsorbrl/env.hpp"

#include <cmath>
#include <ostream>
#include <sstream>

#include "adsorbrl/error.hpp"
#include "csv.hpp"

namespace adsorbrl {

template <class... Ts>
struct overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
overloaded(Ts...) -> overloaded<Ts...>;

// ---------------------------------------------------------------------------
// Goals and rewards

GoalVector::GoalVector(const std::array<int, kAdsorbateCount>& values) : values_(values) {
  for (int v : values_)
    if (v != 1 && v != -1) throw DomainError("goal vector entries must be +1 or -1");
}

GoalVector GoalVector::parse(std::string_view text) {
  const auto fields = detail::split_csv_line(text);
  if (fields.size() != kAdsorbateCount)
    throw DomainError("goal vector needs 6 comma-separated entries, got " +
                      std::to_string(fields.size()));
  std::array<int, kAdsorbateCount> values{};
  for (std::size_t i = 0; i < kAdsorbateCount; ++i) {
    const auto& f = fields[i];
    if (f == "+1" || f == "1" || f == "+")
      values[i] = 1;
    else if (f == "-1" || f == "-")
      values[i] = -1;
    else
      throw DomainError("goal vector entry '" + f + "' is not +1 or -1");
  }
  return GoalVector(values);
}

std::string GoalVector::to_string() const {
  std::string out;
  for (std::size_t i = 0; i < kAdsorbateCount; ++i) {
    if (i) out += ',';
    out += values_[i] > 0 ? "+1" : "-1";
  }
  return out;
}

std::string describe(const RewardMode& mode) {
  return std::visit(
      overloaded{
          [](const reward_mode::NegEnergy&) -> std::string { return "neg_energy"; },
          [](const reward_mode::SquaredEnergy&) -> std::string { return "squared_energy"; },
          [](const reward_mode::NegCubeEnergy&) -> std::string { return "neg_cube_energy"; },
          [](const reward_mode::GoalDot& m) { return "goal_dot(" + m.goal.to_string() + ")"; },
          [](const reward_mode::SubSampled& m) {
            return "sub_sampled(" + m.goal.to_string() + ";" +
                   std::to_string(objective_index(m.objective)) + ")";
          },
      },
      mode);
}

namespace {

double required(const AdsorbateEnergies& energies, Adsorbate a) {
  const auto& e = energies[static_cast<std::size_t>(a)];
  if (!e)
    throw DomainError("no known " + std::string(to_string(a)) + " energy for reward computation");
  return *e;
}

}  // namespace

double reward(const RewardMode& mode, const AdsorbateEnergies& energies, Adsorbate target) {
  return std::visit(
      overloaded{
          [&](const reward_mode::NegEnergy&) { return -required(energies, target); },
          [&](const reward_mode::SquaredEnergy&) {
            const double e = required(energies, target);
            return e * e;
          },
          [&](const reward_mode::NegCubeEnergy&) {
            const double e = required(energies, target);
            return -(e * e * e);
          },
          [&](const reward_mode::GoalDot& m) {
            double dot = 0.0;
            for (Adsorbate a : kAdsorbates)
              if (const auto& e = energies[static_cast<std::size_t>(a)]) dot += *e * m.goal[a];
            return -dot;
          },
          [&](const reward_mode::SubSampled& m) {
            const auto& e = energies[static_cast<std::size_t>(m.objective)];
            return e ? -(*e * m.goal[m.objective]) : 0.0;
          },
      },
      mode);
}

void EpisodeConfig::validate() const {
  if (max_steps < 1) throw DomainError("max_steps must be at least 1");
  if (!(gamma > 0.0 && gamma <= 1.0)) throw DomainError("gamma must be in (0, 1]");
}

// ---------------------------------------------------------------------------
// Full space

FullSpaceEnv::FullSpaceEnv(const EnergyTable& table, Adsorbate target, double lambda,
                           int max_steps, bool per_step_reward)
    : table_(&table),
      target_(target),
      lambda_(lambda),
      max_steps_(max_steps),
      per_step_reward_(per_step_reward),
      vocab_(table.vocabulary()),
      valid_(known_subgraph(table, std::span<const Adsorbate>(&target_, 1))) {
  if (max_steps < 1) throw DomainError("max_steps must be at least 1");
}

FullAction FullSpaceEnv::decode(int action) const {
  const auto v = static_cast<int>(vocab_.size());
  if (action < 0 || action >= v + 5) throw DomainError("malformed action id " + std::to_string(action));
  if (action < v) return {FullActionKind::Add, static_cast<std::size_t>(action)};
  if (action < v + 3) return {FullActionKind::Remove, static_cast<std::size_t>(action - v)};
  if (action == v + 3) return {FullActionKind::DoNothing};
  return {FullActionKind::Terminate};
}

int FullSpaceEnv::encode(const FullAction& a) const {
  const auto v = static_cast<int>(vocab_.size());
  switch (a.kind) {
    case FullActionKind::Add: return static_cast<int>(a.index);
    case FullActionKind::Remove: return v + static_cast<int>(a.index);
    case FullActionKind::DoNothing: return v + 3;
    case FullActionKind::Terminate: return v + 4;
  }
  return v + 4;
}

double FullSpaceEnv::state_reward(const Composition& c) const {
  const auto e = table_->energy(c, target_);
  return e ? -*e : -lambda_;
}

CompositionTransition FullSpaceEnv::step(const Composition& state, int action,
                                         int step_index) const {
  const FullAction a = decode(action);
  Composition next = state;
  switch (a.kind) {
    case FullActionKind::Add:
      if (auto n = state.with(vocab_.at(a.index))) next = *n;
      break;
    case FullActionKind::Remove:
      if (auto n = state.without_slot(a.index)) next = *n;
      break;
    case FullActionKind::DoNothing:
    case FullActionKind::Terminate: break;
  }
  const bool done = a.kind == FullActionKind::Terminate || step_index >= max_steps_ - 1;
  const double r = (per_step_reward_ || done) ? state_reward(next) : 0.0;
  return {state, action, r, next, done};
}

Composition FullSpaceEnv::reset(Rng& rng) const {
  if (valid_.empty()) throw DomainError("no state with a known energy to start from");
  return valid_[uniform_index(rng, valid_.size())];
}

std::vector<CompositionTransition> build_offline_tuples(const EnergyTable& table,
                                                        Adsorbate adsorbate) {
  std::vector<CompositionTransition> out;
  if (table.empty()) return out;
  const FullSpaceEnv env(table, adsorbate, 0.0, 1);
  const auto do_nothing = env.encode({FullActionKind::DoNothing});
  for (const auto& [s, energies] : table.entries()) {
    const auto& e = energies[static_cast<std::size_t>(adsorbate)];
    if (!e) continue;
    for (int a = 0; a < do_nothing; ++a) {
      const auto t = env.step(s, a, 0);
      if (t.next_state == s || !env.is_valid(t.next_state)) continue;
      out.push_back({s, a, t.reward, t.next_state, false});
    }
    out.push_back({s, do_nothing, -*e, s, false});
  }
  return out;
}

std::vector<CompositionTransition> build_penalty_tuples(const EnergyTable& table,
                                                        Adsorbate adsorbate, double lambda) {
  std::vector<CompositionTransition> out;
  if (table.empty()) return out;
  const FullSpaceEnv env(table, adsorbate, lambda, 1);
  const auto do_nothing = env.encode({FullActionKind::DoNothing});
  const auto terminate = env.encode({FullActionKind::Terminate});
  for (const auto& [s, energies] : table.entries()) {
    const auto& e = energies[static_cast<std::size_t>(adsorbate)];
    if (!e) continue;
    for (int a = 0; a < do_nothing; ++a) {
      const auto t = env.step(s, a, 0);
      if (t.next_state == s || env.is_valid(t.next_state)) continue;
      out.push_back({s, a, -lambda, t.next_state, false});
    }
    out.push_back({s, terminate, -*e, s, true});
  }
  return out;
}

// ---------------------------------------------------------------------------
// GridWorld

GridWorldEnv::GridWorldEnv(const EnergyTable& table, Adsorbate target, int horizon,
                           bool terminal_only_reward, const ElementRegistry& registry)
    : table_(&table),
      target_(target),
      horizon_(horizon),
      terminal_only_(terminal_only_reward),
      registry_(&registry) {
  if (horizon < 1) throw DomainError("horizon must be at least 1");
}

std::optional<double> GridWorldEnv::energy(AtomicNumber z) const {
  return table_->energy(Composition{z}, target_);
}

GridTransition GridWorldEnv::step(AtomicNumber z, Direction d, int step_index) const {
  if (step_index < 0 || step_index >= horizon_)
    throw DomainError("step index " + std::to_string(step_index) + " beyond the horizon");
  const AtomicNumber next = registry_->grid_neighbor(z, d);
  const bool done = step_index == horizon_ - 1;
  double r = 0.0;
  if (!terminal_only_ || done)
    if (const auto e = energy(next)) r = *e * *e;
  return {z, static_cast<int>(d), r, next, done};
}

AtomicNumber GridWorldEnv::reset(Rng& rng) const {
  return static_cast<AtomicNumber>(uniform_index(rng, registry_->size()) + 1);
}

// ---------------------------------------------------------------------------
// Known subgraph

std::string_view to_string(SubgraphAction a) {
  switch (a) {
    case SubgraphAction::Add: return "add";
    case SubgraphAction::RemoveFirst: return "remove_first";
    case SubgraphAction::RemoveSecond: return "remove_second";
    case SubgraphAction::RemoveThird: return "remove_third";
    case SubgraphAction::Stop: return "stop";
  }
  return "?";
}

SubgraphEnv::SubgraphEnv(const EnergyTable& table, std::vector<Adsorbate> targets,
                         EpisodeConfig cfg)
    : table_(&table),
      targets_(std::move(targets)),
      cfg_(cfg),
      states_(known_subgraph(table, targets_)),
      vocab_(table.vocabulary()) {
  cfg_.validate();
}

double SubgraphEnv::terminal_reward(const Composition& state, const RewardMode& mode) const {
  const AdsorbateEnergies* e = table_->energies(state);
  if (!e) throw DomainError("state " + state.key() + " has no known energy");
  return reward(mode, *e, targets_.front());
}

CompositionTransition SubgraphEnv::step(const Composition& state, int action, int step_index,
                                        const RewardMode& mode, Rng& rng) const {
  if (action < 0 || action >= static_cast<int>(kSubgraphActionCount))
    throw DomainError("malformed action id " + std::to_string(action));
  if (!states_.contains(state))
    throw DomainError("state " + state.key() + " is outside the known subgraph");

  Composition next = state;
  const auto kind = static_cast<SubgraphAction>(action);
  switch (kind) {
    case SubgraphAction::Add: {
      const std::size_t candidates = vocab_.size() - state.size();
      if (candidates == 0) break;
      // Draw the k-th vocabulary element not already in the composition.
      std::size_t k = uniform_index(rng, candidates);
      AtomicNumber pick = 0;
      for (AtomicNumber z : vocab_.elements()) {
        if (state.contains(z)) continue;
        if (k-- == 0) {
          pick = z;
          break;
        }
      }
      if (auto n = state.with(pick); n && states_.contains(*n)) next = *n;
      break;
    }
    case SubgraphAction::RemoveFirst:
    case SubgraphAction::RemoveSecond:
    case SubgraphAction::RemoveThird: {
      const auto slot = static_cast<std::size_t>(action - static_cast<int>(SubgraphAction::RemoveFirst));
      if (auto n = state.without_slot(slot); n && states_.contains(*n)) next = *n;
      break;
    }
    case SubgraphAction::Stop: break;
  }

  const bool done = kind == SubgraphAction::Stop || step_index >= cfg_.max_steps - 1;
  const double r = done ? terminal_reward(next, mode) : 0.0;
  return {state, action, r, next, done};
}

Composition SubgraphEnv::reset(Rng& rng) const {
  if (states_.empty()) throw DomainError("known subgraph is empty");
  return states_[uniform_index(rng, states_.size())];
}

void write_episode_csv(std::ostream& out, const std::vector<CompositionTransition>& steps,
                       const ElementRegistry& reg) {
  out << "step,state,action,reward,done\n";
  for (std::size_t i = 0; i < steps.size(); ++i) {
    const auto& t = steps[i];
    out << i << ',' << t.state.key(reg) << ',' << t.action << ','
        << detail::format_double(t.reward) << ',' << (t.done ? 1 : 0) << '\n';
  }
}

}  // namespace adsorbrl
