#pragma once

#include <array>
#include <cstdint>
#include <iosfwd>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "adsorbrl/dataset.hpp"
#include "adsorbrl/elements.hpp"
#include "adsorbrl/rng.hpp"

namespace adsorbrl {

/// Per-adsorbate direction: +1 seeks lower energy (stronger binding),
/// -1 seeks higher energy (weaker binding).
class GoalVector {
 public:
  GoalVector() { values_.fill(1); }
  explicit GoalVector(const std::array<int, kAdsorbateCount>& values);

  /// Parses six comma-separated entries such as "+1,+1,+1,-1,-1,-1".
  static GoalVector parse(std::string_view text);
  std::string to_string() const;

  int operator[](Adsorbate a) const { return values_[static_cast<std::size_t>(a)]; }
  const std::array<int, kAdsorbateCount>& values() const { return values_; }

  friend bool operator==(const GoalVector&, const GoalVector&) = default;

 private:
  std::array<int, kAdsorbateCount> values_{};
};

namespace reward_mode {
struct NegEnergy {};
struct SquaredEnergy {};
struct NegCubeEnergy {};
struct GoalDot {
  GoalVector goal;
};
struct SubSampled {
  GoalVector goal;
  Adsorbate objective;
};
}  // namespace reward_mode

using RewardMode = std::variant<reward_mode::NegEnergy, reward_mode::SquaredEnergy,
                                reward_mode::NegCubeEnergy, reward_mode::GoalDot,
                                reward_mode::SubSampled>;

std::string describe(const RewardMode& mode);

/// Reward of a state with the given energies.
///
/// Single-objective modes read `target` and throw DomainError if its energy is
/// missing. GoalDot returns -sum_i E_i g_i and SubSampled returns -E_i g_i;
/// missing energies contribute 0 in both.
double reward(const RewardMode& mode, const AdsorbateEnergies& energies, Adsorbate target);

template <class State>
struct Transition {
  State state;
  int action = 0;
  double reward = 0.0;
  State next_state;
  bool done = false;
};

using CompositionTransition = Transition<Composition>;
using GridTransition = Transition<AtomicNumber>;

struct EpisodeConfig {
  int max_steps = 20;
  double gamma = 0.9;
  std::uint64_t seed = 0;

  /// Throws DomainError unless max_steps >= 1 and gamma is in (0, 1].
  void validate() const;
};

// ---------------------------------------------------------------------------
// Full state/action space over all 1-3 element compositions.

enum class FullActionKind { Add, Remove, DoNothing, Terminate };

struct FullAction {
  FullActionKind kind;
  std::size_t index = 0;  // vocabulary index for Add, slot for Remove
};

/// Action ids: [0, V) add vocabulary element, [V, V+3) remove slot,
/// V+3 do-nothing, V+4 terminate. Known states (energy known for the target)
/// are rewarded -E; unknown ones -lambda. Invalid states do not end the episode.
class FullSpaceEnv {
 public:
  FullSpaceEnv(const EnergyTable& table, Adsorbate target, double lambda, int max_steps,
               bool per_step_reward = true);

  std::size_t action_count() const { return vocab_.size() + 5; }
  FullAction decode(int action) const;
  int encode(const FullAction& action) const;

  /// Throws DomainError on a malformed action id. Blocked actions (adding to a
  /// full composition, removing the last element or an absent slot) leave the
  /// state unchanged.
  CompositionTransition step(const Composition& state, int action, int step_index) const;

  /// Reward for arriving in `c`.
  double state_reward(const Composition& c) const;
  bool is_valid(const Composition& c) const { return table_->energy(c, target_).has_value(); }

  /// Uniform over compositions with a known target energy.
  Composition reset(Rng& rng) const;

  const Vocabulary& vocabulary() const { return vocab_; }
  const EnergyTable& table() const { return *table_; }
  Adsorbate target() const { return target_; }
  double lambda() const { return lambda_; }
  int max_steps() const { return max_steps_; }

 private:
  const EnergyTable* table_;
  Adsorbate target_;
  double lambda_;
  int max_steps_;
  bool per_step_reward_;
  Vocabulary vocab_;
  CompositionSet valid_;
};

/// Every (s, a, r, s') with s and s' both known for `adsorbate` and linked by a
/// single add/remove action, plus a do-nothing self-loop per known state.
/// Ordered by state, then action id.
std::vector<CompositionTransition> build_offline_tuples(const EnergyTable& table,
                                                        Adsorbate adsorbate);

/// Complement used for offline training with reward shaping: add/remove
/// actions from a known state into an unknown one (reward -lambda) and one
/// terminal transition per known state.
std::vector<CompositionTransition> build_penalty_tuples(const EnergyTable& table,
                                                        Adsorbate adsorbate, double lambda);

// ---------------------------------------------------------------------------
// Periodic-table GridWorld over single elements.

class GridWorldEnv {
 public:
  GridWorldEnv(const EnergyTable& table, Adsorbate target = Adsorbate::OH2, int horizon = 9,
               bool terminal_only_reward = false,
               const ElementRegistry& registry = ElementRegistry::builtin());

  static constexpr std::size_t action_count() { return kDirectionCount; }
  std::size_t state_count() const { return registry_->size(); }
  int horizon() const { return horizon_; }

  /// Reward is E^2 of the single-element composition reached, or 0 when its
  /// energy is unknown. Throws DomainError when step_index >= horizon.
  GridTransition step(AtomicNumber z, Direction d, int step_index) const;
  AtomicNumber reset(Rng& rng) const;

  std::optional<double> energy(AtomicNumber z) const;

 private:
  const EnergyTable* table_;
  Adsorbate target_;
  int horizon_;
  bool terminal_only_;
  const ElementRegistry* registry_;
};

// ---------------------------------------------------------------------------
// Known-subgraph environment with Random Edge Traversal.

enum class SubgraphAction { Add = 0, RemoveFirst, RemoveSecond, RemoveThird, Stop };
inline constexpr std::size_t kSubgraphActionCount = 5;
std::string_view to_string(SubgraphAction a);

class SubgraphEnv {
 public:
  /// Throws DomainError when `targets` is empty.
  SubgraphEnv(const EnergyTable& table, std::vector<Adsorbate> targets, EpisodeConfig cfg);

  static constexpr std::size_t action_count() { return kSubgraphActionCount; }

  /// Add draws a uniformly random vocabulary element not already present; the
  /// move only happens if the result has at most 3 elements and lies in the
  /// known subgraph. Remove-k drops the k-th element in atomic-number order
  /// under the same rule. Every non-terminal reward is 0; Stop or the last
  /// allowed step ends the episode with reward(mode, energies(next)).
  ///
  /// Throws DomainError if `state` is outside the subgraph or the action id
  /// is malformed.
  CompositionTransition step(const Composition& state, int action, int step_index,
                             const RewardMode& mode, Rng& rng) const;

  /// Uniform over the known subgraph.
  Composition reset(Rng& rng) const;

  double terminal_reward(const Composition& state, const RewardMode& mode) const;

  const CompositionSet& states() const { return states_; }
  const Vocabulary& vocabulary() const { return vocab_; }
  const EnergyTable& table() const { return *table_; }
  const std::vector<Adsorbate>& targets() const { return targets_; }
  const EpisodeConfig& config() const { return cfg_; }

 private:
  const EnergyTable* table_;
  std::vector<Adsorbate> targets_;
  EpisodeConfig cfg_;
  CompositionSet states_;
  Vocabulary vocab_;
};

/// One-episode trace as CSV `step,state,action,reward,done`.
void write_episode_csv(std::ostream& out, const std::vector<CompositionTransition>& steps,
                       const ElementRegistry& reg = ElementRegistry::builtin());

}  // namespace adsorbrl
