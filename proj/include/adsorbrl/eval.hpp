#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "adsorbrl/agents.hpp"
#include "adsorbrl/dataset.hpp"
#include "adsorbrl/env.hpp"

namespace adsorbrl {

/// One evaluation episode. GridWorld states are stored as single-element
/// compositions.
struct EpisodeTrace {
  std::vector<CompositionTransition> steps;

  const Composition& initial() const { return steps.front().state; }
  const Composition& terminal() const { return steps.back().next_state; }
  int length() const { return static_cast<int>(steps.size()); }
};

struct AdsorbateStats {
  std::size_t n_initial = 0;  // rollouts whose initial state has a known energy
  std::size_t n_final = 0;
  double mean_initial = 0.0;  // eV
  double mean_final = 0.0;    // eV
  /// mean(-E_final) - mean(-E_initial); positive when binding got stronger.
  double delta = 0.0;
  /// delta signed by the goal (-delta for weak-binding objectives).
  double objective_delta = 0.0;
};

struct RolloutReport {
  std::size_t n_rollouts = 0;
  std::array<std::optional<AdsorbateStats>, kAdsorbateCount> per_adsorbate;
  std::map<int, std::size_t> trajectory_length_histogram;
  std::map<Composition, std::size_t> terminal_state_frequencies;
  std::optional<double> success_rate;
  std::optional<GoalVector> goal;

  double mean_length() const;
  /// Writes the report as JSON.
  std::string to_json(const ElementRegistry& reg = ElementRegistry::builtin()) const;
  static RolloutReport from_json(const std::string& text,
                                 const ElementRegistry& reg = ElementRegistry::builtin());
};

/// Assembles a report from episode traces. Missing energies are left out of
/// that adsorbate's means; `goal` selects the sign of objective_delta.
RolloutReport summarize(const std::vector<EpisodeTrace>& traces, const EnergyTable& table,
                        const std::optional<GoalVector>& goal = std::nullopt);

using CompositionPolicy = std::function<std::size_t(const Composition&)>;

/// Rollout i is driven by its own stream derived from (seed, i), so the
/// initial states are shared by every policy evaluated with the same seed and
/// results do not depend on `jobs`.
std::vector<EpisodeTrace> run_rollouts(const CompositionPolicy& policy, const SubgraphEnv& env,
                                       const RewardMode& mode, std::size_t n, std::uint64_t seed,
                                       unsigned jobs = 1);
std::vector<EpisodeTrace> run_rollouts(const CompositionPolicy& policy, const FullSpaceEnv& env,
                                       std::size_t n, std::uint64_t seed, unsigned jobs = 1);
std::vector<EpisodeTrace> run_rollouts(const QTable& q, const GridWorldEnv& env, std::size_t n,
                                       std::uint64_t seed);

/// Fraction of rollouts that terminated exactly at `optimum`.
double success_rate(const RolloutReport& report, const Composition& optimum);

struct RankedState {
  Composition composition;
  std::size_t count;
  std::optional<double> energy;
};

/// Most frequent terminal states; ties broken by lower `target` energy
/// (unknown last), then composition key.
std::vector<RankedState> top_terminal_states(const RolloutReport& report, const EnergyTable& table,
                                             Adsorbate target, std::size_t k);

/// CSV `episode,step,state,action,reward,done,next_state`.
void write_traces_csv(std::ostream& out, const std::vector<EpisodeTrace>& traces,
                      const ElementRegistry& reg = ElementRegistry::builtin());
std::vector<EpisodeTrace> read_traces_csv(std::istream& in,
                                          const ElementRegistry& reg = ElementRegistry::builtin());

/// Aligned table: one row per labelled report, one column per adsorbate,
/// plus an "Initial state" row taken from the first report.
std::string format_energy_table(const std::vector<std::pair<std::string, RolloutReport>>& rows);

}  // namespace adsorbrl
