#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "adsorbrl/agents.hpp"
#include "adsorbrl/dataset.hpp"
#include "adsorbrl/env.hpp"
#include "adsorbrl/eval.hpp"

namespace adsorbrl {

/// Everything needed to reproduce one run. Defaults depend on the experiment:
///
///   1  full space, offline DQN on precomputed tuples, reward -E / -lambda
///   2  periodic-table GridWorld, tabular Q-learning, reward E^2, 9 steps
///   3  known subgraph, random edge traversal, Double-DQN, reward -E^3
///   4  multi-objective subgraph, reward -E . g
///   5  as 4 with one objective sampled per episode, reward -E_i g_i
struct ExperimentSpec {
  int experiment = 3;
  std::string data;
  std::vector<Adsorbate> targets;
  std::optional<GoalVector> goal;
  bool subsample = false;
  std::uint64_t seed = 0;
  std::string out = "run";

  DQNConfig dqn;
  int max_steps = 75;
  double lambda = 100.0;
  bool per_step_reward = true;

  double alpha = 0.1;
  std::optional<double> alpha_final;
  long episodes = 20'000;

  std::size_t rollouts = 50;
  std::uint64_t eval_seed = 2024;
  unsigned jobs = 1;

  /// Defaults for the given experiment id; throws DomainError outside 1..5.
  static ExperimentSpec defaults(int experiment);

  /// Throws DomainError when fields contradict the experiment id.
  void validate() const;

  /// Applies one `key = value` override; throws DomainError on unknown keys
  /// or unparsable values.
  void set(const std::string& key, const std::string& value);

  /// Flat `key = value` text with every field, in a fixed order.
  std::string to_text() const;
  /// Reads text produced by to_text (or a hand-written subset). The
  /// `experiment` key, when present, selects the defaults before the rest is applied.
  static ExperimentSpec from_text(const std::string& text);
  static ExperimentSpec from_file(const std::filesystem::path& path);

  Adsorbate primary_target() const { return targets.front(); }
  RewardMode reward_mode() const;
};

struct TrainArtifacts {
  std::optional<nn::DenseNet> net;  // experiments 1, 3-5
  std::optional<QTable> qtable;     // experiment 2
  TrainingLog log;
};

/// Trains per `spec` on `table` without touching the filesystem.
TrainArtifacts train(const ExperimentSpec& spec, const EnergyTable& table);

/// Greedy rollouts of trained artifacts; returns the traces and the report.
struct EvalResult {
  std::vector<EpisodeTrace> traces;
  RolloutReport report;
};
EvalResult evaluate(const ExperimentSpec& spec, const EnergyTable& table,
                    const TrainArtifacts& artifacts);

/// File layout inside a run directory.
namespace run_files {
inline constexpr const char* kSpec = "spec.resolved";
inline constexpr const char* kCheckpoint = "checkpoint.csv";
inline constexpr const char* kQTable = "qtable.csv";
inline constexpr const char* kTrainingLog = "training_log.csv";
inline constexpr const char* kReportJson = "report.json";
inline constexpr const char* kReportText = "report.txt";
inline constexpr const char* kTraces = "traces.csv";
}  // namespace run_files

/// Writes spec.resolved, the checkpoint (or Q-table) and the training log into spec.out.
void save_run(const ExperimentSpec& spec, const TrainArtifacts& artifacts);
TrainArtifacts load_artifacts(const ExperimentSpec& spec, const std::filesystem::path& dir);
void save_eval(const std::filesystem::path& dir, const ExperimentSpec& spec,
               const EnergyTable& table, const EvalResult& result);

struct SweepRow {
  double lambda;
  double success_rate;
  double mean_episode_length;
  std::size_t n_rollouts;
};

/// Experiment 1 trained and evaluated once per lambda.
std::vector<SweepRow> lambda_sweep(const ExperimentSpec& spec, const EnergyTable& table,
                                   const std::vector<double>& lambdas);
void write_sweep_csv(std::ostream& out, const std::vector<SweepRow>& rows);

/// Resolves the dataset path: explicit value, else $ADSORBRL_DATA_DIR/adsorption_energies.csv.
std::string resolve_data_path(const std::string& explicit_path);

}  // namespace adsorbrl
