#include "adsorbrl/experiment.hpp"

#include <cstdlib>
#include <fstream>
#include <functional>
#include <sstream>

#include "adsorbrl/error.hpp"
#include "csv.hpp"

namespace adsorbrl {

namespace fs = std::filesystem;

namespace {

const GoalVector kDefaultGoal({+1, +1, +1, -1, -1, -1});

bool parse_bool(const std::string& v) {
  if (v == "true" || v == "1" || v == "yes") return true;
  if (v == "false" || v == "0" || v == "no") return false;
  throw DomainError("expected a boolean, got '" + v + "'");
}

long parse_long(const std::string& v) {
  char* end = nullptr;
  const long x = std::strtol(v.c_str(), &end, 10);
  if (v.empty() || *end != '\0') throw DomainError("expected an integer, got '" + v + "'");
  return x;
}

std::uint64_t parse_u64(const std::string& v) {
  char* end = nullptr;
  const unsigned long long x = std::strtoull(v.c_str(), &end, 10);
  if (v.empty() || *end != '\0' || v.front() == '-')
    throw DomainError("expected a non-negative integer, got '" + v + "'");
  return x;
}

double parse_real(const std::string& v) {
  char* end = nullptr;
  const double x = std::strtod(v.c_str(), &end);
  if (v.empty() || *end != '\0') throw DomainError("expected a number, got '" + v + "'");
  return x;
}

std::vector<std::string> split_list(const std::string& v) {
  if (detail::trim(v).empty()) return {};
  return detail::split_csv_line(v);
}

std::string join_ints(const std::vector<int>& xs) {
  std::string out;
  for (std::size_t i = 0; i < xs.size(); ++i) out += (i ? "," : "") + std::to_string(xs[i]);
  return out;
}

}  // namespace

ExperimentSpec ExperimentSpec::defaults(int experiment) {
  if (experiment < 1 || experiment > 5)
    throw DomainError("experiment must be in 1..5, got " + std::to_string(experiment));
  ExperimentSpec s;
  s.experiment = experiment;
  s.targets = {Adsorbate::OH2};
  switch (experiment) {
    case 1:
      s.max_steps = 20;
      s.dqn.training_steps = 100'000;
      break;
    case 2:
      s.max_steps = 9;
      break;
    case 3:
      s.max_steps = 75;
      s.dqn.training_steps = 50'000;
      break;
    case 4:
    case 5:
      s.targets.assign(kAdsorbates.begin(), kAdsorbates.end());
      s.goal = kDefaultGoal;
      s.subsample = experiment == 5;
      s.max_steps = 20;
      s.dqn.training_steps = 50'000;
      break;
  }
  s.dqn.max_episode_steps = s.max_steps;
  return s;
}

void ExperimentSpec::validate() const {
  if (experiment < 1 || experiment > 5) throw DomainError("experiment must be in 1..5");
  if (targets.empty()) throw DomainError("at least one target adsorbate is required");
  const bool multi = experiment == 4 || experiment == 5;
  if (multi != goal.has_value())
    throw DomainError(multi ? "experiments 4 and 5 require a goal vector"
                            : "a goal vector is only used by experiments 4 and 5");
  if (subsample && !multi) throw DomainError("objective sub-sampling applies to experiments 4 and 5");
  if (experiment == 5 && !subsample) throw DomainError("experiment 5 trains with sub-sampling");
  if (!multi && targets.size() != 1)
    throw DomainError("single-objective experiments take exactly one target adsorbate");
  if (max_steps < 1) throw DomainError("max_steps must be at least 1");
  if (rollouts < 1) throw DomainError("rollouts must be at least 1");
  if (experiment == 2) {
    if (episodes < 1) throw DomainError("episodes must be at least 1");
    QLearningConfig{alpha, alpha_final, dqn.gamma, dqn.epsilon, seed}.validate();
  } else {
    dqn.validate();
  }
}

void ExperimentSpec::set(const std::string& key, const std::string& raw) {
  const std::string v = detail::trim(raw);
  static const std::map<std::string, std::function<void(ExperimentSpec&, const std::string&)>>
      setters = {
          {"experiment", [](ExperimentSpec& s, const std::string& v) { s.experiment = static_cast<int>(parse_long(v)); }},
          {"data", [](ExperimentSpec& s, const std::string& v) { s.data = v; }},
          {"targets",
           [](ExperimentSpec& s, const std::string& v) {
             s.targets.clear();
             for (const auto& name : split_list(v)) {
               const auto a = parse_adsorbate(name);
               if (!a) throw DomainError("unknown adsorbate '" + name + "'");
               s.targets.push_back(*a);
             }
           }},
          {"goal",
           [](ExperimentSpec& s, const std::string& v) {
             if (v.empty() || v == "none")
               s.goal.reset();
             else
               s.goal = GoalVector::parse(v);
           }},
          {"subsample", [](ExperimentSpec& s, const std::string& v) { s.subsample = parse_bool(v); }},
          {"seed", [](ExperimentSpec& s, const std::string& v) { s.seed = parse_u64(v); }},
          {"out", [](ExperimentSpec& s, const std::string& v) { s.out = v; }},
          {"hidden",
           [](ExperimentSpec& s, const std::string& v) {
             s.dqn.hidden.clear();
             for (const auto& h : split_list(v)) s.dqn.hidden.push_back(static_cast<int>(parse_long(h)));
           }},
          {"learning_rate", [](ExperimentSpec& s, const std::string& v) { s.dqn.learning_rate = parse_real(v); }},
          {"target_update_period", [](ExperimentSpec& s, const std::string& v) { s.dqn.target_update_period = parse_long(v); }},
          {"epsilon", [](ExperimentSpec& s, const std::string& v) { s.dqn.epsilon = parse_real(v); }},
          {"gamma", [](ExperimentSpec& s, const std::string& v) { s.dqn.gamma = parse_real(v); }},
          {"batch_size", [](ExperimentSpec& s, const std::string& v) { s.dqn.batch_size = static_cast<int>(parse_long(v)); }},
          {"buffer_capacity", [](ExperimentSpec& s, const std::string& v) { s.dqn.buffer_capacity = parse_u64(v); }},
          {"warmup", [](ExperimentSpec& s, const std::string& v) { s.dqn.warmup = parse_u64(v); }},
          {"training_steps", [](ExperimentSpec& s, const std::string& v) { s.dqn.training_steps = parse_long(v); }},
          {"double_dqn", [](ExperimentSpec& s, const std::string& v) { s.dqn.double_dqn = parse_bool(v); }},
          {"loss",
           [](ExperimentSpec& s, const std::string& v) {
             if (v == "huber")
               s.dqn.loss = LossKind::Huber;
             else if (v == "squared")
               s.dqn.loss = LossKind::Squared;
             else
               throw DomainError("loss must be huber or squared");
           }},
          {"huber_delta", [](ExperimentSpec& s, const std::string& v) { s.dqn.huber_delta = parse_real(v); }},
          {"max_steps",
           [](ExperimentSpec& s, const std::string& v) {
             s.max_steps = static_cast<int>(parse_long(v));
             s.dqn.max_episode_steps = s.max_steps;
           }},
          {"lambda", [](ExperimentSpec& s, const std::string& v) { s.lambda = parse_real(v); }},
          {"per_step_reward", [](ExperimentSpec& s, const std::string& v) { s.per_step_reward = parse_bool(v); }},
          {"alpha", [](ExperimentSpec& s, const std::string& v) { s.alpha = parse_real(v); }},
          {"alpha_final",
           [](ExperimentSpec& s, const std::string& v) {
             if (v.empty() || v == "none")
               s.alpha_final.reset();
             else
               s.alpha_final = parse_real(v);
           }},
          {"episodes", [](ExperimentSpec& s, const std::string& v) { s.episodes = parse_long(v); }},
          {"rollouts", [](ExperimentSpec& s, const std::string& v) { s.rollouts = parse_u64(v); }},
          {"eval_seed", [](ExperimentSpec& s, const std::string& v) { s.eval_seed = parse_u64(v); }},
          {"jobs", [](ExperimentSpec& s, const std::string& v) { s.jobs = static_cast<unsigned>(parse_u64(v)); }},
      };
  auto it = setters.find(key);
  if (it == setters.end()) throw DomainError("unknown configuration key '" + key + "'");
  it->second(*this, v);
}

std::string ExperimentSpec::to_text() const {
  std::ostringstream o;
  std::string target_list;
  for (std::size_t i = 0; i < targets.size(); ++i)
    target_list += (i ? "," : "") + std::string(to_string(targets[i]));
  o << "experiment = " << experiment << '\n'
    << "data = " << data << '\n'
    << "targets = " << target_list << '\n'
    << "goal = " << (goal ? goal->to_string() : "none") << '\n'
    << "subsample = " << (subsample ? "true" : "false") << '\n'
    << "seed = " << seed << '\n'
    << "out = " << out << '\n'
    << "hidden = " << join_ints(dqn.hidden) << '\n'
    << "learning_rate = " << detail::format_double(dqn.learning_rate) << '\n'
    << "target_update_period = " << dqn.target_update_period << '\n'
    << "epsilon = " << detail::format_double(dqn.epsilon) << '\n'
    << "gamma = " << detail::format_double(dqn.gamma) << '\n'
    << "batch_size = " << dqn.batch_size << '\n'
    << "buffer_capacity = " << dqn.buffer_capacity << '\n'
    << "warmup = " << dqn.warmup << '\n'
    << "training_steps = " << dqn.training_steps << '\n'
    << "double_dqn = " << (dqn.double_dqn ? "true" : "false") << '\n'
    << "loss = " << (dqn.loss == LossKind::Huber ? "huber" : "squared") << '\n'
    << "huber_delta = " << detail::format_double(dqn.huber_delta) << '\n'
    << "max_steps = " << max_steps << '\n'
    << "lambda = " << detail::format_double(lambda) << '\n'
    << "per_step_reward = " << (per_step_reward ? "true" : "false") << '\n'
    << "alpha = " << detail::format_double(alpha) << '\n'
    << "alpha_final = " << (alpha_final ? detail::format_double(*alpha_final) : "none") << '\n'
    << "episodes = " << episodes << '\n'
    << "rollouts = " << rollouts << '\n'
    << "eval_seed = " << eval_seed << '\n'
    << "jobs = " << jobs << '\n';
  return o.str();
}

ExperimentSpec ExperimentSpec::from_text(const std::string& text) {
  std::vector<std::pair<std::string, std::string>> kv;
  std::istringstream in(text);
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    if (detail::trim(line).empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw DataError("expected key = value", line_no);
    kv.emplace_back(detail::trim(line.substr(0, eq)), detail::trim(line.substr(eq + 1)));
  }
  int id = 3;
  for (const auto& [k, v] : kv)
    if (k == "experiment") id = static_cast<int>(parse_long(v));
  ExperimentSpec spec = defaults(id);
  for (const auto& [k, v] : kv) spec.set(k, v);
  return spec;
}

ExperimentSpec ExperimentSpec::from_file(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open '" + path.string() + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  return from_text(ss.str());
}

RewardMode ExperimentSpec::reward_mode() const {
  switch (experiment) {
    case 1: return reward_mode::NegEnergy{};
    case 2: return reward_mode::SquaredEnergy{};
    case 3: return reward_mode::NegCubeEnergy{};
    default: return reward_mode::GoalDot{*goal};
  }
}

// ---------------------------------------------------------------------------

TrainArtifacts train(const ExperimentSpec& spec, const EnergyTable& table) {
  spec.validate();
  TrainArtifacts art;
  switch (spec.experiment) {
    case 1: {
      auto tuples = build_offline_tuples(table, spec.primary_target());
      const auto penalty = build_penalty_tuples(table, spec.primary_target(), spec.lambda);
      tuples.insert(tuples.end(), penalty.begin(), penalty.end());
      const FullSpaceEnv env(table, spec.primary_target(), spec.lambda, spec.max_steps,
                             spec.per_step_reward);
      DQNConfig cfg = spec.dqn;
      cfg.seed = spec.seed;
      auto res = dqn_train_offline(tuples, StateEncoder(env.vocabulary()), env.action_count(), cfg);
      art.net = std::move(res.net);
      art.log = std::move(res.log);
      break;
    }
    case 2: {
      const GridWorldEnv env(table, spec.primary_target(), spec.max_steps, !spec.per_step_reward);
      const QLearningConfig cfg{spec.alpha, spec.alpha_final, spec.dqn.gamma, spec.dqn.epsilon, spec.seed};
      art.qtable = q_learning_train(GridWorldTabular(env), cfg, spec.episodes, &art.log);
      break;
    }
    default: {
      const SubgraphEnv env(table, spec.targets, EpisodeConfig{spec.max_steps, spec.dqn.gamma, spec.seed});
      DQNConfig cfg = spec.dqn;
      cfg.seed = spec.seed;
      auto res = dqn_train_live(env, cfg, spec.reward_mode(), spec.goal, spec.subsample);
      art.net = std::move(res.net);
      art.log = std::move(res.log);
      break;
    }
  }
  return art;
}

EvalResult evaluate(const ExperimentSpec& spec, const EnergyTable& table,
                    const TrainArtifacts& artifacts) {
  spec.validate();
  EvalResult out;
  switch (spec.experiment) {
    case 1: {
      const FullSpaceEnv env(table, spec.primary_target(), spec.lambda, spec.max_steps,
                             spec.per_step_reward);
      const GreedyPolicy policy(*artifacts.net, StateEncoder(env.vocabulary()));
      out.traces = run_rollouts(std::cref(policy), env, spec.rollouts, spec.eval_seed, spec.jobs);
      out.report = summarize(out.traces, table);
      if (const auto opt = table.argmin(spec.primary_target()))
        out.report.success_rate = success_rate(out.report, *opt);
      break;
    }
    case 2: {
      const GridWorldEnv env(table, spec.primary_target(), spec.max_steps, !spec.per_step_reward);
      out.traces = run_rollouts(*artifacts.qtable, env, spec.rollouts, spec.eval_seed);
      out.report = summarize(out.traces, table);
      break;
    }
    default: {
      const SubgraphEnv env(table, spec.targets, EpisodeConfig{spec.max_steps, spec.dqn.gamma, spec.eval_seed});
      const GreedyPolicy policy(*artifacts.net, StateEncoder(env.vocabulary(), spec.goal));
      out.traces = run_rollouts(std::cref(policy), env, spec.reward_mode(), spec.rollouts,
                                spec.eval_seed, spec.jobs);
      out.report = summarize(out.traces, table, spec.goal);
      break;
    }
  }
  return out;
}

namespace {

void write_file(const fs::path& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write '" + path.string() + "'");
  out << content;
}

}  // namespace

void save_run(const ExperimentSpec& spec, const TrainArtifacts& artifacts) {
  const fs::path dir(spec.out);
  fs::create_directories(dir);
  write_file(dir / run_files::kSpec, spec.to_text());
  std::ostringstream model;
  if (artifacts.qtable) {
    artifacts.qtable->write_csv(model);
    write_file(dir / run_files::kQTable, model.str());
  } else {
    artifacts.net->write_checkpoint(model);
    write_file(dir / run_files::kCheckpoint, model.str());
  }
  std::ostringstream log;
  artifacts.log.write_csv(log);
  write_file(dir / run_files::kTrainingLog, log.str());
}

TrainArtifacts load_artifacts(const ExperimentSpec& spec, const fs::path& dir) {
  TrainArtifacts art;
  if (spec.experiment == 2) {
    std::ifstream in(dir / run_files::kQTable);
    if (!in) throw DataError("missing " + (dir / run_files::kQTable).string());
    art.qtable = QTable::read_csv(in, GridWorldEnv::action_count());
  } else {
    std::ifstream in(dir / run_files::kCheckpoint);
    if (!in) throw DataError("missing " + (dir / run_files::kCheckpoint).string());
    art.net = nn::DenseNet::read_checkpoint(in);
  }
  return art;
}

void save_eval(const fs::path& dir, const ExperimentSpec& spec, const EnergyTable& table,
               const EvalResult& result) {
  fs::create_directories(dir);
  write_file(dir / run_files::kReportJson, result.report.to_json() + "\n");
  std::ostringstream traces;
  write_traces_csv(traces, result.traces);
  write_file(dir / run_files::kTraces, traces.str());

  std::ostringstream text;
  text << "Experiment (" << spec.experiment << "), " << result.report.n_rollouts
       << " greedy roll-outs, mean length " << result.report.mean_length() << "\n\n";
  text << format_energy_table({{"Exp (" + std::to_string(spec.experiment) + ")", result.report}});
  text << "\nDelta (eV):";
  for (Adsorbate a : kAdsorbates)
    if (const auto& s = result.report.per_adsorbate[static_cast<std::size_t>(a)])
      text << ' ' << to_string(a) << '=' << s->objective_delta;
  text << '\n';
  if (result.report.success_rate) text << "Success rate: " << *result.report.success_rate << '\n';
  text << "\nMost frequent terminal states:\n";
  for (const auto& r : top_terminal_states(result.report, table, spec.primary_target(), 10)) {
    text << "  " << r.composition.key() << "  x" << r.count;
    if (r.energy) text << "  " << to_string(spec.primary_target()) << " " << *r.energy << " eV";
    text << '\n';
  }
  write_file(dir / run_files::kReportText, text.str());
}

std::vector<SweepRow> lambda_sweep(const ExperimentSpec& spec, const EnergyTable& table,
                                   const std::vector<double>& lambdas) {
  if (spec.experiment != 1) throw DomainError("lambda sweeps apply to experiment 1");
  if (lambdas.empty()) throw DomainError("lambda list is empty");
  std::vector<SweepRow> rows;
  for (double lambda : lambdas) {
    ExperimentSpec s = spec;
    s.lambda = lambda;
    const auto art = train(s, table);
    const auto res = evaluate(s, table, art);
    rows.push_back({lambda, res.report.success_rate.value_or(0.0), res.report.mean_length(),
                    res.report.n_rollouts});
  }
  return rows;
}

void write_sweep_csv(std::ostream& out, const std::vector<SweepRow>& rows) {
  out << "lambda,success_rate,mean_episode_length,n_rollouts\n";
  for (const auto& r : rows)
    out << detail::format_double(r.lambda) << ',' << detail::format_double(r.success_rate) << ','
        << detail::format_double(r.mean_episode_length) << ',' << r.n_rollouts << '\n';
}

std::string resolve_data_path(const std::string& explicit_path) {
  if (!explicit_path.empty()) return explicit_path;
  if (const char* dir = std::getenv("ADSORBRL_DATA_DIR"))
    return (fs::path(dir) / "adsorption_energies.csv").string();
  throw DomainError("no dataset given: pass --data or set ADSORBRL_DATA_DIR");
}

}  // namespace adsorbrl
