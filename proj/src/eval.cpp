#include "adsorbrl/eval.hpp"

#include <algorithm>
#include <cstdio>
#include <istream>
#include <json.hpp>
#include <ostream>
#include <sstream>
#include <thread>

#include "adsorbrl/error.hpp"
#include "csv.hpp"

namespace adsorbrl {

double RolloutReport::mean_length() const {
  std::size_t n = 0, total = 0;
  for (const auto& [len, count] : trajectory_length_histogram) {
    n += count;
    total += static_cast<std::size_t>(len) * count;
  }
  return n ? static_cast<double>(total) / static_cast<double>(n) : 0.0;
}

RolloutReport summarize(const std::vector<EpisodeTrace>& traces, const EnergyTable& table,
                        const std::optional<GoalVector>& goal) {
  RolloutReport rep;
  rep.n_rollouts = traces.size();
  rep.goal = goal;
  std::array<double, kAdsorbateCount> sum_i{}, sum_f{};
  std::array<std::size_t, kAdsorbateCount> n_i{}, n_f{};
  for (const auto& tr : traces) {
    if (tr.steps.empty()) throw DomainError("episode trace has no steps");
    ++rep.trajectory_length_histogram[tr.length()];
    ++rep.terminal_state_frequencies[tr.terminal()];
    const AdsorbateEnergies* ei = table.energies(tr.initial());
    const AdsorbateEnergies* ef = table.energies(tr.terminal());
    for (std::size_t a = 0; a < kAdsorbateCount; ++a) {
      if (ei && (*ei)[a]) {
        sum_i[a] += *(*ei)[a];
        ++n_i[a];
      }
      if (ef && (*ef)[a]) {
        sum_f[a] += *(*ef)[a];
        ++n_f[a];
      }
    }
  }
  for (std::size_t a = 0; a < kAdsorbateCount; ++a) {
    if (n_i[a] == 0 && n_f[a] == 0) continue;
    AdsorbateStats s;
    s.n_initial = n_i[a];
    s.n_final = n_f[a];
    s.mean_initial = n_i[a] ? sum_i[a] / static_cast<double>(n_i[a]) : 0.0;
    s.mean_final = n_f[a] ? sum_f[a] / static_cast<double>(n_f[a]) : 0.0;
    s.delta = (-s.mean_final) - (-s.mean_initial);
    s.objective_delta = goal ? s.delta * goal->values()[a] : s.delta;
    rep.per_adsorbate[a] = s;
  }
  return rep;
}

namespace {

template <class RunOne>
std::vector<EpisodeTrace> parallel_rollouts(std::size_t n, unsigned jobs, RunOne run_one) {
  std::vector<EpisodeTrace> out(n);
  jobs = std::max(1u, std::min<unsigned>(jobs, static_cast<unsigned>(std::max<std::size_t>(n, 1))));
  if (jobs == 1) {
    for (std::size_t i = 0; i < n; ++i) out[i] = run_one(i);
    return out;
  }
  std::vector<std::thread> workers;
  std::vector<std::exception_ptr> errors(jobs);
  for (unsigned w = 0; w < jobs; ++w) {
    workers.emplace_back([&, w] {
      try {
        for (std::size_t i = w; i < n; i += jobs) out[i] = run_one(i);
      } catch (...) {
        errors[w] = std::current_exception();
      }
    });
  }
  for (auto& t : workers) t.join();
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);
  return out;
}

}  // namespace

std::vector<EpisodeTrace> run_rollouts(const CompositionPolicy& policy, const SubgraphEnv& env,
                                       const RewardMode& mode, std::size_t n, std::uint64_t seed,
                                       unsigned jobs) {
  if (n == 0) throw DomainError("need at least one rollout");
  if (env.states().empty()) throw DomainError("environment has no states");
  return parallel_rollouts(n, jobs, [&](std::size_t i) {
    Rng rng = derive_rng(seed, i);
    EpisodeTrace tr;
    Composition s = env.reset(rng);
    for (int t = 0; t < env.config().max_steps; ++t) {
      const auto a = static_cast<int>(policy(s));
      tr.steps.push_back(env.step(s, a, t, mode, rng));
      if (tr.steps.back().done) break;
      s = tr.steps.back().next_state;
    }
    return tr;
  });
}

std::vector<EpisodeTrace> run_rollouts(const CompositionPolicy& policy, const FullSpaceEnv& env,
                                       std::size_t n, std::uint64_t seed, unsigned jobs) {
  if (n == 0) throw DomainError("need at least one rollout");
  return parallel_rollouts(n, jobs, [&](std::size_t i) {
    Rng rng = derive_rng(seed, i);
    EpisodeTrace tr;
    Composition s = env.reset(rng);
    for (int t = 0; t < env.max_steps(); ++t) {
      tr.steps.push_back(env.step(s, static_cast<int>(policy(s)), t));
      if (tr.steps.back().done) break;
      s = tr.steps.back().next_state;
    }
    return tr;
  });
}

std::vector<EpisodeTrace> run_rollouts(const QTable& q, const GridWorldEnv& env, std::size_t n,
                                       std::uint64_t seed) {
  if (n == 0) throw DomainError("need at least one rollout");
  std::vector<EpisodeTrace> out;
  for (std::size_t i = 0; i < n; ++i) {
    Rng rng = derive_rng(seed, i);
    EpisodeTrace tr;
    AtomicNumber z = env.reset(rng);
    for (int t = 0; t < env.horizon(); ++t) {
      const auto step = env.step(z, static_cast<Direction>(q.greedy_action(z)), t);
      tr.steps.push_back({Composition{step.state}, step.action, step.reward,
                          Composition{step.next_state}, step.done});
      if (step.done) break;
      z = step.next_state;
    }
    out.push_back(std::move(tr));
  }
  return out;
}

double success_rate(const RolloutReport& report, const Composition& optimum) {
  if (report.n_rollouts == 0) return 0.0;
  auto it = report.terminal_state_frequencies.find(optimum);
  const std::size_t hits = it == report.terminal_state_frequencies.end() ? 0 : it->second;
  return static_cast<double>(hits) / static_cast<double>(report.n_rollouts);
}

std::vector<RankedState> top_terminal_states(const RolloutReport& report, const EnergyTable& table,
                                             Adsorbate target, std::size_t k) {
  if (k == 0) throw DomainError("k must be at least 1");
  std::vector<RankedState> all;
  for (const auto& [c, count] : report.terminal_state_frequencies)
    all.push_back({c, count, table.energy(c, target)});
  std::sort(all.begin(), all.end(), [](const RankedState& a, const RankedState& b) {
    if (a.count != b.count) return a.count > b.count;
    if (a.energy.has_value() != b.energy.has_value()) return a.energy.has_value();
    if (a.energy && *a.energy != *b.energy) return *a.energy < *b.energy;
    return a.composition.key() < b.composition.key();
  });
  if (all.size() > k) all.erase(all.begin() + static_cast<std::ptrdiff_t>(k), all.end());
  return all;
}

// ---------------------------------------------------------------------------
// Serialization

std::string RolloutReport::to_json(const ElementRegistry& reg) const {
  nlohmann::ordered_json j;
  j["n_rollouts"] = n_rollouts;
  j["mean_trajectory_length"] = mean_length();
  if (goal) j["goal"] = goal->values();
  auto& ads = j["adsorbates"];
  ads = nlohmann::ordered_json::object();
  for (Adsorbate a : kAdsorbates) {
    const auto& s = per_adsorbate[static_cast<std::size_t>(a)];
    if (!s) continue;
    ads[std::string(to_string(a))] = {
        {"n_initial", s->n_initial},       {"n_final", s->n_final},
        {"mean_initial_ev", s->mean_initial}, {"mean_final_ev", s->mean_final},
        {"delta_ev", s->delta},             {"objective_delta_ev", s->objective_delta}};
  }
  auto& hist = j["trajectory_length_histogram"];
  hist = nlohmann::ordered_json::object();
  for (const auto& [len, count] : trajectory_length_histogram) hist[std::to_string(len)] = count;
  auto& term = j["terminal_state_frequencies"];
  term = nlohmann::ordered_json::object();
  for (const auto& [c, count] : terminal_state_frequencies) term[c.key(reg)] = count;
  if (success_rate) j["success_rate"] = *success_rate;
  return j.dump(2);
}

RolloutReport RolloutReport::from_json(const std::string& text, const ElementRegistry& reg) {
  RolloutReport rep;
  try {
    const auto j = nlohmann::json::parse(text);
    rep.n_rollouts = j.at("n_rollouts").get<std::size_t>();
    if (j.contains("goal")) rep.goal = GoalVector(j.at("goal").get<std::array<int, kAdsorbateCount>>());
    for (const auto& [name, s] : j.at("adsorbates").items()) {
      const auto a = parse_adsorbate(name);
      if (!a) throw DataError("unknown adsorbate '" + name + "' in report");
      rep.per_adsorbate[static_cast<std::size_t>(*a)] =
          AdsorbateStats{s.at("n_initial").get<std::size_t>(), s.at("n_final").get<std::size_t>(),
                         s.at("mean_initial_ev").get<double>(),  s.at("mean_final_ev").get<double>(),
                         s.at("delta_ev").get<double>(),         s.at("objective_delta_ev").get<double>()};
    }
    for (const auto& [len, count] : j.at("trajectory_length_histogram").items())
      rep.trajectory_length_histogram[std::stoi(len)] = count.get<std::size_t>();
    for (const auto& [key, count] : j.at("terminal_state_frequencies").items())
      rep.terminal_state_frequencies[Composition::from_key(key, reg)] = count.get<std::size_t>();
    if (j.contains("success_rate")) rep.success_rate = j.at("success_rate").get<double>();
  } catch (const nlohmann::json::exception& e) {
    throw DataError(std::string("malformed report: ") + e.what());
  }
  return rep;
}

void write_traces_csv(std::ostream& out, const std::vector<EpisodeTrace>& traces,
                      const ElementRegistry& reg) {
  out << "episode,step,state,action,reward,done,next_state\n";
  for (std::size_t e = 0; e < traces.size(); ++e) {
    for (std::size_t i = 0; i < traces[e].steps.size(); ++i) {
      const auto& t = traces[e].steps[i];
      out << e << ',' << i << ',' << t.state.key(reg) << ',' << t.action << ','
          << detail::format_double(t.reward) << ',' << (t.done ? 1 : 0) << ','
          << t.next_state.key(reg) << '\n';
    }
  }
}

std::vector<EpisodeTrace> read_traces_csv(std::istream& in, const ElementRegistry& reg) {
  std::vector<EpisodeTrace> out;
  std::string line;
  std::size_t line_no = 0;
  bool header = true;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const auto f = detail::split_csv_line(line);
    if (header) {
      if (f.size() != 7 || f[0] != "episode") throw DataError("unexpected trace header", line_no);
      header = false;
      continue;
    }
    if (f.size() != 7) throw DataError("expected 7 fields", line_no);
    const auto e = static_cast<std::size_t>(detail::parse_int(f[0], line_no));
    if (e + 1 > out.size()) out.resize(e + 1);
    try {
      out[e].steps.push_back({Composition::from_key(f[2], reg), detail::parse_int(f[3], line_no),
                              detail::parse_double(f[4], line_no), Composition::from_key(f[6], reg),
                              f[5] == "1"});
    } catch (const DomainError& err) {
      throw DataError(err.what(), line_no);
    }
  }
  return out;
}

std::string format_energy_table(const std::vector<std::pair<std::string, RolloutReport>>& rows) {
  std::ostringstream out;
  char buf[64];
  auto cell = [&](const std::string& s, int width) {
    std::snprintf(buf, sizeof buf, "%*s", width, s.c_str());
    out << buf;
  };
  auto num = [&](double v) {
    std::snprintf(buf, sizeof buf, "%.1f", v);
    return std::string(buf);
  };
  cell("", 24);
  for (Adsorbate a : kAdsorbates) cell(std::to_string(objective_index(a)) + ": *" + std::string(to_string(a)), 10);
  out << '\n';
  if (!rows.empty() && rows.front().second.goal) {
    cell("Objective", 24);
    for (int g : rows.front().second.goal->values()) cell(g > 0 ? "Decrease" : "Increase", 10);
    out << '\n';
  }
  if (!rows.empty()) {
    cell("Initial state", 24);
    for (const auto& s : rows.front().second.per_adsorbate) cell(s && s->n_initial ? num(s->mean_initial) : "-", 10);
    out << '\n';
  }
  for (const auto& [label, rep] : rows) {
    cell(label, 24);
    for (const auto& s : rep.per_adsorbate) cell(s && s->n_final ? num(s->mean_final) : "-", 10);
    out << '\n';
  }
  return out.str();
}

}  // namespace adsorbrl
