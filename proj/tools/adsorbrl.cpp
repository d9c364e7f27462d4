// adsorbrl: ingest adsorption-energy data, train and evaluate the five
// experiment configurations, sweep the reward-shaping penalty, and report.
//
// Exit codes: 0 success, 1 usage, 2 data error, 3 training divergence.

#include <CLI11.hpp>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#if defined(__GLIBC__)
#include <malloc.h>
#endif

#include "adsorbrl/dataset.hpp"
#include "adsorbrl/error.hpp"
#include "adsorbrl/experiment.hpp"

namespace fs = std::filesystem;
using namespace adsorbrl;

namespace {

enum ExitCode { kOk = 0, kUsage = 1, kData = 2, kDiverged = 3 };

struct CommonOptions {
  int experiment = 0;
  std::string config;
  std::string data;
  std::optional<std::uint64_t> seed;
  std::string out;
  std::optional<std::size_t> rollouts;
  std::string goal;
  bool subsample = false;
  std::optional<unsigned> jobs;
  std::vector<std::string> overrides;
};

void add_spec_options(CLI::App* cmd, CommonOptions& o) {
  cmd->add_option("--experiment", o.experiment, "Experiment id (1-5)")->check(CLI::Range(1, 5));
  cmd->add_option("--config", o.config, "key = value configuration file");
  cmd->add_option("--data", o.data, "Raw CSV export or serialized energy table");
  cmd->add_option("--seed", o.seed, "Random seed");
  cmd->add_option("--out", o.out, "Output directory");
  cmd->add_option("--rollouts", o.rollouts, "Number of evaluation roll-outs");
  cmd->add_option("--goal", o.goal, "Six comma-separated +1/-1 entries");
  cmd->add_flag("--subsample", o.subsample, "Objective sub-sampling (experiments 4/5)");
  cmd->add_option("--jobs", o.jobs, "Parallel evaluation workers");
  cmd->add_option("--set", o.overrides, "Override a configuration key (key=value)");
}

/// Config file first, then --experiment defaults, then individual flags.
ExperimentSpec resolve_spec(const CommonOptions& o) {
  ExperimentSpec spec;
  if (!o.config.empty()) {
    spec = ExperimentSpec::from_file(o.config);
    if (o.experiment && o.experiment != spec.experiment) {
      std::ostringstream merged;
      merged << spec.to_text() << "experiment = " << o.experiment << '\n';
      spec = ExperimentSpec::from_text(merged.str());
    }
  } else {
    spec = ExperimentSpec::defaults(o.experiment ? o.experiment : 3);
  }
  if (!o.data.empty()) spec.data = o.data;
  if (o.seed) spec.seed = *o.seed;
  if (!o.out.empty()) spec.out = o.out;
  if (o.rollouts) spec.rollouts = *o.rollouts;
  if (!o.goal.empty()) spec.goal = GoalVector::parse(o.goal);
  if (o.subsample) spec.subsample = true;
  if (o.jobs) spec.jobs = *o.jobs;
  for (const auto& kv : o.overrides) {
    const auto eq = kv.find('=');
    if (eq == std::string::npos) throw DomainError("--set expects key=value, got '" + kv + "'");
    spec.set(kv.substr(0, eq), kv.substr(eq + 1));
  }
  spec.data = resolve_data_path(spec.data);
  spec.validate();
  return spec;
}

EnergyTable load_reported(const std::string& path) {
  LoadResult diag;
  EnergyTable table = load_table(path, &diag);
  for (const auto& d : diag.diagnostics) std::cerr << "skipped: " << d << '\n';
  return table;
}

void print_counts(const EnergyTable& table) {
  for (Adsorbate a : kAdsorbates) std::cout << to_string(a) << ": " << table.count(a) << '\n';
  std::cout << "unique compositions: " << table.size() << '\n';
}

int cmd_ingest(const std::string& input, const std::string& out_path) {
  LoadResult raw;
  const EnergyTable table = load_table(resolve_data_path(input), &raw);
  for (const auto& d : raw.diagnostics) std::cerr << "skipped: " << d << '\n';
  const std::size_t accepted = raw.records.empty() ? table.records().size() : raw.records.size();
  std::cout << "records: " << accepted << " accepted, " << raw.rejected()
            << " rejected (" << raw.rejected_too_many_elements << " with more than 3 elements, "
            << raw.rejected_unknown_element << " with unknown elements)\n";
  print_counts(table);
  if (!out_path.empty()) {
    if (fs::path(out_path).has_parent_path()) fs::create_directories(fs::path(out_path).parent_path());
    std::ofstream out(out_path, std::ios::binary);
    if (!out) throw DataError("cannot write '" + out_path + "'");
    table.write_csv(out);
  }
  return kOk;
}

int cmd_train(const CommonOptions& o) {
  const ExperimentSpec spec = resolve_spec(o);
  const EnergyTable table = load_reported(spec.data);
  const TrainArtifacts art = train(spec, table);
  save_run(spec, art);
  std::cout << "trained experiment " << spec.experiment << " -> " << spec.out << '\n';
  return kOk;
}

int cmd_eval(const CommonOptions& o, const std::string& run_dir) {
  CommonOptions opts = o;
  const fs::path dir = run_dir.empty() ? fs::path(o.out) : fs::path(run_dir);
  if (dir.empty()) throw DomainError("eval needs --run (or --out) pointing at a trained run");
  if (opts.config.empty()) opts.config = (dir / run_files::kSpec).string();
  if (opts.out.empty()) opts.out = dir.string();
  const ExperimentSpec spec = resolve_spec(opts);
  const EnergyTable table = load_reported(spec.data);
  const TrainArtifacts art = load_artifacts(spec, dir);
  const EvalResult res = evaluate(spec, table, art);
  save_eval(spec.out, spec, table, res);
  std::ifstream text(fs::path(spec.out) / run_files::kReportText);
  std::cout << text.rdbuf();
  return kOk;
}

int cmd_sweep(const CommonOptions& o, const std::vector<double>& lambdas) {
  CommonOptions opts = o;
  if (!opts.experiment && opts.config.empty()) opts.experiment = 1;
  const ExperimentSpec spec = resolve_spec(opts);
  const EnergyTable table = load_reported(spec.data);
  const auto rows = lambda_sweep(spec, table, lambdas);
  fs::create_directories(spec.out);
  std::ofstream out(fs::path(spec.out) / "sweep.csv", std::ios::binary);
  write_sweep_csv(out, rows);
  write_sweep_csv(std::cout, rows);
  return kOk;
}

int cmd_report(const std::vector<std::string>& runs) {
  std::vector<std::pair<std::string, RolloutReport>> rows;
  for (const auto& run : runs) {
    const fs::path dir(run);
    std::ifstream in(dir / run_files::kReportJson);
    if (!in) throw DataError("missing " + (dir / run_files::kReportJson).string());
    std::stringstream ss;
    ss << in.rdbuf();
    std::string label = dir.filename().string();
    if (fs::exists(dir / run_files::kSpec)) {
      const auto spec = ExperimentSpec::from_file(dir / run_files::kSpec);
      label = "Exp (" + std::to_string(spec.experiment) + ")";
    }
    rows.emplace_back(label, RolloutReport::from_json(ss.str()));
  }
  std::cout << format_energy_table(rows);
  std::cout << "\nDelta (eV, positive = toward objective):\n";
  for (const auto& [label, rep] : rows) {
    std::cout << "  " << label << ':';
    for (Adsorbate a : kAdsorbates)
      if (const auto& s = rep.per_adsorbate[static_cast<std::size_t>(a)])
        std::cout << ' ' << to_string(a) << '=' << s->objective_delta;
    std::cout << "  (mean length " << rep.mean_length() << ")\n";
  }
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
#if defined(__GLIBC__)
  // Training allocates many short-lived 256 KB matrices; keep them off mmap.
  mallopt(M_MMAP_THRESHOLD, 16 << 20);
  mallopt(M_TRIM_THRESHOLD, 32 << 20);
#endif
  CLI::App app{"Reinforcement-learning search over catalyst compositions"};
  app.require_subcommand(1);

  std::string ingest_in, ingest_out;
  auto* ingest = app.add_subcommand("ingest", "Reduce a raw export to a per-composition energy table");
  ingest->add_option("--data", ingest_in, "Raw CSV export (default: $ADSORBRL_DATA_DIR)");
  ingest->add_option("--out", ingest_out, "Where to write the serialized table");

  CommonOptions train_opts;
  auto* train_cmd = app.add_subcommand("train", "Train one experiment configuration");
  add_spec_options(train_cmd, train_opts);

  CommonOptions eval_opts;
  std::string eval_run;
  auto* eval_cmd = app.add_subcommand("eval", "Greedy roll-outs of a trained run");
  add_spec_options(eval_cmd, eval_opts);
  eval_cmd->add_option("--run", eval_run, "Run directory written by train");

  CommonOptions sweep_opts;
  std::vector<double> lambdas{10, 50, 100, 200};
  auto* sweep_cmd = app.add_subcommand("sweep", "Success rate of experiment 1 per penalty value");
  add_spec_options(sweep_cmd, sweep_opts);
  sweep_cmd->add_option("--lambda-list", lambdas, "Penalty values")->delimiter(',');

  std::vector<std::string> report_runs;
  auto* report_cmd = app.add_subcommand("report", "Tabulate evaluated runs side by side");
  report_cmd->add_option("runs", report_runs, "Run directories containing report.json")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? kOk : kUsage;
  }

  try {
    if (*ingest) return cmd_ingest(ingest_in, ingest_out);
    if (*train_cmd) return cmd_train(train_opts);
    if (*eval_cmd) return cmd_eval(eval_opts, eval_run);
    if (*sweep_cmd) return cmd_sweep(sweep_opts, lambdas);
    if (*report_cmd) return cmd_report(report_runs);
  } catch (const DataError& e) {
    std::cerr << "data error: " << e.what() << '\n';
    return kData;
  } catch (const TrainingError& e) {
    std::cerr << "training diverged: " << e.what() << '\n';
    return kDiverged;
  } catch (const DomainError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kUsage;
  } catch (const std::filesystem::filesystem_error& e) {
    std::cerr << "data error: " << e.what() << '\n';
    return kData;
  }
  return kUsage;
}
