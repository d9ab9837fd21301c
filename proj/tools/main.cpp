#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>

#include <CLI11.hpp>
#include <json.hpp>

#include "bayesdes/ace.hpp"
#include "bayesdes/assess.hpp"
#include "bayesdes/errors.hpp"
#include "bayesdes/scenarios.hpp"
#include "config.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace bayesdes;

namespace {

constexpr int kConfigFailure = 1;
constexpr int kRuntimeFailure = 2;

void write_json(const fs::path& path, const json& j) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw Error("cannot open " + path.string() + " for writing");
  os << j.dump(2) << '\n';
}

json phase_json(const PhaseCounts& c) {
  return {{"proposals", c.proposals},
          {"accepted", c.accepted},
          {"acceptance_rate", c.acceptance_rate()},
          {"emulator_failures", c.emulator_failures}};
}

int cmd_run(const std::string& config_path, const fs::path& out, int threads, bool timing) {
  Scenario s = cli::load_problem_file(config_path);
  fs::create_directories(out);
  const std::vector<Design> starts = s.starts(s.settings.seed);
  const PaceResult res = pace(s.utility, starts, s.space, s.settings, threads, s.n_assess);
  const AceResult& best = res.repetitions[static_cast<std::size_t>(res.best_index)];

  write_design_csv((out / "design_phase1.csv").string(), best.phase1_design);
  write_design_csv((out / "design_phase2.csv").string(), best.phase2_design);
  write_design_csv((out / "best_design.csv").string(), res.best_design);
  write_trace_csv((out / "trace.csv").string(), best);

  json reps = json::array();
  for (std::size_t r = 0; r < res.repetitions.size(); ++r) {
    json rep = {{"index", r}};
    if (res.failed(static_cast<Index>(r))) {
      rep["error"] = res.errors[r];
    } else {
      const AceResult& a = res.repetitions[r];
      if (res.repetitions.size() > 1) write_trace_csv((out / ("trace_r" + std::to_string(r) + ".csv")).string(), a);
      rep["assessed_mean"] = res.assessed[r].mean;
      rep["assessed_sd"] = res.assessed[r].sd;
      rep["phase1"] = phase_json(a.phase1_counts);
      rep["phase2"] = phase_json(a.phase2_counts);
      if (timing) rep["elapsed_seconds"] = {{"phase1", a.phase1_seconds}, {"phase2", a.phase2_seconds}};
    }
    reps.push_back(rep);
  }
  const json summary = {
      {"schema", 1},
      {"problem", s.name},
      {"criterion", s.criterion},
      {"n", s.space.runs()},
      {"k", s.space.factors()},
      {"C", s.repetitions},
      {"seed", s.settings.seed},
      {"best_index", res.best_index},
      {"repetitions", reps},
      {"nonconverged_fits", s.utility.stats()->nonconverged.load()},
  };
  write_json(out / "summary.json", summary);

  std::cout << "Best repetition " << res.best_index + 1 << " of " << res.repetitions.size()
            << "; assessed expected utility " << res.assessed[static_cast<std::size_t>(res.best_index)].mean
            << '\n';
  for (std::size_t r = 0; r < res.repetitions.size(); ++r)
    if (res.failed(static_cast<Index>(r)))
      std::cerr << "repetition " << r + 1 << " failed: " << res.errors[r] << '\n';
  return 0;
}

int cmd_assess(const std::string& config_path, const std::string& d1_path, const std::string& d2_path,
               int n_assess, const fs::path& out) {
  Scenario s = cli::load_problem_file(config_path);
  const Design d1 = read_design_csv(d1_path);
  const Design d2 = read_design_csv(d2_path);
  for (const Design* d : {&d1, &d2})
    if (d->factors() != s.space.factors())
      throw cli::ConfigError("d1/d2: designs need " + std::to_string(s.space.factors()) + " columns");
  if (n_assess <= 0) n_assess = s.n_assess;
  Rng rng = substream(s.settings.seed, {0xa55e55, 0xc11});
  const AssessmentReport rep =
      assess(s.utility, d1, d2, s.settings.B_compare, n_assess, rng, s.criterion, s.efficiency, s.parameters);
  std::cout << format_report(rep);

  fs::create_directories(out);
  json j = {{"criterion", rep.criterion},
            {"design1_mean", rep.design1.mean},
            {"design1_sd", rep.design1.sd},
            {"design2_mean", rep.design2.mean},
            {"design2_sd", rep.design2.sd},
            {"relative_efficiency", rep.relative_efficiency ? json(*rep.relative_efficiency) : json(nullptr)}};
  write_json(out / "assess.json", j);
  std::ofstream draws(out / "assess_draws.csv", std::ios::binary);
  if (!draws) throw Error("cannot open assess_draws.csv for writing");
  draws << "design,batch,expected_utility\n";
  const Assessment* designs[] = {&rep.design1, &rep.design2};
  for (int k = 0; k < 2; ++k)
    for (std::size_t b = 0; b < designs[k]->values.size(); ++b)
      draws << "d" << k + 1 << ',' << b + 1 << ',' << format_double(designs[k]->values[b]) << '\n';
  return 0;
}

int cmd_scenarios() {
  for (const auto& [name, description] : scenario_registry()) std::cout << name << "  " << description << '\n';
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Bayesian optimal design by approximate coordinate exchange"};
  app.require_subcommand(1);

  std::string config, d1, d2, out = ".";
  int threads = 1;
  int n_assess = 0;
  bool timing = false;

  auto* run = app.add_subcommand("run", "Run ACE (repeated C times) on a problem config");
  run->add_option("--config", config, "Problem config (JSON)")->required();
  run->add_option("--out", out, "Output directory")->capture_default_str();
  run->add_option("--threads", threads, "Repetitions run in parallel")->check(CLI::PositiveNumber)->capture_default_str();
  run->add_flag("--record-timing", timing, "Include elapsed seconds in summary.json");

  auto* as = app.add_subcommand("assess", "Compare the expected utility of two designs");
  as->add_option("--config", config, "Problem config (JSON)")->required();
  as->add_option("--d1", d1, "First design (CSV)")->required();
  as->add_option("--d2", d2, "Second design (CSV)")->required();
  as->add_option("--n-assess", n_assess, "Estimates per design (stochastic utilities)");
  as->add_option("--out", out, "Output directory")->capture_default_str();

  auto* sc = app.add_subcommand("scenarios", "List the built-in scenarios");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kConfigFailure;
  }

  try {
    if (run->parsed()) return cmd_run(config, out, threads, timing);
    if (as->parsed()) return cmd_assess(config, d1, d2, n_assess, out);
    if (sc->parsed()) return cmd_scenarios();
  } catch (const cli::ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kConfigFailure;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kRuntimeFailure;
  }
  return kConfigFailure;
}
