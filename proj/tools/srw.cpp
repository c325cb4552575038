// Command-line front end: run built-in scenarios or configuration files,
// sweep a parameter, and compare runs.
//
// Exit codes: 0 success, 2 configuration error, 3 solver capacity,
// 4 numerical-quality flag (photon cutoff or positivity violation).

#include <CLI11.hpp>

#include <cstdio>
#include <iostream>
#include <string>

#include "srw/scenario.hpp"

namespace {

constexpr int kExitConfig = 2;
constexpr int kExitCapacity = 3;
constexpr int kExitNumerical = 4;

srw::SolverKind solver_from_flag(const std::string& s) { return srw::parse_solver(s); }

void print_manifest(const srw::cli::RunManifest& m, const srw::cli::RunOptions& opts) {
  std::cout << "run " << m.name << " config_hash=" << m.config_hash << " wall=" << m.wall_seconds << "s\n";
  for (const auto& f : m.files) std::cout << "  wrote " << (opts.out_dir / f).string() << '\n';
  std::cout << "  manifest " << srw::cli::manifest_path(opts.out_dir, m.name).string() << '\n';
  if (!m.summary.empty()) std::cout << "  summary " << m.summary.dump() << '\n';
  if (!m.cutoff_adequate) std::cout << "  WARNING photon cutoff inadequate\n";
  if (!m.quality_ok) std::cout << "  WARNING numerical-quality flag raised\n";
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Collective emission and entanglement of emitters in a lossy cavity"};
  app.set_version_flag("--version", std::string(srw::kVersion));
  app.require_subcommand(1);

  std::string solver, gamma_phi, sweep_gamma;
  int jobs = 1;
  int emitters = 0;
  std::string out_dir = ".";

  auto add_common = [&](CLI::App* sub) {
    sub->add_option("--solver", solver, "exact | cluster | both")->check(CLI::IsMember({"exact", "cluster", "both"}));
    sub->add_option("--jobs", jobs, "worker threads")->check(CLI::PositiveNumber);
    sub->add_option("--out-dir", out_dir, "output directory");
    sub->add_option("--gamma-phi-over-g", gamma_phi, "pure dephasing rate in units of g");
  };

  std::string target;
  auto* run = app.add_subcommand("run", "run a built-in scenario or a JSON configuration file");
  run->add_option("scenario", target, "fig1 | fig2 | fig3 | fig4 | path to config")->required();
  add_common(run);
  run->add_option("--sweep-gamma", sweep_gamma, "fig4 threshold grid start:stop:count");
  run->add_option("--emitters", emitters, "override the emitter number")->check(CLI::PositiveNumber);

  std::string sweep_config, sweep_param, sweep_values;
  auto* sweep = app.add_subcommand("sweep", "re-run a configuration over a range of one parameter");
  sweep->add_option("config", sweep_config, "JSON configuration file")->required();
  sweep->add_option("--param", sweep_param, "parameter key, e.g. gamma_over_g")->required();
  sweep->add_option("--values", sweep_values, "start:stop:count")->required();
  add_common(sweep);

  std::string diff_a, diff_b;
  auto* diff = app.add_subcommand("diff", "compare two runs (manifests or CSV files)");
  diff->add_option("first", diff_a)->required();
  diff->add_option("second", diff_b)->required();

  auto* list = app.add_subcommand("list-scenarios", "list built-in scenarios");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitConfig;
  }

  try {
    srw::cli::RunOptions opts;
    if (!solver.empty()) opts.solver = solver_from_flag(solver);
    opts.jobs = jobs;
    opts.out_dir = out_dir;
    if (!gamma_phi.empty()) {
      std::size_t used = 0;
      double v = 0;
      try {
        v = std::stod(gamma_phi, &used);
      } catch (const std::exception&) {
        used = 0;
      }
      if (used != gamma_phi.size()) throw srw::InvalidParameter("--gamma-phi-over-g must be a number");
      opts.gamma_phi = v;
    }
    if (!sweep_gamma.empty()) opts.sweep_gamma = sweep_gamma;
    if (emitters > 0) opts.emitters = emitters;

    if (*list) {
      for (const auto& s : srw::cli::scenarios()) std::cout << s.name << "  " << s.description << '\n';
      return 0;
    }
    if (*diff) {
      const auto rep = srw::cli::diff_runs(diff_a, diff_b);
      std::cout << srw::cli::format_diff(rep);
      return 0;
    }
    srw::cli::RunManifest m;
    if (*sweep) {
      m = srw::cli::run_sweep(srw::cli::load_config(sweep_config), sweep_param, srw::cli::parse_range(sweep_values),
                              opts);
    } else {
      m = srw::cli::run_scenario(target, opts);
    }
    print_manifest(m, opts);
    return m.exit_code() == 0 ? 0 : kExitNumerical;
  } catch (const srw::InvalidParameter& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const srw::CapacityError& e) {
    std::cerr << "capacity error: " << e.what() << '\n';
    return kExitCapacity;
  } catch (const srw::NumericalError& e) {
    std::cerr << "numerical error: " << e.what() << '\n';
    return kExitNumerical;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
}
