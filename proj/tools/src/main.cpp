#include <CLI11.hpp>
#include <optional>
#include <string>

#include "stablelad/version.hpp"
#include "stablelad_cli/commands.hpp"

int main(int argc, char** argv) {
  using namespace stablelad::cli;

  CLI::App app{"stablelad: simulation and LAD inference for locally stable SDEs"};
  app.set_version_flag("--version", std::string("stablelad ") + stablelad::kVersion);
  app.require_subcommand(1);

  CommonOptions opt;
  std::string path_csv;
  std::optional<double> rho_flag;
  std::optional<std::string> regressor_flag;
  std::optional<double> h_flag;
  double index_rho = 0.25;

  auto add_common = [&](CLI::App* sub, bool needs_config) {
    auto* c = sub->add_option("--config", opt.config_path, "config file (key = value sections)");
    if (needs_config) c->required()->check(CLI::ExistingFile);
    sub->add_option("--out", opt.out_dir, "output directory")->capture_default_str();
    sub->add_option("--seed", opt.seed, "base RNG seed")->capture_default_str();
    sub->add_option("--override", opt.overrides, "config override key=value (repeatable)");
    sub->add_flag("--quiet", opt.quiet, "suppress console output");
  };

  auto* simulate = app.add_subcommand("simulate", "simulate a sample path, write path.csv");
  add_common(simulate, true);

  auto* estimate = app.add_subcommand("estimate", "LAD drift + index/scale/covariance estimation");
  add_common(estimate, true);
  estimate->add_option("path", path_csv, "observation path CSV")->required()->check(
      CLI::ExistingFile);
  estimate->add_option("--rho", rho_flag, "power-variation exponent override");
  estimate->add_option("--regressor", regressor_flag,
                       "regressor override (euler | improved_euler | exact_linear | exact_bernoulli)");

  auto* index = app.add_subcommand("index", "stability-index estimation only");
  add_common(index, false);
  index->add_option("path", path_csv, "observation path CSV")->required()->check(
      CLI::ExistingFile);
  index->add_option("--rho", index_rho, "power-variation exponent")->capture_default_str();
  index->add_option("--step", h_flag, "step size h for single-column files");

  auto* mc = app.add_subcommand("mc", "run a Monte Carlo campaign, write records/summary CSVs");
  add_common(mc, true);

  auto* selftest = app.add_subcommand("selftest", "closed-form identity checks");
  selftest->add_flag("--quiet", opt.quiet, "suppress console output");

  CLI11_PARSE(app, argc, argv);

  if (simulate->parsed()) {
    return run_guarded("simulate", [&] { return cmd_simulate(opt); }, opt.quiet);
  }
  if (estimate->parsed()) {
    return run_guarded(
        "estimate", [&] { return cmd_estimate(opt, path_csv, rho_flag, regressor_flag); },
        opt.quiet);
  }
  if (index->parsed()) {
    return run_guarded("index", [&] { return cmd_index(opt, path_csv, index_rho, h_flag); },
                       opt.quiet);
  }
  if (mc->parsed()) {
    return run_guarded("mc", [&] { return cmd_mc(opt); }, opt.quiet);
  }
  if (selftest->parsed()) {
    return run_guarded("selftest", [&] { return cmd_selftest(opt.quiet); }, opt.quiet);
  }
  return kExitValidation;
}
