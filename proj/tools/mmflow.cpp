#include "mmflow/commands.hpp"

#include <CLI11.hpp>

#include <iostream>

using namespace mmflow;

int main(int argc, char** argv) {
  CLI::App app{"Minimizing-movement multiphase anisotropic curvature flow on voxel grids"};
  app.require_subcommand(1);

  std::string config_path;
  std::string out;
  int threads = 0;
  std::uint64_t seed = 0;
  std::string trace_dir;

  auto add_common = [&](CLI::App* sub, bool config_required) {
    auto* opt = sub->add_option("--config", config_path, "Run configuration (JSON)");
    if (config_required) opt->required();
    sub->add_option("--out", out, "Output directory (overrides the config)");
    sub->add_option("--threads", threads, "Worker threads for parallel lambda runs")->check(CLI::PositiveNumber);
    sub->add_option("--seed", seed, "Seed for randomized audits");
  };
  CLI::App* step = app.add_subcommand("step", "One minimizing-movement step at the first lambda");
  CLI::App* flow = app.add_subcommand("flow", "Flow to the horizon for every configured lambda");
  CLI::App* gmm = app.add_subcommand("gmm", "Flows over the lambda list plus the Cauchy matrix per checkpoint");
  CLI::App* compare = app.add_subcommand("compare", "Paired multiphase and two-phase runs with the inclusion audit");
  CLI::App* diagnose = app.add_subcommand("diagnose", "Checks stored traces");
  CLI::App* verify = app.add_subcommand("verify", "Built-in property suites");
  for (CLI::App* s : {step, flow, gmm, compare, diagnose}) add_common(s, true);
  add_common(verify, false);
  diagnose->add_option("--trace", trace_dir, "Trace directory (defaults to the output directory)");

  CLI11_PARSE(app, argc, argv);

  try {
    CommandOverrides o;
    if (!out.empty()) o.out = out;
    if (threads > 0) o.threads = threads;
    if (seed != 0) o.seed = seed;
    RunConfig cfg;
    if (!config_path.empty()) cfg = load_config(config_path);
    apply_overrides(cfg, o);

    if (*step) return cmd_step(cfg, std::cout);
    if (*flow) return cmd_flow(cfg, std::cout);
    if (*gmm) return cmd_gmm(cfg, std::cout);
    if (*compare) return cmd_compare(cfg, std::cout);
    if (*diagnose) return cmd_diagnose(cfg, trace_dir.empty() ? cfg.out_dir : std::filesystem::path(trace_dir), std::cout);
    if (*verify) return cmd_verify(cfg, std::cout);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitFail;
  }
  return kExitFail;
}
