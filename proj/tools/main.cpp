#include <iostream>

#include <CLI11.hpp>

#include "twistdec/run.hpp"

int main(int argc, char** argv) {
  CLI::App app{
      "Finite truncations of isometry tuples: twisted structure checks and "
      "orthogonal decompositions"};

  twistdec::RunConfig cfg;
  app.add_option("--scene", cfg.scene_path, "Scene JSON file")->required();
  app.add_option("--mode", cfg.mode,
                 "check | classify | decompose-vnw | decompose-doubly | "
                 "decompose-twisted | oracle-compare")
      ->capture_default_str();
  app.add_option("--budget", cfg.budgets.orbit,
                 "Orbit and iteration budget (0: derive from the space)")
      ->capture_default_str();
  app.add_option("--samples", cfg.budgets.samples, "Sampled word identity checks")
      ->capture_default_str();
  app.add_option("--tol-rank", cfg.tol.rank_rtol, "Relative rank cutoff")
      ->capture_default_str();
  app.add_option("--tol-residual", cfg.tol.residual, "Verification residual bound")
      ->capture_default_str();
  app.add_option("--seed", cfg.seed, "Sampling seed")->capture_default_str();
  app.add_option("--out", cfg.out_path, "Write the report here instead of stdout");
  app.add_flag("--pretty", cfg.pretty, "Indent the report");
  app.add_option("--jobs", cfg.jobs, "Worker threads for per-subset work")
      ->capture_default_str();
  app.add_option("--compare-D", cfg.compare_cap,
                 "oracle-compare: rebuild graded blocks at this cap");
  app.add_flag("--timing", cfg.timing, "Report real timings (reports stop being "
                                       "byte-reproducible)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e);
    return code == 0 ? 0 : twistdec::kExitConfig;
  }
  if (cfg.budgets.orbit > 0) cfg.budgets.iterations = cfg.budgets.orbit;
  return twistdec::run(cfg, std::cout, std::cerr);
}
