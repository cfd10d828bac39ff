#include <iostream>

#include <CLI11.hpp>

#include "zfcert/commands.hpp"

namespace {

void add_plant_options(CLI::App* app, zfcert::RunConfig& c) {
  app->add_option("--builtin", c.builtin, "nonmin-phase, lpv-vehicle, quadrotor, quadrotor-two-mode");
  app->add_option("--plant", c.plant_path, "plant JSON file (overrides --builtin)");
  app->add_option("--kp", c.kp, "reference gain kp for quadrotor builtins");
  app->add_option("--kd", c.kd, "reference gain kd for quadrotor builtins");
}

void add_sector_options(CLI::App* app, zfcert::RunConfig& c) {
  app->add_option("--m", c.m, "strong convexity bound");
  app->add_option("--L", c.l, "gradient Lipschitz bound");
}

void add_multiplier_options(CLI::App* app, zfcert::RunConfig& c) {
  app->add_option("--class", c.multiplier, "cc, causal, anticausal, zf");
  app->add_option("--order", c.order, "basis order nu");
  app->add_option("--lambda", c.lambda, "basis pole (negative)");
  app->add_option("--positivity", c.positivity, "published or strict");
  app->add_option("--alpha-max", c.alpha_max, "bisection bracket top (0: default)");
  app->add_option("--grid-tol", c.grid_tol, "bisection grid resolution");
}

void add_sim_options(CLI::App* app, zfcert::RunConfig& c) {
  app->add_option("--dt", c.dt, "RK4 step");
  app->add_option("--horizon", c.horizon, "final time");
  app->add_option("--curvature", c.curvature, "field curvature (0: use L)");
  app->add_option("--target", c.target, "field minimizer, one value per output")->delimiter(',');
  app->add_option("--dim", c.dim, "output dimension (lifts single-output plants)");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Certified convergence rates for gradient-driven vehicles"};
  app.require_subcommand(1);
  zfcert::RunConfig c;

  auto* certify = app.add_subcommand("certify", "certify a decay rate by bisection");
  add_plant_options(certify, c);
  add_sector_options(certify, c);
  add_multiplier_options(certify, c);

  auto* sweep = app.add_subcommand("sweep", "certified rates of every class plus the oracle over a range");
  add_plant_options(sweep, c);
  add_sector_options(sweep, c);
  add_multiplier_options(sweep, c);
  sweep->add_option("--var", c.sweep_var, "L or gain-ratio");
  sweep->add_option("--from", c.sweep_from);
  sweep->add_option("--to", c.sweep_to);
  sweep->add_option("--step", c.sweep_step);
  sweep->add_option("--values", c.sweep_values, "explicit comma-separated points")->delimiter(',');
  sweep->add_option("--jobs", c.jobs, "worker threads (0: all cores)");

  auto* simulate = app.add_subcommand("simulate", "closed-loop trajectory on a quadratic field");
  add_plant_options(simulate, c);
  add_sector_options(simulate, c);
  add_sim_options(simulate, c);
  simulate->add_option("--schedule", c.schedule, "frozen or sine (two-vertex plants)");
  simulate->add_flag("--states", c.with_states, "include plant states in the CSV");

  auto* flocking = app.add_subcommand("flocking", "flock vs single-agent center-of-mass check");
  add_plant_options(flocking, c);
  add_sector_options(flocking, c);
  add_sim_options(flocking, c);
  flocking->add_option("--agents", c.agents);
  flocking->add_option("--graph", c.graph, "ring or complete");
  flocking->add_option("--spring-k", c.spring_k);
  flocking->add_option("--spring-rest", c.spring_rest);
  flocking->add_option("--seed", c.seed);

  auto* oracle = app.add_subcommand("oracle", "worst decay rate over linear gradients in the sector");
  add_plant_options(oracle, c);
  add_sector_options(oracle, c);

  auto* validate = app.add_subcommand("validate-iqc", "randomized check of the IQC inequalities");
  validate->add_option("--samples", c.samples);
  validate->add_option("--seed", c.seed);

  auto* exportp = app.add_subcommand("export-plant", "write a plant as JSON");
  add_plant_options(exportp, c);

  for (auto* s : app.get_subcommands({})) s->add_option("--out", c.out, "output file (default stdout)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? 0 : zfcert::kExitError;
  }
  auto* chosen = app.get_subcommands().front();
  c.command = chosen->get_name();
  if (chosen == flocking) {
    // The nonminimum-phase default destabilizes under consensus coupling.
    if (chosen->count("--builtin") == 0 && chosen->count("--plant") == 0) c.builtin = "quadrotor";
    if (chosen->count("--dim") == 0) c.dim = 2;
  }
  return zfcert::run_command(c, std::cout, std::cerr);
}
