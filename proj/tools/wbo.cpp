#include "commands.hpp"

#include <CLI11.hpp>

#include <iostream>
#include <optional>
#include <string>
#include <vector>

namespace {

using wbo::Json;

Json load_json(const std::string& path) {
  try {
    return Json::parse(wbo::read_file(path));
  } catch (const Json::parse_error& e) {
    throw wbo::ParseError(path, e.what());
  }
}

void add_grid_options(CLI::App* cmd, wbo::cli::EtaGrid& grid) {
  cmd->add_option("--eta-min", grid.eta_min, "Smallest energy per nat")->capture_default_str();
  cmd->add_option("--eta-max", grid.eta_max, "Largest energy per nat")->capture_default_str();
  cmd->add_option("--points", grid.points, "Grid points (log-spaced)")->capture_default_str();
  cmd->add_flag("--linear", grid.linear, "Linear instead of log spacing");
}

int run(int argc, char** argv) {
  CLI::App app{"Wideband outage exponents: analysis, shaping and simulation"};
  app.set_version_flag("--version", std::string(wbo::cli::kToolVersion));
  app.require_subcommand(1);

  // exponent
  wbo::cli::ExponentConfig exp_cfg;
  exp_cfg.grid.points = 101;
  std::string exp_model;
  auto* exp = app.add_subcommand("exponent", "Exponent curve of a fading model");
  exp->add_option("--model", exp_model, "Model descriptor (JSON)")->required()->check(CLI::ExistingFile);
  add_grid_options(exp, exp_cfg.grid);
  exp->add_flag("--per-bit", exp_cfg.per_bit, "Add an energy-per-bit column (dB)");
  exp->add_option("--out", exp_cfg.out, "Output CSV")->capture_default_str();

  // feedback
  wbo::cli::FeedbackConfig fb_cfg;
  std::string fb_tau, fb_g0, fb_conj_eta;
  auto* fb = app.add_subcommand("feedback", "One-bit feedback exponents, envelope and conjecture scan");
  fb->add_option("--tau", fb_tau, "Comma-separated thresholds (default 0.25,0.5,1,2)");
  fb->add_option("--g0", fb_g0, "Comma-separated power fractions for F=0 (default 0)");
  add_grid_options(fb, fb_cfg.grid);
  fb->add_flag("--per-bit", fb_cfg.per_bit, "Add an energy-per-bit column (dB)");
  fb->add_flag("--conjecture", fb_cfg.conjecture, "Scan (tau, g0) for the best protocol");
  fb->add_option("--conjecture-eta", fb_conj_eta, "Comma-separated eta values for the scan (default 1)");
  fb->add_option("--out", fb_cfg.out, "Output CSV (siblings get _envelope/_conjecture suffixes)")
      ->capture_default_str();

  // simulate
  std::string sim_config, sim_model, sim_mode, sim_sampler, sim_k_grid;
  std::optional<double> sim_tau, sim_g0, sim_eta, sim_rho, sim_min_outage;
  std::optional<long long> sim_trials, sim_seed;
  std::string sim_out = "simulation";
  auto* sim = app.add_subcommand("simulate", "Monte Carlo outage estimates and exponent fit");
  auto* config_opt = sim->add_option("--config", sim_config, "Simulation config (JSON)")->check(CLI::ExistingFile);
  auto* model_opt = sim->add_option("--model", sim_model, "Model descriptor (JSON)")->check(CLI::ExistingFile);
  auto* tau_opt = sim->add_option("--tau", sim_tau, "Feedback threshold (one-bit feedback channel)");
  sim->add_option("--g0", sim_g0, "Power fraction for F=0 (with --tau)")->needs(tau_opt);
  config_opt->excludes(model_opt)->excludes(tau_opt);
  model_opt->excludes(tau_opt);
  sim->add_option("--eta", sim_eta, "Energy per nat");
  sim->add_option("--rho", sim_rho, "Total SNR");
  sim->add_option("--mode", sim_mode, "exact or linearized");
  sim->add_option("--sampler", sim_sampler, "plain or tilted");
  sim->add_option("--trials", sim_trials, "Trials per K");
  sim->add_option("--k-grid", sim_k_grid, "Comma-separated increasing K values");
  sim->add_option("--seed", sim_seed, "Master seed");
  sim->add_option("--min-outage", sim_min_outage, "Stop the sweep below this outage estimate");
  sim->add_option("--out", sim_out, "Output directory")->capture_default_str();

  // shape
  wbo::cli::ShapeConfig shape_cfg;
  std::string shape_psi;
  auto* shape = app.add_subcommand("shape", "Optimize the input covariance for a correlated MIMO channel");
  shape->add_option("--psi", shape_psi, "Channel correlation descriptor (JSON)")->required()->check(CLI::ExistingFile);
  shape->add_option("--eta", shape_cfg.eta, "Energy per nat")->required();
  shape->add_option("--starts", shape_cfg.starts, "Number of starts")->capture_default_str();
  shape->add_option("--seed", shape_cfg.seed, "Seed for random starts")->capture_default_str();
  shape->add_flag("--verbose", shape_cfg.verbose, "Include the per-start trace");
  shape->add_option("--out", shape_cfg.out, "Output JSON")->capture_default_str();

  // replay
  std::string replay_manifest;
  std::optional<std::string> replay_out;
  auto* rep = app.add_subcommand("replay", "Re-run a manifest");
  rep->add_option("--manifest", replay_manifest, "Manifest written by an earlier run")
      ->required()
      ->check(CLI::ExistingFile);
  rep->add_option("--out", replay_out, "Redirect the output path");

  try {
    app.parse(argc, argv);
  } catch (const CLI::Success& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }

  std::vector<std::string> outputs;
  if (*exp) {
    exp_cfg.model = load_json(exp_model);
    wbo::model_from_json(exp_cfg.model);
    outputs = wbo::cli::execute("exponent", exp_cfg.to_json(), std::cerr);
  } else if (*fb) {
    if (!fb_tau.empty()) fb_cfg.tau = wbo::parse_double_list(fb_tau);
    if (!fb_g0.empty()) fb_cfg.g0 = wbo::parse_double_list(fb_g0);
    if (!fb_conj_eta.empty()) fb_cfg.conjecture_eta = wbo::parse_double_list(fb_conj_eta);
    outputs = wbo::cli::execute("feedback", fb_cfg.to_json(), std::cerr);
  } else if (*sim) {
    Json j = sim_config.empty() ? Json::object() : load_json(sim_config);
    if (!sim_model.empty()) j["model"] = load_json(sim_model);
    if (sim_tau) j["protocol"] = Json{{"tau", *sim_tau}, {"g0", sim_g0.value_or(0.0)}};
    if (sim_eta) j["eta"] = *sim_eta;
    if (sim_rho) j["rho"] = *sim_rho;
    if (!sim_mode.empty()) j["mode"] = sim_mode;
    if (!sim_sampler.empty()) j["sampler"] = sim_sampler;
    if (sim_trials) j["trials"] = *sim_trials;
    if (sim_seed) j["seed"] = *sim_seed;
    if (sim_min_outage) j["min_outage"] = *sim_min_outage;
    if (!sim_k_grid.empty()) {
      Json ks = Json::array();
      for (double k : wbo::parse_double_list(sim_k_grid)) {
        if (k != std::floor(k)) throw wbo::ParseError("--k-grid", "expected integers");
        ks.push_back(static_cast<long long>(k));
      }
      j["k_grid"] = ks;
    }
    // Resolve defaults so the manifest records every setting.
    const wbo::SimConfig resolved = wbo::sim_config_from_json(j, sim_config.empty() ? "config" : sim_config);
    resolved.validate();
    outputs = wbo::cli::execute("simulate",
                                wbo::cli::SimulateConfig{wbo::sim_config_to_json(resolved), sim_out}.to_json(),
                                std::cerr);
  } else if (*shape) {
    shape_cfg.psi = wbo::psi_to_json(wbo::psi_from_json(load_json(shape_psi), shape_psi));
    outputs = wbo::cli::execute("shape", shape_cfg.to_json(), std::cerr);
  } else if (*rep) {
    outputs = wbo::cli::replay(replay_manifest, replay_out, std::cerr);
  }
  for (const auto& o : outputs) std::cout << o << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  try {
    return run(argc, argv);
  } catch (const wbo::DomainError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 3;
  } catch (const wbo::InvalidArgument& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const wbo::Unsupported& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const Json::exception& e) {
    std::cerr << "error: malformed configuration: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}
