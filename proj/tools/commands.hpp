#pragma once

// Batch commands of the `wbo` tool. Every command is a pure function of its
// resolved configuration (descriptor contents are embedded, not referenced
// by path), so a manifest holding that configuration reproduces the run.

#include <wbo/descriptor.hpp>
#include <wbo/exponent.hpp>
#include <wbo/feedback.hpp>
#include <wbo/io.hpp>
#include <wbo/mimo.hpp>
#include <wbo/montecarlo.hpp>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

namespace wbo::cli {

namespace fs = std::filesystem;

#ifdef WBO_VERSION
inline constexpr const char* kToolVersion = WBO_VERSION;
#else
inline constexpr const char* kToolVersion = "dev";
#endif

struct EtaGrid {
  double eta_min = 0.1;
  double eta_max = 10.0;
  int points = 201;
  bool linear = false;

  std::vector<double> values() const {
    if (!(eta_min > 0.0) || !(eta_max > eta_min)) {
      throw InvalidArgument("eta grid needs eta_max > eta_min > 0");
    }
    if (points < 2) throw InvalidArgument("eta grid needs at least 2 points");
    std::vector<double> out(static_cast<std::size_t>(points));
    const double n = points - 1;
    for (int i = 0; i < points; ++i) {
      if (linear) {
        out[i] = eta_min + (eta_max - eta_min) * (i / n);
      } else {
        out[i] = eta_min * std::pow(eta_max / eta_min, i / n);
      }
    }
    out.front() = eta_min;
    out.back() = eta_max;
    return out;
  }

  Json to_json() const {
    return Json{{"eta_min", eta_min}, {"eta_max", eta_max}, {"points", points},
                {"spacing", linear ? "linear" : "log"}};
  }
  static EtaGrid from_json(const Json& j) {
    EtaGrid g;
    g.eta_min = j.at("eta_min").get<double>();
    g.eta_max = j.at("eta_max").get<double>();
    g.points = j.at("points").get<int>();
    g.linear = j.at("spacing").get<std::string>() == "linear";
    return g;
  }
};

inline std::string join_row(const std::vector<std::string>& cells) {
  std::string row;
  for (std::size_t i = 0; i < cells.size(); ++i) {
    if (i > 0) row += ',';
    row += cells[i];
  }
  row += '\n';
  return row;
}

inline std::string sibling(const fs::path& out, const std::string& suffix) {
  fs::path p = out;
  p.replace_filename(out.stem().string() + suffix);
  return p.string();
}

// ---------------------------------------------------------------- exponent

struct ExponentConfig {
  Json model;
  EtaGrid grid;
  bool per_bit = false;
  std::string out = "exponent.csv";

  Json to_json() const {
    return Json{{"model", model}, {"grid", grid.to_json()}, {"per_bit", per_bit}, {"out", out}};
  }
  static ExponentConfig from_json(const Json& j) {
    ExponentConfig c;
    c.model = j.at("model");
    c.grid = EtaGrid::from_json(j.at("grid"));
    c.per_bit = j.at("per_bit").get<bool>();
    c.out = j.at("out").get<std::string>();
    return c;
  }
};

inline std::vector<std::string> run_exponent(const ExponentConfig& c, std::ostream& log) {
  const FadingModel model = model_from_json(c.model);
  const auto grid = c.grid.values();
  const ExponentCurve curve = exponent_curve(model, grid);
  if (!curve.dropped.empty()) {
    log << "warning: dropped " << curve.dropped.size() << " grid points below eta_bar = "
        << format_double(curve.eta_bar) << "\n";
  }
  const bool closed = model.has_closed_form();
  std::vector<std::string> header{"eta", "eta_db", "exponent", "lambda_star"};
  if (closed) {
    header.emplace_back("closed_form");
    header.emplace_back("closed_minus_numeric");
  }
  if (c.per_bit) header.emplace_back("eta_bit_db");
  std::string csv = join_row(header);
  for (const auto& p : curve.points) {
    std::vector<std::string> row{format_double(p.eta), format_double(to_db(p.eta)),
                                 format_double(p.exponent), format_double(p.lambda_star)};
    if (closed) {
      const double cf = exponent_closed_form(model, p.eta).exponent;
      row.push_back(format_double(cf));
      row.push_back(format_double(cf - p.exponent));
    }
    if (c.per_bit) row.push_back(format_double(to_db(p.eta) + per_bit_shift_db()));
    csv += join_row(row);
  }
  write_file_atomic(c.out, csv);
  return {c.out};
}

// ---------------------------------------------------------------- feedback

struct FeedbackConfig {
  std::vector<double> tau = {0.25, 0.5, 1.0, 2.0};
  std::vector<double> g0 = {0.0};
  EtaGrid grid;
  bool per_bit = false;
  bool conjecture = false;
  std::vector<double> conjecture_eta = {1.0};
  std::string out = "feedback.csv";

  Json to_json() const {
    return Json{{"tau", tau},         {"g0", g0},
                {"grid", grid.to_json()}, {"per_bit", per_bit},
                {"conjecture", conjecture}, {"conjecture_eta", conjecture_eta},
                {"out", out}};
  }
  static FeedbackConfig from_json(const Json& j) {
    FeedbackConfig c;
    c.tau = j.at("tau").get<std::vector<double>>();
    c.g0 = j.at("g0").get<std::vector<double>>();
    c.grid = EtaGrid::from_json(j.at("grid"));
    c.per_bit = j.at("per_bit").get<bool>();
    c.conjecture = j.at("conjecture").get<bool>();
    c.conjecture_eta = j.at("conjecture_eta").get<std::vector<double>>();
    c.out = j.at("out").get<std::string>();
    return c;
  }
};

/// tau in {0.1 k : k = 1..30} plus 1/eta; g0 in {0, 0.1, ..., 0.9}.
inline std::vector<double> default_conjecture_taus(double eta) {
  std::vector<double> taus;
  for (int k = 1; k <= 30; ++k) taus.push_back(0.1 * k);
  const double target = 1.0 / eta;
  const bool present = std::any_of(taus.begin(), taus.end(),
                                   [&](double t) { return std::abs(t - target) <= 1e-12; });
  if (!present) taus.push_back(target);
  std::sort(taus.begin(), taus.end());
  return taus;
}

inline std::vector<double> default_conjecture_g0s() {
  std::vector<double> g0s;
  for (int k = 0; k <= 9; ++k) g0s.push_back(0.1 * k);
  return g0s;
}

inline Json conjecture_to_json(const ConjectureReport& r, std::span<const double> taus,
                               std::span<const double> g0s) {
  Json table = Json::array();
  for (const auto& cell : r.table) {
    table.push_back(Json{{"tau", cell.params.tau},
                         {"g0", cell.params.g0},
                         {"exponent", cell.exponent ? Json(*cell.exponent) : Json(nullptr)}});
  }
  return Json{{"eta", r.eta},
              {"label", ConjectureReport::kLabel},
              {"best", Json{{"tau", r.best.tau}, {"g0", r.best.g0}}},
              {"exponent", r.best_exponent},
              {"supports_conjecture", r.supports_conjecture},
              {"tau_grid", std::vector<double>(taus.begin(), taus.end())},
              {"g0_grid", std::vector<double>(g0s.begin(), g0s.end())},
              {"table", table}};
}

inline std::vector<std::string> run_feedback(const FeedbackConfig& c, std::ostream& log) {
  if (c.tau.empty() || c.g0.empty()) throw InvalidArgument("--tau and --g0 lists must be non-empty");
  const auto grid = c.grid.values();

  std::vector<std::string> header{"eta", "eta_db", "exponent", "regime", "x_star", "tau", "g0"};
  if (c.per_bit) header.emplace_back("eta_bit_db");
  std::string curves = join_row(header);
  for (double tau : c.tau) {
    for (double g0 : c.g0) {
      const ProtocolParams p(tau, g0);
      const double eta_min = min_energy_per_nat(p);
      std::size_t dropped = 0;
      for (double eta : grid) {
        if (eta < eta_min - kEtaBarTolerance) {
          ++dropped;
          continue;
        }
        const auto fp = g0 == 0.0 ? onoff_exponent(tau, eta) : general_exponent(p, eta);
        std::vector<std::string> row{format_double(eta),
                                     format_double(to_db(eta)),
                                     format_double(fp.exponent),
                                     regime_name(fp.regime),
                                     fp.x_star ? format_double(*fp.x_star) : std::string(),
                                     format_double(tau),
                                     format_double(g0)};
        if (c.per_bit) row.push_back(format_double(to_db(eta) + per_bit_shift_db()));
        curves += join_row(row);
      }
      if (dropped > 0) {
        log << "note: tau=" << format_double(tau) << " g0=" << format_double(g0) << ": " << dropped
            << " grid points below eta_bar = " << format_double(eta_min) << "\n";
      }
    }
  }

  std::vector<std::string> env_header{"eta", "eta_db", "tau_opt", "exponent"};
  if (c.per_bit) env_header.emplace_back("eta_bit_db");
  std::string envelope = join_row(env_header);
  for (double eta : grid) {
    const auto e = onoff_envelope(eta);
    std::vector<std::string> row{format_double(eta), format_double(to_db(eta)),
                                 format_double(e.tau_opt), format_double(e.exponent)};
    if (c.per_bit) row.push_back(format_double(to_db(eta) + per_bit_shift_db()));
    envelope += join_row(row);
  }

  std::vector<std::string> outputs{c.out, sibling(c.out, "_envelope.csv")};
  write_file_atomic(outputs[0], curves);
  write_file_atomic(outputs[1], envelope);

  if (c.conjecture) {
    Json results = Json::array();
    for (double eta : c.conjecture_eta) {
      const auto taus = default_conjecture_taus(eta);
      const auto g0s = default_conjecture_g0s();
      const auto report = conjecture_scan(eta, taus, g0s);
      log << "conjecture at eta=" << format_double(eta) << ": best tau=" << format_double(report.best.tau)
          << " g0=" << format_double(report.best.g0) << " exponent=" << format_double(report.best_exponent)
          << " (" << (report.supports_conjecture ? "" : "no ") << ConjectureReport::kLabel << ")\n";
      results.push_back(conjecture_to_json(report, taus, g0s));
    }
    outputs.push_back(sibling(c.out, "_conjecture.json"));
    write_file_atomic(outputs.back(), Json{{"results", results}}.dump(2) + "\n");
  }
  return outputs;
}

// ---------------------------------------------------------------- simulate

struct SimulateConfig {
  Json sim;  // resolved SimConfig
  std::string out = "simulation";

  Json to_json() const { return Json{{"sim", sim}, {"out", out}}; }
  static SimulateConfig from_json(const Json& j) {
    return {j.at("sim"), j.at("out").get<std::string>()};
  }
};

inline Json optional_number(const std::optional<double>& v) {
  return v ? Json(*v) : Json(nullptr);
}

inline std::vector<std::string> run_simulate(const SimulateConfig& c, std::ostream& log) {
  const SimConfig config = sim_config_from_json(c.sim, "sim");
  const fs::path dir(c.out);
  const std::string csv_path = (dir / "outage.csv").string();
  const std::string fit_path = (dir / "fit.json").string();

  auto write_csv = [&](const SimReport& r) {
    std::string csv = join_row({"K", "outage", "std_err", "log_outage", "flagged"});
    for (const auto& e : r.estimates) {
      csv += join_row({std::to_string(e.k), format_double(e.outage_prob), format_double(e.std_err),
                       format_double(e.log_prob), e.flagged ? "1" : "0"});
    }
    write_file_atomic(csv_path, csv);
  };

  SimReport partial;
  SimReport report;
  try {
    report = run_simulation(config, &partial);
  } catch (const InsufficientData&) {
    write_csv(partial);
    throw;
  }
  write_csv(report);
  const Json summary{{"slope", report.fit->slope},
                     {"intercept", report.fit->intercept},
                     {"r_squared", report.fit->r_squared},
                     {"points", report.fit->points},
                     {"analytical_exponent", optional_number(report.analytical_exponent)},
                     {"ratio", optional_number(report.ratio)},
                     {"oracle_slope", optional_number(report.oracle_slope)}};
  write_file_atomic(fit_path, summary.dump(2) + "\n");
  log << "slope " << format_double(report.fit->slope);
  if (report.ratio) log << ", ratio to analytical exponent " << format_double(*report.ratio);
  log << "\n";
  return {csv_path, fit_path};
}

// ---------------------------------------------------------------- shape

struct ShapeConfig {
  Json psi;
  double eta = 1.0;
  int starts = 16;
  std::uint64_t seed = 1;
  bool verbose = false;
  std::string out = "shape.json";

  Json to_json() const {
    return Json{{"psi", psi},     {"eta", eta},         {"starts", starts},
                {"seed", seed},   {"verbose", verbose}, {"out", out}};
  }
  static ShapeConfig from_json(const Json& j) {
    ShapeConfig c;
    c.psi = j.at("psi");
    c.eta = j.at("eta").get<double>();
    c.starts = j.at("starts").get<int>();
    c.seed = j.at("seed").get<std::uint64_t>();
    c.verbose = j.at("verbose").get<bool>();
    c.out = j.at("out").get<std::string>();
    return c;
  }
};

inline std::vector<std::string> run_shape(const ShapeConfig& c, std::ostream& log) {
  const PsiDescriptor d = psi_from_json(c.psi);
  ShapingOptions opt;
  opt.starts = c.starts;
  opt.seed = c.seed;
  const ShapingResult r = shape_covariance(d.psi, d.n_t, d.n_r, c.eta, opt);
  Json j{{"sigma_opt", matrix_to_json(r.sigma_opt)},
         {"exponent", r.exponent},
         {"eta_bar", r.eta_bar},
         {"eta", c.eta},
         {"starts", r.starts},
         {"best_start", r.best_start},
         {"white_exponent", r.trace[0].initial_objective},
         {"beamforming_exponent", r.trace[1].initial_objective}};
  if (c.verbose) {
    Json trace = Json::array();
    for (const auto& s : r.trace) {
      trace.push_back(Json{{"index", s.index},
                           {"kind", s.kind},
                           {"initial_objective", s.initial_objective},
                           {"final_objective", s.final_objective},
                           {"iterations", s.iterations},
                           {"feasible", s.feasible},
                           {"sigma", matrix_to_json(s.sigma)}});
    }
    j["trace"] = trace;
  }
  write_file_atomic(c.out, j.dump(2) + "\n");
  log << "best exponent " << format_double(r.exponent) << " from start " << r.best_start << " ("
      << r.trace[r.best_start].kind << ")\n";
  return {c.out};
}

// ---------------------------------------------------------------- manifests

inline std::string manifest_path(const std::string& command, const std::string& out) {
  if (command == "simulate") return (fs::path(out) / "manifest.json").string();
  return out + ".manifest.json";
}

struct Manifest {
  std::string command;
  Json config;
};

/// Runs a command from its resolved configuration, writes the manifest and
/// returns the output paths (manifest last).
inline std::vector<std::string> execute(const std::string& command, const Json& config, std::ostream& log) {
  const auto start = std::chrono::steady_clock::now();
  std::vector<std::string> outputs;
  std::string out;
  std::uint64_t seed = 0;
  if (command == "exponent") {
    const auto c = ExponentConfig::from_json(config);
    out = c.out;
    outputs = run_exponent(c, log);
  } else if (command == "feedback") {
    const auto c = FeedbackConfig::from_json(config);
    out = c.out;
    outputs = run_feedback(c, log);
  } else if (command == "simulate") {
    const auto c = SimulateConfig::from_json(config);
    out = c.out;
    seed = sim_config_from_json(c.sim, "sim").seed;
    outputs = run_simulate(c, log);
  } else if (command == "shape") {
    const auto c = ShapeConfig::from_json(config);
    out = c.out;
    seed = c.seed;
    outputs = run_shape(c, log);
  } else {
    throw InvalidArgument("unknown command '" + command + "'");
  }
  const double seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  const Json manifest{{"command", command},      {"config", config},   {"seed", seed},
                      {"tool_version", kToolVersion}, {"outputs", outputs}, {"duration_seconds", seconds}};
  const auto path = manifest_path(command, out);
  write_file_atomic(path, manifest.dump(2) + "\n");
  outputs.push_back(path);
  return outputs;
}

inline Manifest read_manifest(const std::string& path) {
  Json j;
  try {
    j = Json::parse(read_file(path));
  } catch (const Json::parse_error& e) {
    throw ParseError(path, e.what());
  }
  if (!j.contains("command") || !j.contains("config")) {
    throw ParseError(path, "not a manifest (missing command/config)");
  }
  return {j["command"].get<std::string>(), j["config"]};
}

/// Re-executes a manifest, optionally redirecting its output path.
inline std::vector<std::string> replay(const std::string& manifest_file, const std::optional<std::string>& out,
                                       std::ostream& log) {
  Manifest m = read_manifest(manifest_file);
  if (out) m.config["out"] = *out;
  return execute(m.command, m.config, log);
}

}  // namespace wbo::cli
