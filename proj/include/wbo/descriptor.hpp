#pragma once

// JSON descriptors exchanged with the command-line tool.
//
//   {"kind": "rayleigh"}
//   {"kind": "rician", "kappa": 0.9}
//   {"kind": "nakagami", "m": 2}
//   {"kind": "mimo_white", "n_t": 2, "n_r": 2}
//   {"kind": "mimo_correlated", "n_t": 2, "n_r": 2, "psi": M, "sigma": M}
//
// Matrices M are row-major nested arrays whose entries are [re, im] pairs
// (a bare number is read as a real entry).

#include <wbo/covariance.hpp>
#include <wbo/errors.hpp>
#include <wbo/feedback.hpp>
#include <wbo/models.hpp>
#include <wbo/montecarlo.hpp>

#include <json.hpp>

#include <string>
#include <vector>

namespace wbo {

using Json = nlohmann::json;

namespace detail {

inline const Json& require(const Json& obj, const std::string& key, const std::string& path) {
  if (!obj.is_object()) throw ParseError(path, "expected an object");
  auto it = obj.find(key);
  if (it == obj.end()) throw ParseError(path + "." + key, "missing field");
  return *it;
}

inline double get_number(const Json& obj, const std::string& key, const std::string& path) {
  const Json& v = require(obj, key, path);
  if (!v.is_number()) throw ParseError(path + "." + key, "expected a number");
  return v.get<double>();
}

inline long long get_integer(const Json& obj, const std::string& key, const std::string& path) {
  const Json& v = require(obj, key, path);
  if (!v.is_number_integer()) throw ParseError(path + "." + key, "expected an integer");
  return v.get<long long>();
}

inline std::string get_string(const Json& obj, const std::string& key, const std::string& path) {
  const Json& v = require(obj, key, path);
  if (!v.is_string()) throw ParseError(path + "." + key, "expected a string");
  return v.get<std::string>();
}

template <class F>
auto rethrow_as_parse(const std::string& path, F&& f) -> decltype(f()) {
  try {
    return f();
  } catch (const ParseError&) {
    throw;
  } catch (const InvalidArgument& e) {
    throw ParseError(path, e.what());
  }
}

}  // namespace detail

inline CMatrix matrix_from_json(const Json& j, const std::string& path) {
  if (!j.is_array() || j.empty()) throw ParseError(path, "expected a non-empty array of rows");
  const auto rows = j.size();
  const auto cols = j[0].is_array() ? j[0].size() : 0;
  if (cols == 0) throw ParseError(path + "[0]", "expected a non-empty row");
  CMatrix m(rows, cols);
  for (std::size_t r = 0; r < rows; ++r) {
    const std::string rpath = path + "[" + std::to_string(r) + "]";
    if (!j[r].is_array() || j[r].size() != cols) {
      throw ParseError(rpath, "expected a row of " + std::to_string(cols) + " entries");
    }
    for (std::size_t c = 0; c < cols; ++c) {
      const Json& e = j[r][c];
      const std::string epath = rpath + "[" + std::to_string(c) + "]";
      if (e.is_number()) {
        m(r, c) = Complex(e.get<double>(), 0.0);
      } else if (e.is_array() && e.size() == 2 && e[0].is_number() && e[1].is_number()) {
        m(r, c) = Complex(e[0].get<double>(), e[1].get<double>());
      } else {
        throw ParseError(epath, "expected [re, im] pair");
      }
    }
  }
  return m;
}

inline Json matrix_to_json(const CMatrix& m) {
  Json rows = Json::array();
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    Json row = Json::array();
    for (Eigen::Index c = 0; c < m.cols(); ++c) row.push_back({m(r, c).real(), m(r, c).imag()});
    rows.push_back(std::move(row));
  }
  return rows;
}

inline FadingModel model_from_json(const Json& j, const std::string& path = "model") {
  const std::string kind = detail::get_string(j, "kind", path);
  return detail::rethrow_as_parse(path, [&]() -> FadingModel {
    if (kind == "rayleigh") return FadingModel::rayleigh();
    if (kind == "rician") return FadingModel::rician(detail::get_number(j, "kappa", path));
    if (kind == "nakagami") return FadingModel::nakagami(detail::get_number(j, "m", path));
    if (kind != "mimo_white" && kind != "mimo_correlated") {
      throw ParseError(path + ".kind", "unknown model kind '" + kind + "'");
    }
    const int n_t = static_cast<int>(detail::get_integer(j, "n_t", path));
    const int n_r = static_cast<int>(detail::get_integer(j, "n_r", path));
    if (kind == "mimo_white") return FadingModel::mimo_white(n_t, n_r);
    CMatrix psi = matrix_from_json(detail::require(j, "psi", path), path + ".psi");
    CMatrix sigma = j.contains("sigma") ? matrix_from_json(j["sigma"], path + ".sigma")
                                        : CMatrix(CMatrix::Identity(n_t, n_t) / static_cast<double>(n_t));
    return FadingModel::mimo_correlated(CovarianceSpec(std::move(sigma), std::move(psi), n_t, n_r));
  });
}

inline Json model_to_json(const FadingModel& model) {
  Json j;
  j["kind"] = model.name();
  if (const auto* r = std::get_if<Rician>(&model.kind())) j["kappa"] = r->kappa;
  if (const auto* n = std::get_if<Nakagami>(&model.kind())) j["m"] = n->m;
  if (!model.is_scalar()) {
    j["n_t"] = model.n_t();
    j["n_r"] = model.n_r();
  }
  if (const auto* c = std::get_if<MimoCorrelated>(&model.kind())) {
    j["psi"] = matrix_to_json(c->cov.psi());
    j["sigma"] = matrix_to_json(c->cov.sigma());
  }
  return j;
}

struct PsiDescriptor {
  CMatrix psi;
  int n_t = 1;
  int n_r = 1;
};

/// {"n_t": 2, "n_r": 2, "psi": M}; a mimo_correlated model descriptor is also accepted.
inline PsiDescriptor psi_from_json(const Json& j, const std::string& path = "psi_descriptor") {
  PsiDescriptor d;
  d.n_t = static_cast<int>(detail::get_integer(j, "n_t", path));
  d.n_r = static_cast<int>(detail::get_integer(j, "n_r", path));
  if (d.n_t < 1 || d.n_r < 1) throw ParseError(path, "n_t and n_r must be >= 1");
  d.psi = matrix_from_json(detail::require(j, "psi", path), path + ".psi");
  if (d.psi.rows() != d.n_t * d.n_r || d.psi.cols() != d.n_t * d.n_r) {
    throw ParseError(path + ".psi", "expected a (n_t*n_r) x (n_t*n_r) matrix");
  }
  detail::rethrow_as_parse(path + ".psi", [&] {
    CovarianceSpec::validate_psi(d.psi);
    return 0;
  });
  return d;
}

inline Json psi_to_json(const PsiDescriptor& d) {
  return Json{{"n_t", d.n_t}, {"n_r", d.n_r}, {"psi", matrix_to_json(d.psi)}};
}

inline ProtocolParams protocol_from_json(const Json& j, const std::string& path = "protocol") {
  const double tau = detail::get_number(j, "tau", path);
  const double g0 = j.contains("g0") ? detail::get_number(j, "g0", path) : 0.0;
  return detail::rethrow_as_parse(path, [&] { return ProtocolParams(tau, g0); });
}

inline const char* mode_name(RateMode m) { return m == RateMode::ExactRate ? "exact" : "linearized"; }
inline const char* sampler_name(SamplerKind s) { return s == SamplerKind::Tilted ? "tilted" : "plain"; }

inline RateMode parse_mode(const std::string& s, const std::string& path = "mode") {
  if (s == "exact") return RateMode::ExactRate;
  if (s == "linearized") return RateMode::Linearized;
  throw ParseError(path, "expected 'exact' or 'linearized'");
}

inline SamplerKind parse_sampler(const std::string& s, const std::string& path = "sampler") {
  if (s == "plain") return SamplerKind::Plain;
  if (s == "tilted") return SamplerKind::Tilted;
  throw ParseError(path, "expected 'plain' or 'tilted'");
}

/// {"model": {...} | "protocol": {"tau":..,"g0":..}, "rho", "eta", "k_grid",
///  "trials", "mode", "sampler", "seed", "min_outage"}. Only the channel and
///  eta are required.
inline SimConfig sim_config_from_json(const Json& j, const std::string& path = "config") {
  if (!j.is_object()) throw ParseError(path, "expected an object");
  SimConfig c;
  if (j.contains("model") == j.contains("protocol")) {
    throw ParseError(path, "exactly one of 'model' or 'protocol' is required");
  }
  if (j.contains("model")) {
    c.channel = model_from_json(j["model"], path + ".model");
  } else {
    c.channel = protocol_from_json(j["protocol"], path + ".protocol");
  }
  c.eta = detail::get_number(j, "eta", path);
  if (j.contains("rho")) c.rho = detail::get_number(j, "rho", path);
  if (j.contains("k_grid")) {
    const Json& g = j["k_grid"];
    if (!g.is_array()) throw ParseError(path + ".k_grid", "expected an array of integers");
    c.k_grid.clear();
    for (std::size_t i = 0; i < g.size(); ++i) {
      if (!g[i].is_number_integer()) {
        throw ParseError(path + ".k_grid[" + std::to_string(i) + "]", "expected an integer");
      }
      c.k_grid.push_back(g[i].get<int>());
    }
  }
  if (j.contains("trials")) c.trials = static_cast<std::size_t>(detail::get_integer(j, "trials", path));
  if (j.contains("mode")) c.mode = parse_mode(detail::get_string(j, "mode", path), path + ".mode");
  if (j.contains("sampler")) {
    c.sampler = parse_sampler(detail::get_string(j, "sampler", path), path + ".sampler");
  }
  if (j.contains("seed")) c.seed = static_cast<std::uint64_t>(detail::get_integer(j, "seed", path));
  if (j.contains("min_outage")) c.min_outage = detail::get_number(j, "min_outage", path);
  return c;
}

inline Json sim_config_to_json(const SimConfig& c) {
  Json j;
  if (const auto* p = std::get_if<ProtocolParams>(&c.channel)) {
    j["protocol"] = Json{{"tau", p->tau}, {"g0", p->g0}};
  } else {
    j["model"] = model_to_json(std::get<FadingModel>(c.channel));
  }
  j["rho"] = c.rho;
  j["eta"] = c.eta;
  j["k_grid"] = c.k_grid;
  j["trials"] = c.trials;
  j["mode"] = mode_name(c.mode);
  j["sampler"] = sampler_name(c.sampler);
  j["seed"] = c.seed;
  j["min_outage"] = c.min_outage;
  return j;
}

}  // namespace wbo
