#pragma once

// Wideband outage exponent E(eta) = sup_{lambda <= 0} { lambda/eta - Lambda(lambda) }
// for eta >= eta_bar = 1/E[A], numerically for any model and in closed form
// for the scalar families and spatially white MIMO.

#include <wbo/errors.hpp>
#include <wbo/models.hpp>
#include <wbo/optimize.hpp>

#include <cmath>
#include <span>
#include <string>
#include <vector>

namespace wbo {

inline constexpr double kEtaBarTolerance = 1e-12;

struct ExponentPoint {
  double eta = 0.0;
  double exponent = 0.0;
  double lambda_star = 0.0;
  bool capped = false;
};

struct ExponentCurve {
  std::string model;
  double eta_bar = 0.0;
  std::vector<ExponentPoint> points;
  /// Requested grid entries below eta_bar, dropped from `points`.
  std::vector<double> dropped;
};

namespace detail {

inline void require_at_least_eta_bar(double eta, double eta_min) {
  if (!(eta > 0.0) || !std::isfinite(eta)) throw InvalidArgument("eta must be positive and finite");
  if (eta < eta_min - kEtaBarTolerance) throw DomainError(kBelowMinimumEnergy);
}

/// Legendre-Fenchel transform over lambda <= 0 for a log-MGF with derivative.
template <class L, class DL>
ExponentPoint legendre_nonpositive(double eta, double eta_min, L&& lambda_fn, DL&& dlambda_fn) {
  require_at_least_eta_bar(eta, eta_min);
  if (eta <= eta_min) return {eta, 0.0, 0.0, false};
  const double inv_eta = 1.0 / eta;
  const auto best = maximize_concave_nonpositive(
      [&](double l) { return l * inv_eta - lambda_fn(l); },
      [&](double l) { return inv_eta - dlambda_fn(l); });
  return {eta, std::max(0.0, best.value), best.argmax, best.capped};
}

}  // namespace detail

inline ExponentPoint exponent_numeric(const FadingModel& model, double eta) {
  return detail::legendre_nonpositive(
      eta, eta_bar(model), [&](double l) { return log_mgf(model, l); },
      [&](double l) { return log_mgf_derivative(model, l); });
}

/// The printed closed forms (Rayleigh, Rician, Nakagami-m, white MIMO).
inline ExponentPoint exponent_closed_form(const FadingModel& model, double eta) {
  if (!model.has_closed_form()) {
    throw Unsupported("no closed form for the " + model.name() + " model; use exponent_numeric");
  }
  detail::require_at_least_eta_bar(eta, eta_bar(model));
  if (eta <= eta_bar(model)) return {eta, 0.0, 0.0, false};

  auto rayleigh_shape = [](double x) { return 1.0 / x - 1.0 + std::log(x); };
  ExponentPoint p{eta, 0.0, 0.0, false};
  if (model.is<Rayleigh>()) {
    p.exponent = rayleigh_shape(eta);
    p.lambda_star = 1.0 - eta;
  } else if (const auto* nak = std::get_if<Nakagami>(&model.kind())) {
    p.exponent = nak->m * rayleigh_shape(eta);
    p.lambda_star = nak->m * (1.0 - eta);
  } else if (const auto* w = std::get_if<MimoWhite>(&model.kind())) {
    const double nt = w->n_t;
    const double nr = w->n_r;
    p.exponent = nt * nr * rayleigh_shape(nr * eta);
    p.lambda_star = nt * (1.0 - nr * eta);
  } else {
    const double k2 = std::get<Rician>(model.kind()).kappa;
    const double kappa2 = k2 * k2;
    const double s = 1.0 - kappa2;
    const double root = std::sqrt(1.0 + 4.0 * kappa2 / (s * s * eta));
    p.exponent = 1.0 / (s * eta) + kappa2 / s - root + std::log(s * eta / 2.0) + std::log1p(root);
    // Stationary point of the transform: 1 - s*lambda = (s*eta/2)(1 + root).
    p.lambda_star = (1.0 - 0.5 * s * eta * (1.0 + root)) / s;
  }
  p.exponent = std::max(0.0, p.exponent);
  return p;
}

/// Batches exponent_numeric over an increasing grid. Entries below eta_bar
/// are dropped and recorded in `dropped`.
inline ExponentCurve exponent_curve(const FadingModel& model, std::span<const double> eta_grid) {
  if (eta_grid.empty()) throw InvalidArgument("eta grid is empty");
  for (std::size_t i = 1; i < eta_grid.size(); ++i) {
    if (!(eta_grid[i] > eta_grid[i - 1])) throw InvalidArgument("eta grid must be strictly increasing");
  }
  ExponentCurve curve{model.name(), eta_bar(model), {}, {}};
  for (double eta : eta_grid) {
    if (eta < curve.eta_bar - kEtaBarTolerance) {
      curve.dropped.push_back(eta);
      continue;
    }
    curve.points.push_back(exponent_numeric(model, eta));
  }
  if (curve.points.empty()) throw DomainError(kBelowMinimumEnergy);
  return curve;
}

}  // namespace wbo
