#pragma once

// One-bit channel-state feedback over scalar Rayleigh fading.
//
// Each channel reports F = 1{|h|^2 > tau}. The K0 channels with F = 0 share
// power g0 * rho, the K1 = K - K0 channels with F = 1 share (1 - g0) * rho.
// On-off allocation is the special case g0 = 0.

#include <wbo/errors.hpp>
#include <wbo/exponent.hpp>
#include <wbo/optimize.hpp>

#include <cmath>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace wbo {

struct ProtocolParams {
  double tau = 1.0;
  double g0 = 0.0;

  ProtocolParams() = default;
  ProtocolParams(double tau_, double g0_) : tau(tau_), g0(g0_) { validate(); }

  void validate() const {
    if (!(tau > 0.0) || !std::isfinite(tau)) throw InvalidArgument("tau must be positive");
    if (!(g0 >= 0.0 && g0 <= 1.0)) throw InvalidArgument("g0 must lie in [0, 1]");
  }

  double g1() const noexcept { return 1.0 - g0; }
  /// Pr[F = 0] = 1 - e^{-tau}.
  double p0() const noexcept { return -std::expm1(-tau); }
  /// Pr[F = 1] = e^{-tau}.
  double p1() const noexcept { return std::exp(-tau); }
  /// eta at the threshold rate r_c = (1 - g0) tau rho; +inf when g0 = 1.
  double threshold_eta() const noexcept {
    const double denom = (1.0 - g0) * tau;
    return denom > 0.0 ? 1.0 / denom : std::numeric_limits<double>::infinity();
  }
};

enum class Regime { BelowThreshold, AboveThreshold };

inline const char* regime_name(Regime r) {
  return r == Regime::BelowThreshold ? "below_threshold" : "above_threshold";
}

struct FeedbackExponentPoint {
  double eta = 0.0;
  double exponent = 0.0;
  Regime regime = Regime::BelowThreshold;
  std::optional<double> x_star;
};

/// H_b(x) = -x log x - (1 - x) log(1 - x), with H_b(0) = H_b(1) = 0.
inline double binary_entropy(double x) {
  if (!(x >= 0.0 && x <= 1.0)) throw InvalidArgument("binary_entropy: x outside [0, 1]");
  auto xlogx = [](double t) { return t > 0.0 ? t * std::log(t) : 0.0; };
  return -xlogx(x) - xlogx(1.0 - x);
}

/// [tau + 1 - g0 tau / (1 - e^{-tau})]^{-1}.
inline double min_energy_per_nat(const ProtocolParams& p) {
  p.validate();
  return 1.0 / (p.tau + 1.0 - p.g0 * p.tau / p.p0());
}

/// tau - log(e^tau - 1) = -log(1 - e^{-tau}): the large-eta plateau of on-off
/// allocation and the exponent of its turning point.
inline double onoff_plateau(double tau) { return -std::log(-std::expm1(-tau)); }

/// On-off allocation (g0 = 0) exponent, closed form.
inline FeedbackExponentPoint onoff_exponent(double tau, double eta) {
  const ProtocolParams p(tau, 0.0);
  const double eta_min = 1.0 / (tau + 1.0);
  detail::require_at_least_eta_bar(eta, eta_min);

  if (eta > 1.0 / tau) return {eta, onoff_plateau(tau), Regime::AboveThreshold, std::nullopt};
  if (eta <= eta_min) return {eta, 0.0, Regime::BelowThreshold, p.p0()};

  const double d = 1.0 / eta - tau;  // in [0, 1)
  if (d < 1e-300) {
    // x* -> 1 and (1 - x*) log d -> 0.
    return {eta, onoff_plateau(tau), Regime::BelowThreshold, 1.0};
  }
  const double em1 = std::expm1(tau);
  const double num = em1 * std::exp(d - 1.0);
  const double x = num / (num + d);
  const double one_minus_x = d / (num + d);
  const double value = tau + one_minus_x * (d - 1.0 - std::log(d)) - x * std::log(em1) -
                       (-x * std::log(x) - one_minus_x * std::log(one_minus_x));
  return {eta, std::max(0.0, value), Regime::BelowThreshold, x};
}

struct EnvelopePoint {
  double tau_opt;
  double exponent;
};

/// Upper envelope over tau of the on-off curves: the turning point tau = 1/eta.
inline EnvelopePoint onoff_envelope(double eta) {
  if (!(eta > 0.0) || !std::isfinite(eta)) throw InvalidArgument("eta must be positive");
  const double tau = 1.0 / eta;
  return {tau, onoff_plateau(tau)};
}

namespace detail {

/// E0(eta) = sup_{lambda<=0} { lambda/eta + log(1 - g0 lambda) - log[1 - e^{-(1 - g0 lambda) tau}] }.
inline ConcaveMaximum tilde_e0(const ProtocolParams& p, double eta) {
  const double inv_eta = 1.0 / eta;
  const double g0 = p.g0;
  const double tau = p.tau;
  return maximize_concave_nonpositive(
      [=](double l) {
        const double u = 1.0 - g0 * l;
        return l * inv_eta + std::log(u) - std::log(-std::expm1(-u * tau));
      },
      [=](double l) {
        const double u = 1.0 - g0 * l;
        return inv_eta - g0 / u + g0 * tau / std::expm1(u * tau);
      });
}

/// E(eta, x) = sup_{lambda<=0} { lambda/eta - x log[e^{(1 - g0 lambda/x) tau} - 1]
///   + x log(x - g0 lambda) + (1 - x) log[1 - x - (1 - g0) lambda] + (1 - lambda) tau }.
/// With w = x - g0 lambda, x log(e^{w tau/x} - 1) = w tau + x log(1 - e^{-w tau/x}).
inline ConcaveMaximum tilde_e(const ProtocolParams& p, double eta, double x) {
  const double inv_eta = 1.0 / eta;
  const double g0 = p.g0;
  const double g1 = 1.0 - g0;
  const double tau = p.tau;
  const double y = 1.0 - x;
  return maximize_concave_nonpositive(
      [=](double l) {
        const double w = x - g0 * l;
        const double tail = y > 0.0 ? y * std::log(y - g1 * l) : 0.0;
        return l * inv_eta - w * tau - x * std::log(-std::expm1(-w * tau / x)) + x * std::log(w) +
               tail + (1.0 - l) * tau;
      },
      [=](double l) {
        const double w = x - g0 * l;
        const double tail = y > 0.0 ? y * g1 / (y - g1 * l) : 0.0;
        return inv_eta - g1 * tau + g0 * tau / std::expm1(w * tau / x) - x * g0 / w - tail;
      });
}

}  // namespace detail

inline constexpr double kXGridStep = 1e-3;

/// Two-level allocation exponent:
///   min{ inf_{x in (0,1)} E(eta, x), E0(eta) }   for eta_bar <= eta <= 1/((1 - g0) tau),
///   E0(eta)                                      above the threshold.
inline FeedbackExponentPoint general_exponent(const ProtocolParams& p, double eta) {
  p.validate();
  const double eta_min = min_energy_per_nat(p);
  detail::require_at_least_eta_bar(eta, eta_min);
  if (eta <= eta_min) return {eta, 0.0, Regime::BelowThreshold, p.p0()};
  const double e0 = detail::tilde_e0(p, eta).value;
  if (eta > p.threshold_eta()) return {eta, std::max(0.0, e0), Regime::AboveThreshold, std::nullopt};

  auto inner = [&](double x) { return detail::tilde_e(p, eta, x).value; };
  // Grid first: smoothness of E(eta, .) in x is observed, not proven.
  const int n = static_cast<int>(std::lround(1.0 / kXGridStep));
  int best_i = 1;
  double best = std::numeric_limits<double>::infinity();
  for (int i = 1; i < n; ++i) {
    const double v = inner(i * kXGridStep);
    if (v < best) {
      best = v;
      best_i = i;
    }
  }
  const double lo = std::max((best_i - 1) * kXGridStep, 1e-12);
  const double hi = std::min((best_i + 1) * kXGridStep, 1.0 - 1e-12);
  const auto refined = golden_section_minimize(inner, lo, hi, 1e-12);
  double x_star = best_i * kXGridStep;
  if (refined.value < best) {
    best = refined.value;
    x_star = refined.x;
  }
  if (e0 <= best) return {eta, std::max(0.0, e0), Regime::BelowThreshold, std::nullopt};
  return {eta, std::max(0.0, best), Regime::BelowThreshold, x_star};
}

struct ConjectureCell {
  ProtocolParams params;
  /// Empty when eta is below the protocol's minimum energy per nat.
  std::optional<double> exponent;
};

struct ConjectureReport {
  double eta = 0.0;
  ProtocolParams best;
  double best_exponent = 0.0;
  /// The argmax sits at g0 = 0 and the grid tau nearest to 1/eta.
  bool supports_conjecture = false;
  std::vector<ConjectureCell> table;
  static constexpr const char* kLabel = "numerical support for the conjecture";
};

/// Evaluates general_exponent over tau_grid x g0_grid and reports the argmax.
/// Ties go to the lowest tau, then the lowest g0.
inline ConjectureReport conjecture_scan(double eta, std::span<const double> tau_grid,
                                        std::span<const double> g0_grid) {
  if (tau_grid.empty() || g0_grid.empty()) throw InvalidArgument("conjecture grids must be non-empty");
  if (!(eta > 0.0)) throw InvalidArgument("eta must be positive");
  ConjectureReport report;
  report.eta = eta;
  bool found = false;
  for (double tau : tau_grid) {
    for (double g0 : g0_grid) {
      const ProtocolParams p(tau, g0);
      ConjectureCell cell{p, std::nullopt};
      if (eta >= min_energy_per_nat(p) - kEtaBarTolerance) {
        cell.exponent = general_exponent(p, eta).exponent;
        const double v = *cell.exponent;
        const bool better = !found || v > report.best_exponent;
        const bool tie = found && v == report.best_exponent &&
                         (tau < report.best.tau || (tau == report.best.tau && g0 < report.best.g0));
        if (better || tie) {
          report.best = p;
          report.best_exponent = v;
          found = true;
        }
      }
      report.table.push_back(cell);
    }
  }
  if (!found) throw DomainError(kBelowMinimumEnergy);

  double nearest = tau_grid.front();
  for (double tau : tau_grid) {
    if (std::abs(tau - 1.0 / eta) < std::abs(nearest - 1.0 / eta)) nearest = tau;
  }
  report.supports_conjecture = report.best.g0 == 0.0 && report.best.tau == nearest;
  return report;
}

}  // namespace wbo
