#pragma once

// Spatially correlated MIMO: exponent for a given input covariance and the
// covariance-shaping program
//
//   max_Sigma E(eta; Sigma)  s.t.  eta_bar(Sigma) <= eta, Sigma PSD, tr Sigma = 1.
//
// The program is not concave in Sigma, so it is solved by multistart
// gradient ascent over Sigma = L L^dagger / tr(L L^dagger).

#include <wbo/covariance.hpp>
#include <wbo/errors.hpp>
#include <wbo/exponent.hpp>
#include <wbo/optimize.hpp>
#include <wbo/rng.hpp>

#include <cmath>
#include <cstdint>
#include <limits>
#include <string>
#include <vector>

namespace wbo {

struct CorrelatedExponent {
  ExponentPoint point;
  double eta_bar = 0.0;
};

namespace detail {

inline ExponentPoint modes_exponent(const RVector& modes, double eta) {
  const double mean = modes.sum();
  if (!(mean > 0.0)) throw DomainError(kBelowMinimumEnergy);
  return legendre_nonpositive(
      eta, 1.0 / mean,
      [&](double l) {
        double s = 0.0;
        for (double mu : modes) s -= std::log1p(-l * mu);
        return s;
      },
      [&](double l) {
        double s = 0.0;
        for (double mu : modes) s += mu / (1.0 - l * mu);
        return s;
      });
}

}  // namespace detail

/// sup_{lambda <= 0} { lambda/eta + log det(I - lambda (I (x) Sigma) Psi) }.
inline CorrelatedExponent correlated_exponent(const CovarianceSpec& spec, double eta) {
  return {detail::modes_exponent(spec.modes(), eta), 1.0 / spec.mean_rate_derivative()};
}

/// Smallest eta_bar attainable over trace-1 PSD Sigma: 1 / mu_max(P) with P
/// the receive partial trace of Psi, attained by the rank-1 projector on
/// P's top eigenvector.
inline double min_eta_bar(const CMatrix& psi, int n_t, int n_r) {
  const auto e = psd_eigen(receive_partial_trace(psi, n_t, n_r), "partial trace of psi");
  return 1.0 / e.values.maxCoeff();
}

/// The eta_bar-minimizing (beamforming) input covariance.
inline CMatrix beamforming_covariance(const CMatrix& psi, int n_t, int n_r) {
  const auto e = psd_eigen(receive_partial_trace(psi, n_t, n_r), "partial trace of psi");
  const CVector u = e.vectors.col(e.vectors.cols() - 1);
  return u * u.adjoint();
}

struct ShapingOptions {
  int starts = 16;
  std::uint64_t seed = 0;
  int max_iterations = 5000;
  int stall_iterations = 20;
  double stall_tolerance = 1e-10;
  /// Slope of the linear penalty on the infeasible side (tr(Sigma P) < 1/eta).
  double penalty = 10.0;
};

struct ShapingStart {
  int index = 0;
  std::string kind;  // "white", "beamforming" or "random"
  double initial_objective = 0.0;
  double final_objective = 0.0;
  int iterations = 0;
  bool feasible = false;
  CMatrix sigma;
};

struct ShapingResult {
  CMatrix sigma_opt;
  double exponent = 0.0;
  double eta_bar = 0.0;
  int starts = 0;
  int best_start = 0;
  std::vector<ShapingStart> trace;
};

/// Objective and Sigma-gradient of the shaping program for fixed Psi and eta.
class ShapingObjective {
 public:
  ShapingObjective(const CMatrix& psi, int n_t, int n_r, double eta, double penalty)
      : n_t_(n_t), n_r_(n_r), eta_(eta), penalty_(penalty) {
    CovarianceSpec::validate_psi(psi);
    if (psi.rows() != n_t * n_r) throw InvalidArgument("psi must be (n_t*n_r) x (n_t*n_r)");
    psi_sqrt_ = psd_sqrt(psd_eigen(psi, "psi"));
    partial_ = receive_partial_trace(psi, n_t, n_r);
  }

  struct Evaluation {
    double value = 0.0;
    double exponent = 0.0;
    bool feasible = false;
    CMatrix gradient;  // Hermitian, d value / d Sigma
  };

  Evaluation evaluate(const CMatrix& sigma) const {
    Evaluation out;
    const double mean = (sigma * partial_).trace().real();
    const double target = 1.0 / eta_;
    if (mean < target) {
      // Continuous with the exponent, which vanishes at tr(Sigma P) = 1/eta.
      out.value = -penalty_ * (target - mean);
      out.gradient = penalty_ * partial_;
      return out;
    }
    const CMatrix product = psi_sqrt_ * kron_identity(n_r_, sigma) * psi_sqrt_;
    Eigen::SelfAdjointEigenSolver<CMatrix> solver(0.5 * (product + product.adjoint()));
    RVector modes = solver.eigenvalues().cwiseMax(0.0);
    const ExponentPoint p = detail::modes_exponent(modes, eta_);
    const double lambda = p.lambda_star;
    // Envelope theorem: d/dM log det(I - lambda B M B) = -lambda B (I - lambda B M B)^{-1} B.
    RVector inv(modes.size());
    for (Eigen::Index i = 0; i < modes.size(); ++i) inv(i) = 1.0 / (1.0 - lambda * modes(i));
    const CMatrix& u = solver.eigenvectors();
    const CMatrix grad_m = -lambda * psi_sqrt_ * u * inv.asDiagonal() * u.adjoint() * psi_sqrt_;
    out.value = p.exponent;
    out.exponent = p.exponent;
    out.feasible = true;
    out.gradient = receive_partial_trace(grad_m, n_t_, n_r_);
    return out;
  }

  double value(const CMatrix& sigma) const { return evaluate(sigma).value; }
  double mean_rate_derivative(const CMatrix& sigma) const {
    return (sigma * partial_).trace().real();
  }
  int n_t() const noexcept { return n_t_; }

 private:
  int n_t_;
  int n_r_;
  double eta_;
  double penalty_;
  CMatrix psi_sqrt_;
  CMatrix partial_;
};

namespace detail {

inline CMatrix covariance_from_factor(const CMatrix& l) {
  const CMatrix s = l * l.adjoint();
  return s / s.trace().real();
}

/// Gradient ascent in L with backtracking (halving from 1.0); L is rescaled
/// to tr(L L^dagger) = 1 after every accepted step.
inline ShapingStart ascend(const ShapingObjective& objective, CMatrix l, const ShapingOptions& opt) {
  ShapingStart run;
  l /= std::sqrt((l * l.adjoint()).trace().real());
  CMatrix sigma = covariance_from_factor(l);
  auto eval = objective.evaluate(sigma);
  run.initial_objective = eval.value;
  int stalled = 0;
  int it = 0;
  for (; it < opt.max_iterations && stalled < opt.stall_iterations; ++it) {
    // L normalized so tr(L L^dagger) = 1: grad_L = 2 (G - tr(G Sigma) I) L.
    const Complex shift = (eval.gradient * sigma).trace();
    const CMatrix centered =
        eval.gradient - shift.real() * CMatrix::Identity(objective.n_t(), objective.n_t());
    const CMatrix grad = 2.0 * centered * l;
    const double grad_norm2 = grad.squaredNorm();
    if (!(grad_norm2 > 0.0)) break;

    double step = 1.0;
    bool accepted = false;
    CMatrix l_next;
    ShapingObjective::Evaluation next;
    while (step > 1e-14) {
      l_next = l + step * grad;
      l_next /= std::sqrt((l_next * l_next.adjoint()).trace().real());
      next = objective.evaluate(covariance_from_factor(l_next));
      if (next.value > eval.value) {
        accepted = true;
        break;
      }
      step *= 0.5;
    }
    if (!accepted) break;
    const double improvement = next.value - eval.value;
    stalled = improvement < opt.stall_tolerance ? stalled + 1 : 0;
    l = std::move(l_next);
    sigma = covariance_from_factor(l);
    eval = std::move(next);
  }
  run.iterations = it;
  run.final_objective = eval.value;
  run.feasible = eval.feasible;
  run.sigma = sigma;
  return run;
}

}  // namespace detail

inline ShapingResult shape_covariance(const CMatrix& psi, int n_t, int n_r, double eta,
                                      const ShapingOptions& opt = {}) {
  if (opt.starts < 2) throw InvalidArgument("shaping needs at least 2 starts (white + beamforming)");
  if (!(eta > 0.0)) throw InvalidArgument("eta must be positive");
  ShapingObjective objective(psi, n_t, n_r, eta, opt.penalty);
  if (eta < min_eta_bar(psi, n_t, n_r) - kEtaBarTolerance) {
    throw DomainError("no Sigma attains eta_bar <= eta for this Psi");
  }

  std::vector<CMatrix> factors;
  factors.push_back(CMatrix::Identity(n_t, n_t));
  factors.push_back(beamforming_covariance(psi, n_t, n_r));  // u u^dagger is its own factor
  auto gen = stream_engine(opt.seed, {0x5ea9e});
  for (int s = 2; s < opt.starts; ++s) {
    CMatrix l(n_t, n_t);
    for (Eigen::Index i = 0; i < l.size(); ++i) l.data()[i] = standard_complex_normal(gen);
    factors.push_back(std::move(l));
  }

  ShapingResult result;
  result.starts = opt.starts;
  const CMatrix white = CMatrix::Identity(n_t, n_t) / static_cast<double>(n_t);
  double best_value = -std::numeric_limits<double>::infinity();
  double best_distance = std::numeric_limits<double>::infinity();
  for (int s = 0; s < opt.starts; ++s) {
    ShapingStart run = detail::ascend(objective, factors[s], opt);
    run.index = s;
    run.kind = s == 0 ? "white" : (s == 1 ? "beamforming" : "random");
    if (run.feasible) {
      const double distance = (run.sigma - white).norm();
      const bool better = run.final_objective > best_value + 1e-12;
      const bool tie = std::abs(run.final_objective - best_value) <= 1e-12 && distance < best_distance;
      if (better || tie) {
        best_value = run.final_objective;
        best_distance = distance;
        result.best_start = s;
      }
    }
    result.trace.push_back(std::move(run));
  }
  if (!std::isfinite(best_value)) throw DomainError("no Sigma attains eta_bar <= eta for this Psi");

  result.sigma_opt = result.trace[result.best_start].sigma;
  result.exponent = best_value;
  result.eta_bar = 1.0 / objective.mean_rate_derivative(result.sigma_opt);
  return result;
}

}  // namespace wbo
