#pragma once

// Fading models as distributions of the limiting rate derivative
// A = dJ/dgamma at gamma = 0 (|h|^2 for scalar coherent channels,
// tr(H Sigma H^dagger) for MIMO). Scalar models are normalized to E|h|^2 = 1.

#include <wbo/covariance.hpp>
#include <wbo/errors.hpp>
#include <wbo/rng.hpp>

#include <cmath>
#include <cstdint>
#include <limits>
#include <random>
#include <string>
#include <type_traits>
#include <variant>
#include <vector>

namespace wbo {

struct Rayleigh {};

/// h ~ CN(kappa, 1 - kappa^2).
struct Rician {
  double kappa;
};

/// |h|^2 ~ Gamma(m, 1/m).
struct Nakagami {
  double m;
};

/// i.i.d. CN(0, 1) entries, Sigma = I / n_t.
struct MimoWhite {
  int n_t;
  int n_r;
};

struct MimoCorrelated {
  CovarianceSpec cov;
};

class FadingModel {
 public:
  using Kind = std::variant<Rayleigh, Rician, Nakagami, MimoWhite, MimoCorrelated>;

  static FadingModel rayleigh() { return FadingModel(Rayleigh{}); }

  static FadingModel rician(double kappa) {
    if (!(kappa > 0.0 && kappa < 1.0)) {
      throw InvalidArgument("rician kappa must lie in (0, 1)");
    }
    return FadingModel(Rician{kappa});
  }

  static FadingModel nakagami(double m) {
    if (!(m >= 0.5) || !std::isfinite(m)) throw InvalidArgument("nakagami m must be >= 1/2");
    return FadingModel(Nakagami{m});
  }

  static FadingModel mimo_white(int n_t, int n_r) {
    if (n_t < 1 || n_r < 1) throw InvalidArgument("n_t and n_r must be >= 1");
    return FadingModel(MimoWhite{n_t, n_r});
  }

  static FadingModel mimo_correlated(CovarianceSpec cov) {
    return FadingModel(MimoCorrelated{std::move(cov)});
  }

  const Kind& kind() const noexcept { return kind_; }

  template <class T>
  bool is() const noexcept {
    return std::holds_alternative<T>(kind_);
  }

  bool is_scalar() const noexcept { return !is<MimoWhite>() && !is<MimoCorrelated>(); }
  bool has_closed_form() const noexcept { return !is<MimoCorrelated>(); }
  bool supports_tilting() const noexcept {
    return is<Rayleigh>() || is<Nakagami>() || is<MimoWhite>();
  }

  int n_t() const noexcept {
    if (auto* w = std::get_if<MimoWhite>(&kind_)) return w->n_t;
    if (auto* c = std::get_if<MimoCorrelated>(&kind_)) return c->cov.n_t();
    return 1;
  }
  int n_r() const noexcept {
    if (auto* w = std::get_if<MimoWhite>(&kind_)) return w->n_r;
    if (auto* c = std::get_if<MimoCorrelated>(&kind_)) return c->cov.n_r();
    return 1;
  }

  std::string name() const {
    return std::visit(
        [](const auto& k) -> std::string {
          using T = std::decay_t<decltype(k)>;
          if constexpr (std::is_same_v<T, Rayleigh>) return "rayleigh";
          else if constexpr (std::is_same_v<T, Rician>) return "rician";
          else if constexpr (std::is_same_v<T, Nakagami>) return "nakagami";
          else if constexpr (std::is_same_v<T, MimoWhite>) return "mimo_white";
          else return "mimo_correlated";
        },
        kind_);
  }

  /// Supremum of the MGF domain: Lambda(lambda) is finite iff lambda < bound.
  double mgf_domain_bound() const {
    return std::visit(
        [](const auto& k) -> double {
          using T = std::decay_t<decltype(k)>;
          if constexpr (std::is_same_v<T, Rayleigh>) return 1.0;
          else if constexpr (std::is_same_v<T, Rician>) return 1.0 / (1.0 - k.kappa * k.kappa);
          else if constexpr (std::is_same_v<T, Nakagami>) return k.m;
          else if constexpr (std::is_same_v<T, MimoWhite>) return static_cast<double>(k.n_t);
          else {
            const double mu = k.cov.mu_max();
            return mu > 0.0 ? 1.0 / mu : std::numeric_limits<double>::infinity();
          }
        },
        kind_);
  }

 private:
  explicit FadingModel(Kind k) : kind_(std::move(k)) {}
  Kind kind_;
};

/// E[A]. The wideband minimum energy per nat is its reciprocal.
inline double mean_rate_derivative(const FadingModel& model) {
  return std::visit(
      [](const auto& k) -> double {
        using T = std::decay_t<decltype(k)>;
        if constexpr (std::is_same_v<T, MimoWhite>) return static_cast<double>(k.n_r);
        else if constexpr (std::is_same_v<T, MimoCorrelated>) return k.cov.mean_rate_derivative();
        else return 1.0;
      },
      model.kind());
}

inline double eta_bar(const FadingModel& model) { return 1.0 / mean_rate_derivative(model); }

namespace detail {

inline void check_mgf_domain(const FadingModel& model, double lambda) {
  if (std::isnan(lambda) || lambda >= model.mgf_domain_bound()) {
    throw DomainError("log_mgf: lambda = " + std::to_string(lambda) +
                      " outside the MGF domain of the " + model.name() + " model");
  }
}

}  // namespace detail

/// Lambda(lambda) = log E[exp(lambda A)].
inline double log_mgf(const FadingModel& model, double lambda) {
  detail::check_mgf_domain(model, lambda);
  return std::visit(
      [lambda](const auto& k) -> double {
        using T = std::decay_t<decltype(k)>;
        if constexpr (std::is_same_v<T, Rayleigh>) {
          return -std::log1p(-lambda);
        } else if constexpr (std::is_same_v<T, Rician>) {
          // |h|^2 for h ~ CN(kappa, s): MGF = exp(kappa^2 l / (1 - s l)) / (1 - s l).
          const double k2 = k.kappa * k.kappa;
          const double s = 1.0 - k2;
          return k2 * lambda / (1.0 - s * lambda) - std::log1p(-s * lambda);
        } else if constexpr (std::is_same_v<T, Nakagami>) {
          return -k.m * std::log1p(-lambda / k.m);
        } else if constexpr (std::is_same_v<T, MimoWhite>) {
          return -static_cast<double>(k.n_t * k.n_r) * std::log1p(-lambda / k.n_t);
        } else {
          double sum = 0.0;
          for (double mu : k.cov.modes()) sum -= std::log1p(-lambda * mu);
          return sum;
        }
      },
      model.kind());
}

/// Lambda'(lambda), increasing in lambda.
inline double log_mgf_derivative(const FadingModel& model, double lambda) {
  detail::check_mgf_domain(model, lambda);
  return std::visit(
      [lambda](const auto& k) -> double {
        using T = std::decay_t<decltype(k)>;
        if constexpr (std::is_same_v<T, Rayleigh>) {
          return 1.0 / (1.0 - lambda);
        } else if constexpr (std::is_same_v<T, Rician>) {
          const double k2 = k.kappa * k.kappa;
          const double u = 1.0 - (1.0 - k2) * lambda;
          return k2 / (u * u) + (1.0 - k2) / u;
        } else if constexpr (std::is_same_v<T, Nakagami>) {
          return 1.0 / (1.0 - lambda / k.m);
        } else if constexpr (std::is_same_v<T, MimoWhite>) {
          return static_cast<double>(k.n_r) / (1.0 - lambda / k.n_t);
        } else {
          double sum = 0.0;
          for (double mu : k.cov.modes()) sum += mu / (1.0 - lambda * mu);
          return sum;
        }
      },
      model.kind());
}

/// Channel state of one parallel channel: |h|^2 for scalar models, H (n_r x n_t) for MIMO.
using ChannelState = std::variant<double, CMatrix>;

/// Per-draw sampler of channel states. Holds no generator; callers pass one.
class StateSampler {
 public:
  explicit StateSampler(const FadingModel& model) : model_(&model) {}

  template <class URBG>
  ChannelState draw(URBG& gen) const {
    if (model_->is_scalar()) return draw_gain(gen);
    return draw_matrix(gen);
  }

  /// |h|^2 for scalar models.
  template <class URBG>
  double draw_gain(URBG& gen) const {
    return std::visit(
        [&gen](const auto& k) -> double {
          using T = std::decay_t<decltype(k)>;
          if constexpr (std::is_same_v<T, Rayleigh>) {
            return std::exponential_distribution<double>(1.0)(gen);
          } else if constexpr (std::is_same_v<T, Rician>) {
            const double spread = std::sqrt(1.0 - k.kappa * k.kappa);
            const Complex h = Complex(k.kappa, 0.0) + spread * standard_complex_normal(gen);
            return std::norm(h);
          } else if constexpr (std::is_same_v<T, Nakagami>) {
            return std::gamma_distribution<double>(k.m, 1.0 / k.m)(gen);
          } else {
            throw Unsupported("draw_gain: MIMO models have matrix states");
          }
        },
        model_->kind());
  }

  /// H (n_r x n_t) for MIMO models, drawn entrywise; correlated models colour
  /// an i.i.d. vector with Psi^{1/2} and unstack vec(H^dagger).
  template <class URBG>
  CMatrix draw_matrix(URBG& gen) const {
    const int n_t = model_->n_t();
    const int n_r = model_->n_r();
    CMatrix h(n_r, n_t);
    if (model_->is<MimoWhite>()) {
      for (int i = 0; i < n_r; ++i)
        for (int j = 0; j < n_t; ++j) h(i, j) = standard_complex_normal(gen);
      return h;
    }
    const auto* corr = std::get_if<MimoCorrelated>(&model_->kind());
    if (corr == nullptr) throw Unsupported("draw_matrix: scalar models have gain states");
    CVector z(n_t * n_r);
    for (Eigen::Index i = 0; i < z.size(); ++i) z(i) = standard_complex_normal(gen);
    const CVector v = corr->cov.psi_sqrt() * z;
    for (int i = 0; i < n_r; ++i)
      for (int j = 0; j < n_t; ++j) h(i, j) = std::conj(v(i * n_t + j));
    return h;
  }

  template <class URBG>
  double draw_rate_derivative(URBG& gen) const;

  const FadingModel& model() const noexcept { return *model_; }

 private:
  const FadingModel* model_;
};

/// Input covariance used by the MIMO rate: I/n_t for white, Sigma for correlated.
inline CMatrix input_covariance(const FadingModel& model) {
  if (const auto* c = std::get_if<MimoCorrelated>(&model.kind())) return c->cov.sigma();
  const int n_t = model.n_t();
  return CMatrix::Identity(n_t, n_t) / static_cast<double>(n_t);
}

namespace detail {

inline double mimo_trace(const CMatrix& h, const CMatrix& sigma) {
  return (h * sigma * h.adjoint()).trace().real();
}

inline double mimo_log_det(const CMatrix& h, const CMatrix& sigma, double gamma) {
  const CMatrix gram = h * sigma * h.adjoint();
  Eigen::SelfAdjointEigenSolver<CMatrix> solver(0.5 * (gram + gram.adjoint()),
                                                Eigen::EigenvaluesOnly);
  double sum = 0.0;
  for (double mu : solver.eigenvalues()) sum += std::log1p(gamma * std::max(mu, 0.0));
  return sum;
}

}  // namespace detail

/// A = lim J(gamma, s)/gamma for a given state.
inline double rate_derivative(const FadingModel& model, const ChannelState& state) {
  if (const auto* gain = std::get_if<double>(&state)) return *gain;
  const auto& h = std::get<CMatrix>(state);
  if (model.is<MimoWhite>()) return h.squaredNorm() / model.n_t();
  return detail::mimo_trace(h, input_covariance(model));
}

/// J(gamma, s): log(1 + gamma |h|^2), or log det(I + gamma H Sigma H^dagger).
inline double rate(const FadingModel& model, const ChannelState& state, double gamma) {
  if (const auto* gain = std::get_if<double>(&state)) return std::log1p(gamma * *gain);
  const auto& h = std::get<CMatrix>(state);
  if (model.is<MimoWhite>()) {
    const auto n_t = h.cols();
    return detail::mimo_log_det(h, CMatrix::Identity(n_t, n_t), gamma / static_cast<double>(n_t));
  }
  return detail::mimo_log_det(h, input_covariance(model), gamma);
}

template <class URBG>
double StateSampler::draw_rate_derivative(URBG& gen) const {
  if (model_->is_scalar()) return draw_gain(gen);
  return rate_derivative(*model_, draw_matrix(gen));
}

inline std::vector<ChannelState> sample_states(const FadingModel& model, std::size_t n,
                                               std::uint64_t seed) {
  if (n == 0) throw InvalidArgument("sample size must be >= 1");
  auto gen = stream_engine(seed);
  StateSampler sampler(model);
  std::vector<ChannelState> out;
  out.reserve(n);
  for (std::size_t i = 0; i < n; ++i) out.push_back(sampler.draw(gen));
  return out;
}

/// n i.i.d. draws of the rate derivative; deterministic given seed.
inline std::vector<double> sample(const FadingModel& model, std::size_t n, std::uint64_t seed) {
  if (n == 0) throw InvalidArgument("sample size must be >= 1");
  auto gen = stream_engine(seed);
  StateSampler sampler(model);
  std::vector<double> out(n);
  for (auto& a : out) a = sampler.draw_rate_derivative(gen);
  return out;
}

struct TiltedDraw {
  double value;
  double log_weight;  // -lambda * value + Lambda(lambda)
};

/// Draws from p_lambda(a) = exp(lambda a) p(a) / E[exp(lambda A)]. Every
/// supported family is Gamma(shape, scale); tilting maps scale theta to
/// theta / (1 - lambda theta).
class TiltedSampler {
 public:
  TiltedSampler(const FadingModel& model, double lambda) : lambda_(lambda) {
    if (!(lambda < 0.0)) throw InvalidArgument("tilted sampling needs lambda < 0");
    if (!model.supports_tilting()) {
      throw Unsupported("tilting not available for the " + model.name() +
                        " model; use plain sampling");
    }
    double shape = 1.0;
    double scale = 1.0;
    if (const auto* nak = std::get_if<Nakagami>(&model.kind())) {
      shape = nak->m;
      scale = 1.0 / nak->m;
    } else if (const auto* w = std::get_if<MimoWhite>(&model.kind())) {
      shape = static_cast<double>(w->n_t * w->n_r);
      scale = 1.0 / w->n_t;
    }
    dist_ = std::gamma_distribution<double>(shape, scale / (1.0 - lambda * scale));
    log_mgf_ = log_mgf(model, lambda);
  }

  template <class URBG>
  double draw(URBG& gen) {
    return dist_(gen);
  }

  double log_weight(double value) const noexcept { return -lambda_ * value + log_mgf_; }
  double lambda() const noexcept { return lambda_; }
  double log_mgf_value() const noexcept { return log_mgf_; }
  double tilted_mean() const noexcept { return dist_.alpha() * dist_.beta(); }

 private:
  double lambda_;
  double log_mgf_ = 0.0;
  std::gamma_distribution<double> dist_;
};

inline std::vector<TiltedDraw> tilted_sample(const FadingModel& model, double lambda, std::size_t n,
                                             std::uint64_t seed) {
  if (n == 0) throw InvalidArgument("sample size must be >= 1");
  TiltedSampler sampler(model, lambda);
  auto gen = stream_engine(seed);
  std::vector<TiltedDraw> out(n);
  for (auto& d : out) {
    d.value = sampler.draw(gen);
    d.log_weight = sampler.log_weight(d.value);
  }
  return out;
}

}  // namespace wbo
