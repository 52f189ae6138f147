#pragma once

// Monte Carlo outage simulation over K parallel channels, with optional
// exponential tilting of the rate-derivative draws, and regression of
// -log(outage) against K.

#include <wbo/errors.hpp>
#include <wbo/exponent.hpp>
#include <wbo/feedback.hpp>
#include <wbo/models.hpp>
#include <wbo/rng.hpp>

#include <boost/math/special_functions/gamma.hpp>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <random>
#include <span>
#include <thread>
#include <variant>
#include <vector>

namespace wbo {

enum class RateMode { ExactRate, Linearized };
enum class SamplerKind { Plain, Tilted };

/// Thrown when too few unflagged estimates remain for a slope fit.
class InsufficientData : public DomainError {
 public:
  InsufficientData()
      : DomainError("insufficient data: fewer than 4 unflagged outage estimates; "
                    "increase trials or use the tilted sampler") {}
};

struct SimConfig {
  std::variant<FadingModel, ProtocolParams> channel = FadingModel::rayleigh();
  double rho = 1.0;
  double eta = 2.0;
  std::vector<int> k_grid = {20, 40, 60, 80, 100, 120, 140, 160};
  std::size_t trials = 100000;
  RateMode mode = RateMode::Linearized;
  SamplerKind sampler = SamplerKind::Plain;
  std::uint64_t seed = 1;
  /// Estimates below this outage are flagged and end the sweep over k_grid.
  double min_outage = 0.0;

  bool is_feedback() const noexcept { return std::holds_alternative<ProtocolParams>(channel); }
  double target_rate() const noexcept { return rho / eta; }

  void validate() const {
    if (!(rho > 0.0) || !std::isfinite(rho)) throw InvalidArgument("rho must be positive");
    if (!(eta > 0.0) || !std::isfinite(eta)) throw InvalidArgument("eta must be positive");
    if (trials < 100) throw InvalidArgument("trials must be >= 100");
    if (k_grid.empty()) throw InvalidArgument("k_grid is empty");
    for (std::size_t i = 0; i < k_grid.size(); ++i) {
      if (k_grid[i] < 1) throw InvalidArgument("k_grid entries must be >= 1");
      if (i > 0 && k_grid[i] <= k_grid[i - 1]) throw InvalidArgument("k_grid must be strictly increasing");
    }
    if (min_outage < 0.0 || min_outage >= 1.0) throw InvalidArgument("min_outage must lie in [0, 1)");
    if (sampler == SamplerKind::Tilted) {
      if (mode != RateMode::Linearized) throw InvalidArgument("tilted sampling requires linearized mode");
      if (is_feedback()) {
        throw Unsupported("tilted sampling is not available for the feedback protocol; use plain sampling");
      }
      const auto& model = std::get<FadingModel>(channel);
      if (!model.supports_tilting()) {
        throw Unsupported("tilting not available for the " + model.name() + " model; use plain sampling");
      }
    }
    if (const auto* p = std::get_if<ProtocolParams>(&channel)) p->validate();
  }
};

struct OutageEstimate {
  int k = 0;
  double outage_prob = 0.0;
  double std_err = 0.0;
  double log_prob = 0.0;
  double n_effective = 0.0;
  std::size_t hits = 0;
  bool flagged = false;
};

/// Total rate of the feedback protocol given the below- and above-threshold
/// gains. Power reserved for an empty class is wasted.
inline double feedback_rate(const ProtocolParams& p, double rho, std::span<const double> below,
                            std::span<const double> above, RateMode mode) {
  auto part = [&](std::span<const double> gains, double share) {
    if (gains.empty()) return 0.0;
    const double gamma = share * rho / static_cast<double>(gains.size());
    double sum = 0.0;
    if (mode == RateMode::Linearized) {
      for (double a : gains) sum += a;
      return gamma * sum;
    }
    for (double a : gains) sum += std::log1p(gamma * a);
    return sum;
  };
  return part(below, p.g0) + part(above, p.g1());
}

namespace detail {

/// One draw of R(K, rho) for the feedback protocol. K0 ~ Binomial(K, p0);
/// below-threshold gains by inverse CDF of the truncated exponential,
/// above-threshold gains as tau + Exp(1).
template <class URBG>
double feedback_rate_draw(const ProtocolParams& p, double rho, int k, RateMode mode, URBG& gen,
                          std::vector<double>& below, std::vector<double>& above) {
  const double p0 = p.p0();
  const int k0 = std::binomial_distribution<int>(k, p0)(gen);
  below.resize(static_cast<std::size_t>(k0));
  above.resize(static_cast<std::size_t>(k - k0));
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  for (auto& a : below) a = -std::log1p(-unif(gen) * p0);
  std::exponential_distribution<double> expo(1.0);
  for (auto& a : above) a = p.tau + expo(gen);
  return feedback_rate(p, rho, below, above, mode);
}

template <class URBG>
double channel_rate_draw(const StateSampler& sampler, double rho, int k, RateMode mode, URBG& gen) {
  const double gamma = rho / static_cast<double>(k);
  const auto& model = sampler.model();
  double sum = 0.0;
  if (model.is_scalar()) {
    for (int i = 0; i < k; ++i) {
      const double a = sampler.draw_gain(gen);
      sum += mode == RateMode::Linearized ? gamma * a : std::log1p(gamma * a);
    }
    return sum;
  }
  for (int i = 0; i < k; ++i) {
    const ChannelState h = sampler.draw_matrix(gen);
    sum += mode == RateMode::Linearized ? gamma * rate_derivative(model, h) : rate(model, h, gamma);
  }
  return sum;
}

inline constexpr std::size_t kBlockSize = 4096;

/// Runs fn(block_index, engine, first, count) over fixed-size trial blocks,
/// each with its own (seed, k, block) stream, on up to hardware_concurrency threads.
template <class Fn>
void for_each_block(std::uint64_t seed, int k, std::size_t trials, Fn&& fn) {
  const std::size_t blocks = (trials + kBlockSize - 1) / kBlockSize;
  auto run = [&](std::size_t b) {
    auto gen = stream_engine(seed, {static_cast<std::uint64_t>(k), b});
    const std::size_t first = b * kBlockSize;
    fn(b, gen, first, std::min(kBlockSize, trials - first));
  };
  const std::size_t workers =
      std::min<std::size_t>(blocks, std::max(1u, std::thread::hardware_concurrency()));
  if (workers <= 1) {
    for (std::size_t b = 0; b < blocks; ++b) run(b);
    return;
  }
  std::vector<std::jthread> pool;
  for (std::size_t w = 0; w < workers; ++w) {
    pool.emplace_back([&, w] {
      for (std::size_t b = w; b < blocks; b += workers) run(b);
    });
  }
}

/// Neumaier-compensated sum.
struct CompensatedSum {
  double sum = 0.0;
  double carry = 0.0;
  void add(double v) {
    const double t = sum + v;
    carry += std::abs(sum) >= std::abs(v) ? (sum - t) + v : (v - t) + sum;
    sum = t;
  }
  double value() const { return sum + carry; }
};

}  // namespace detail

/// `config.trials` draws of R(K, rho). Deterministic in (seed, K).
inline std::vector<double> simulate_rate(const SimConfig& config, int k) {
  config.validate();
  if (k < 1) throw InvalidArgument("K must be >= 1");
  std::vector<double> out(config.trials);
  detail::for_each_block(config.seed, k, config.trials,
                         [&](std::size_t, Engine& gen, std::size_t first, std::size_t count) {
                           std::vector<double> below, above;
                           std::optional<StateSampler> sampler;
                           if (!config.is_feedback()) sampler.emplace(std::get<FadingModel>(config.channel));
                           for (std::size_t i = first; i < first + count; ++i) {
                             out[i] = config.is_feedback()
                                          ? detail::feedback_rate_draw(std::get<ProtocolParams>(config.channel),
                                                                       config.rho, k, config.mode, gen, below, above)
                                          : detail::channel_rate_draw(*sampler, config.rho, k, config.mode, gen);
                           }
                         });
  return out;
}

/// Analytical exponent for the configured channel at config.eta, or empty
/// when eta is below the wideband minimum energy per nat.
inline std::optional<ExponentPoint> analytical_point(const SimConfig& config) {
  if (const auto* p = std::get_if<ProtocolParams>(&config.channel)) {
    if (config.eta < min_energy_per_nat(*p) - kEtaBarTolerance) return std::nullopt;
    const auto fp = p->g0 == 0.0 ? onoff_exponent(p->tau, config.eta) : general_exponent(*p, config.eta);
    return ExponentPoint{config.eta, fp.exponent, 0.0, false};
  }
  const auto& model = std::get<FadingModel>(config.channel);
  if (config.eta < eta_bar(model) - kEtaBarTolerance) return std::nullopt;
  return exponent_numeric(model, config.eta);
}

namespace detail {

struct BlockTally {
  std::size_t hits = 0;
  double weight_sum = 0.0;
  double weight_sq_sum = 0.0;
};

inline OutageEstimate finish_estimate(int k, std::size_t trials, std::span<const BlockTally> tallies,
                                      bool weighted) {
  OutageEstimate e;
  e.k = k;
  CompensatedSum s1, s2;
  for (const auto& t : tallies) {
    e.hits += t.hits;
    s1.add(t.weight_sum);
    s2.add(t.weight_sq_sum);
  }
  const double n = static_cast<double>(trials);
  if (e.hits == 0) {
    // Rule of three: an upper bound, never a point estimate.
    e.outage_prob = weighted ? 0.0 : 3.0 / n;
    e.std_err = weighted ? 0.0 : 3.0 / n;
    e.log_prob = weighted ? -std::numeric_limits<double>::infinity() : std::log(e.outage_prob);
    e.n_effective = 0.0;
    e.flagged = true;
    return e;
  }
  if (!weighted) {
    const double p = static_cast<double>(e.hits) / n;
    e.outage_prob = p;
    e.std_err = std::sqrt(p * (1.0 - p) / n);
    e.n_effective = n;
  } else {
    const double mean = s1.value() / n;
    const double second = s2.value() / n;
    const double var = std::max(0.0, second - mean * mean) * n / (n - 1.0);
    e.outage_prob = mean;
    e.std_err = std::sqrt(var / n);
    e.n_effective = s1.value() * s1.value() / s2.value();
  }
  e.log_prob = std::log(e.outage_prob);
  return e;
}

}  // namespace detail

/// Outage probability Pr[R(K, rho) <= rho/eta] per K in the grid.
///
/// Tilted mode draws each rate derivative from the exponentially tilted law
/// at lambda* (the maximizer of the analytical exponent) and reweights by
/// exp(-lambda* sum A + K Lambda(lambda*)).
inline std::vector<OutageEstimate> estimate_outage(const SimConfig& config) {
  config.validate();
  std::vector<OutageEstimate> out;
  const double target = config.target_rate();

  double lambda = 0.0;
  if (config.sampler == SamplerKind::Tilted) {
    const auto& model = std::get<FadingModel>(config.channel);
    lambda = exponent_numeric(model, config.eta).lambda_star;
  }
  const bool tilted = config.sampler == SamplerKind::Tilted && lambda < 0.0;

  for (int k : config.k_grid) {
    const std::size_t blocks = (config.trials + detail::kBlockSize - 1) / detail::kBlockSize;
    std::vector<detail::BlockTally> tallies(blocks);
    if (tilted) {
      const auto& model = std::get<FadingModel>(config.channel);
      // Outage iff (rho/K) sum A <= rho/eta, i.e. sum A <= K/eta.
      const double threshold = static_cast<double>(k) / config.eta;
      detail::for_each_block(config.seed, k, config.trials,
                             [&](std::size_t b, Engine& gen, std::size_t, std::size_t count) {
                               TiltedSampler sampler(model, lambda);
                               const double k_log_mgf = k * sampler.log_mgf_value();
                               auto& t = tallies[b];
                               detail::CompensatedSum w1, w2;
                               for (std::size_t i = 0; i < count; ++i) {
                                 double sum = 0.0;
                                 for (int j = 0; j < k; ++j) sum += sampler.draw(gen);
                                 if (sum <= threshold) {
                                   const double w = std::exp(-lambda * sum + k_log_mgf);
                                   ++t.hits;
                                   w1.add(w);
                                   w2.add(w * w);
                                 }
                               }
                               t.weight_sum = w1.value();
                               t.weight_sq_sum = w2.value();
                             });
    } else {
      const auto rates = simulate_rate(config, k);
      for (std::size_t b = 0; b < blocks; ++b) {
        const std::size_t first = b * detail::kBlockSize;
        const std::size_t last = std::min(config.trials, first + detail::kBlockSize);
        for (std::size_t i = first; i < last; ++i) {
          if (rates[i] <= target) ++tallies[b].hits;
        }
        tallies[b].weight_sum = static_cast<double>(tallies[b].hits);
        tallies[b].weight_sq_sum = static_cast<double>(tallies[b].hits);
      }
    }
    auto estimate = detail::finish_estimate(k, config.trials, tallies, tilted);
    const bool below_floor = estimate.outage_prob < config.min_outage;
    estimate.flagged = estimate.flagged || below_floor;
    out.push_back(estimate);
    if (below_floor) break;
  }
  return out;
}

struct ExponentFit {
  double slope = 0.0;
  double intercept = 0.0;
  double r_squared = 0.0;
  std::size_t points = 0;
};

namespace detail {

inline ExponentFit weighted_line_fit(std::span<const double> x, std::span<const double> y,
                                     std::span<const double> w) {
  double sw = 0.0, sx = 0.0, sy = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sw += w[i];
    sx += w[i] * x[i];
    sy += w[i] * y[i];
  }
  const double mx = sx / sw;
  const double my = sy / sw;
  double sxx = 0.0, sxy = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxx += w[i] * (x[i] - mx) * (x[i] - mx);
    sxy += w[i] * (x[i] - mx) * (y[i] - my);
    syy += w[i] * (y[i] - my) * (y[i] - my);
  }
  ExponentFit fit;
  fit.slope = sxy / sxx;
  fit.intercept = my - fit.slope * mx;
  double ss_res = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double r = y[i] - (fit.intercept + fit.slope * x[i]);
    ss_res += w[i] * r * r;
  }
  fit.r_squared = syy > 0.0 ? 1.0 - ss_res / syy : 1.0;
  fit.points = x.size();
  return fit;
}

}  // namespace detail

/// Weighted least squares of -log(outage) on K over unflagged estimates,
/// weights 1/var(log estimate) with var(log p) ~ (std_err/p)^2.
inline ExponentFit fit_exponent(std::span<const OutageEstimate> estimates) {
  std::vector<double> x, y, var;
  for (const auto& e : estimates) {
    if (e.flagged || !(e.outage_prob > 0.0)) continue;
    x.push_back(e.k);
    y.push_back(-std::log(e.outage_prob));
    const double rel = e.std_err / e.outage_prob;
    var.push_back(rel * rel);
  }
  if (x.size() < 4) throw InsufficientData();
  const double floor = std::max(*std::max_element(var.begin(), var.end()) * 1e-12,
                                std::numeric_limits<double>::min());
  std::vector<double> w(var.size());
  for (std::size_t i = 0; i < var.size(); ++i) w[i] = 1.0 / std::max(var[i], floor);
  return detail::weighted_line_fit(x, y, w);
}

/// Exact linearized outage for the Gamma families: sum_{k<=K} A_k is
/// Gamma(K * shape, scale), so Pr[sum A <= K/eta] is a regularized incomplete gamma.
inline std::optional<double> exact_linearized_outage(const FadingModel& model, double eta, int k) {
  double shape = 1.0;
  double scale = 1.0;
  if (const auto* nak = std::get_if<Nakagami>(&model.kind())) {
    shape = nak->m;
    scale = 1.0 / nak->m;
  } else if (const auto* w = std::get_if<MimoWhite>(&model.kind())) {
    shape = static_cast<double>(w->n_t * w->n_r);
    scale = 1.0 / w->n_t;
  } else if (!model.is<Rayleigh>()) {
    return std::nullopt;
  }
  return boost::math::gamma_p(k * shape, (k / eta) / scale);
}

/// Unweighted slope of -log(exact outage) over the given K values.
inline std::optional<double> oracle_slope(const FadingModel& model, double eta, std::span<const int> ks) {
  if (ks.size() < 2) return std::nullopt;
  std::vector<double> x, y, w;
  for (int k : ks) {
    const auto p = exact_linearized_outage(model, eta, k);
    if (!p || !(*p > 0.0)) return std::nullopt;
    x.push_back(k);
    y.push_back(-std::log(*p));
    w.push_back(1.0);
  }
  return detail::weighted_line_fit(x, y, w).slope;
}

struct SimReport {
  std::vector<OutageEstimate> estimates;
  std::optional<ExponentFit> fit;
  std::optional<double> analytical_exponent;
  std::optional<double> ratio;
  std::optional<double> oracle_slope;
};

/// estimate_outage + fit_exponent + analytical comparison. Throws
/// InsufficientData after filling `partial` when the fit is impossible.
inline SimReport run_simulation(const SimConfig& config, SimReport* partial = nullptr) {
  SimReport report;
  report.estimates = estimate_outage(config);
  if (const auto p = analytical_point(config)) report.analytical_exponent = p->exponent;
  if (!config.is_feedback() && config.mode == RateMode::Linearized) {
    std::vector<int> used;
    for (const auto& e : report.estimates)
      if (!e.flagged) used.push_back(e.k);
    report.oracle_slope = oracle_slope(std::get<FadingModel>(config.channel), config.eta, used);
  }
  if (partial != nullptr) *partial = report;
  report.fit = fit_exponent(report.estimates);
  if (report.analytical_exponent && *report.analytical_exponent > 0.0) {
    report.ratio = report.fit->slope / *report.analytical_exponent;
  }
  return report;
}

}  // namespace wbo
