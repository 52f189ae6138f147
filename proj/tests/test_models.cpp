#include <gtest/gtest.h>

#include <wbo/models.hpp>

#include <boost/math/quadrature/exp_sinh.hpp>
#include <boost/math/quadrature/sinh_sinh.hpp>

#include <cmath>
#include <numeric>

using namespace wbo;

namespace {

CovarianceSpec white_spec(int n_t, int n_r) {
  const int n = n_t * n_r;
  return CovarianceSpec(CMatrix::Identity(n_t, n_t) / static_cast<double>(n_t), CMatrix::Identity(n, n), n_t, n_r);
}

double mean(const std::vector<double>& v) { return std::accumulate(v.begin(), v.end(), 0.0) / v.size(); }

double variance(const std::vector<double>& v) {
  const double m = mean(v);
  double s = 0.0;
  for (double x : v) s += (x - m) * (x - m);
  return s / (v.size() - 1);
}

// log E[exp(lambda A)] by quadrature against a density on [0, inf).
template <class Density>
double quadrature_log_mgf(Density f, double lambda) {
  boost::math::quadrature::exp_sinh<double> integrator;
  return std::log(integrator.integrate([&](double a) { return std::exp(lambda * a) * f(a); }));
}

}  // namespace

TEST(MeanRateDerivative, Examples) {
  EXPECT_DOUBLE_EQ(mean_rate_derivative(FadingModel::rayleigh()), 1.0);
  EXPECT_DOUBLE_EQ(mean_rate_derivative(FadingModel::mimo_white(2, 3)), 3.0);
  EXPECT_NEAR(mean_rate_derivative(FadingModel::mimo_correlated(white_spec(2, 2))), 2.0, 1e-14);
  EXPECT_DOUBLE_EQ(mean_rate_derivative(FadingModel::rician(0.6)), 1.0);
  EXPECT_DOUBLE_EQ(mean_rate_derivative(FadingModel::nakagami(3.0)), 1.0);
}

TEST(LogMgf, QuadratureOracle) {
  EXPECT_EQ(log_mgf(FadingModel::rayleigh(), 0.0), 0.0);
  const double ray = quadrature_log_mgf([](double a) { return std::exp(-a); }, -1.0);
  EXPECT_NEAR(ray, -std::log(2.0), 1e-10);
  EXPECT_NEAR(log_mgf(FadingModel::rayleigh(), -1.0), ray, 1e-10);

  // Gamma(2, 1/2) density: 4 a e^{-2a}.
  const double nak = quadrature_log_mgf([](double a) { return 4.0 * a * std::exp(-2.0 * a); }, -2.0);
  EXPECT_NEAR(nak, -2.0 * std::log(2.0), 1e-10);
  EXPECT_NEAR(log_mgf(FadingModel::nakagami(2.0), -2.0), nak, 1e-10);
}

TEST(LogMgf, RicianMatchesQuadrature) {
  // |h|^2 = (kappa + s x)^2 + (s y)^2 with x, y ~ N(0, 1/2) and s^2 = 1 - kappa^2,
  // so the MGF factors into two Gaussian integrals.
  boost::math::quadrature::sinh_sinh<double> integrator;
  const double pi = std::acos(-1.0);
  for (double kappa : {0.3, 0.7, 0.9}) {
    const double s = std::sqrt(1.0 - kappa * kappa);
    for (double lambda : {-0.5, -3.0}) {
      const double real_part = integrator.integrate([&](double x) {
        return std::exp(lambda * (kappa + s * x) * (kappa + s * x) - x * x) / std::sqrt(pi);
      });
      const double imag_part = integrator.integrate([&](double y) {
        return std::exp(lambda * s * s * y * y - y * y) / std::sqrt(pi);
      });
      EXPECT_NEAR(log_mgf(FadingModel::rician(kappa), lambda), std::log(real_part * imag_part), 1e-10)
          << "kappa=" << kappa << " lambda=" << lambda;
    }
  }
}

TEST(LogMgf, ZeroAtOriginSlopeIsMeanAndConvex) {
  const std::vector<FadingModel> models{FadingModel::rayleigh(), FadingModel::rician(0.5),
                                        FadingModel::nakagami(0.5), FadingModel::mimo_white(2, 3),
                                        FadingModel::mimo_correlated(white_spec(2, 2))};
  for (const auto& m : models) {
    EXPECT_NEAR(log_mgf(m, 0.0), 0.0, 1e-15) << m.name();
    EXPECT_NEAR(log_mgf_derivative(m, 0.0), mean_rate_derivative(m), 1e-12) << m.name();
    const double h = 1e-3;
    for (double l = -20.0; l < 0.0; l += 0.37) {
      const double second = log_mgf(m, l + h) - 2.0 * log_mgf(m, l) + log_mgf(m, l - h);
      EXPECT_GE(second, -1e-12) << m.name() << " at " << l;
      const double fd = (log_mgf(m, l + h) - log_mgf(m, l - h)) / (2 * h);
      EXPECT_NEAR(log_mgf_derivative(m, l), fd, 1e-6 * (1 + std::abs(fd))) << m.name();
    }
  }
}

TEST(LogMgf, ConditionOneFiniteNearZero) {
  // Condition (i): Lambda finite on a neighbourhood of 0.
  const std::vector<FadingModel> models{FadingModel::rayleigh(), FadingModel::rician(0.9),
                                        FadingModel::nakagami(4.0), FadingModel::mimo_white(4, 2)};
  for (const auto& m : models) {
    const double b = m.mgf_domain_bound();
    EXPECT_GT(b, 0.0);
    EXPECT_TRUE(std::isfinite(log_mgf(m, 0.5 * b)));
    EXPECT_THROW(log_mgf(m, b), DomainError);
  }
}

TEST(LogMgf, NakagamiOneIsRayleigh) {
  const auto nak = FadingModel::nakagami(1.0);
  const auto ray = FadingModel::rayleigh();
  for (double l = -50.0; l <= 0.5; l += 0.25) EXPECT_NEAR(log_mgf(nak, l), log_mgf(ray, l), 1e-14);
}

TEST(LogMgf, MonteCarloAgreement) {
  const std::vector<FadingModel> models{FadingModel::rayleigh(), FadingModel::rician(0.7),
                                        FadingModel::nakagami(2.0), FadingModel::mimo_white(2, 2)};
  for (const auto& m : models) {
    const auto a = sample(m, 200000, 11);
    const double lambda = -0.5;
    double s = 0.0;
    for (double x : a) s += std::exp(lambda * x);
    EXPECT_NEAR(std::log(s / a.size()), log_mgf(m, lambda), 5e-3) << m.name();
  }
}

TEST(Sample, RayleighMean) {
  const auto a = sample(FadingModel::rayleigh(), 1000000, 42);
  const double se = std::sqrt(variance(a) / a.size());
  EXPECT_NEAR(mean(a), 1.0, 4 * se);
}

TEST(Sample, NakagamiVariance) {
  const auto a = sample(FadingModel::nakagami(2.0), 1000000, 43);
  // Standard error of the sample variance: sqrt((mu4 - sigma^4) / n), with mu4 = 3(m + 2)/m^3 for Gamma(m, 1/m).
  const double m = 2.0;
  const double mu4 = 3.0 * (m + 2.0) / (m * m * m);
  const double se = std::sqrt((mu4 - 1.0 / (m * m)) / a.size());
  EXPECT_NEAR(variance(a), 0.5, 4 * se);
}

TEST(Sample, CorrelatedWhiteMean) {
  const auto a = sample(FadingModel::mimo_correlated(white_spec(2, 3)), 1000000, 44);
  const double se = std::sqrt(variance(a) / a.size());
  EXPECT_NEAR(mean(a), 3.0, 4 * se);
}

TEST(Sample, RicianMeanAndDeterminism) {
  const auto a = sample(FadingModel::rician(0.8), 200000, 5);
  const auto b = sample(FadingModel::rician(0.8), 200000, 5);
  EXPECT_EQ(a, b);
  EXPECT_NEAR(mean(a), 1.0, 4 * std::sqrt(variance(a) / a.size()));
  EXPECT_THROW(sample(FadingModel::rayleigh(), 0, 1), InvalidArgument);
}

TEST(Sample, CorrelatedMeanFollowsPsi) {
  // Transmit correlation 0.9 with beamforming on the strong eigenvector.
  CMatrix a(2, 2);
  a << 1.0, 0.9, 0.9, 1.0;
  CMatrix psi = CMatrix::Zero(4, 4);
  psi.block(0, 0, 2, 2) = a;
  psi.block(2, 2, 2, 2) = a;
  CMatrix sigma(2, 2);
  sigma << 0.5, 0.5, 0.5, 0.5;
  const auto model = FadingModel::mimo_correlated(CovarianceSpec(sigma, psi, 2, 2));
  EXPECT_NEAR(mean_rate_derivative(model), 3.8, 1e-12);
  const auto x = sample(model, 400000, 9);
  EXPECT_NEAR(mean(x), 3.8, 4 * std::sqrt(variance(x) / x.size()));
}

TEST(TiltedSampler, RayleighMeanHalf) {
  const auto d = tilted_sample(FadingModel::rayleigh(), -1.0, 400000, 3);
  std::vector<double> v;
  for (const auto& t : d) v.push_back(t.value);
  EXPECT_NEAR(mean(v), 0.5, 4 * std::sqrt(variance(v) / v.size()));
  EXPECT_NEAR(d[0].log_weight, d[0].value - std::log(2.0), 1e-14);
}

TEST(TiltedSampler, NakagamiMean) {
  TiltedSampler s(FadingModel::nakagami(2.0), -2.0);
  EXPECT_NEAR(s.tilted_mean(), 0.5, 1e-15);
  // E_tilted[w] = 1.
  const auto d = tilted_sample(FadingModel::nakagami(2.0), -2.0, 400000, 4);
  double w = 0.0;
  for (const auto& t : d) w += std::exp(t.log_weight);
  EXPECT_NEAR(w / d.size(), 1.0, 0.01);
}

TEST(TiltedSampler, Unsupported) {
  try {
    TiltedSampler s(FadingModel::rician(0.5), -1.0);
    FAIL();
  } catch (const Unsupported& e) {
    EXPECT_NE(std::string(e.what()).find("tilting not available"), std::string::npos);
    EXPECT_NE(std::string(e.what()).find("use plain sampling"), std::string::npos);
  }
  EXPECT_THROW(TiltedSampler(FadingModel::mimo_correlated(white_spec(1, 1)), -1.0), Unsupported);
  EXPECT_THROW(TiltedSampler(FadingModel::rayleigh(), 0.0), InvalidArgument);
}

TEST(FadingModel, Validation) {
  EXPECT_THROW(FadingModel::rician(0.0), InvalidArgument);
  EXPECT_THROW(FadingModel::rician(1.0), InvalidArgument);
  EXPECT_THROW(FadingModel::nakagami(0.4), InvalidArgument);
  EXPECT_THROW(FadingModel::mimo_white(0, 2), InvalidArgument);
  CMatrix bad_sigma = CMatrix::Identity(2, 2);
  EXPECT_THROW(CovarianceSpec(bad_sigma, CMatrix::Identity(4, 4), 2, 2), InvalidArgument);
  CMatrix bad_psi = 2.0 * CMatrix::Identity(4, 4);
  EXPECT_THROW(CovarianceSpec(CMatrix::Identity(2, 2) / 2.0, bad_psi, 2, 2), InvalidArgument);
  CMatrix indefinite(2, 2);
  indefinite << 1.0, 1.5, 1.5, 1.0;
  EXPECT_THROW(CovarianceSpec(CMatrix::Identity(2, 2) / 2.0, indefinite, 2, 1), InvalidArgument);
}

TEST(Rate, ExactBelowLinearized) {
  const auto model = FadingModel::mimo_white(2, 2);
  const auto states = sample_states(model, 1000, 8);
  for (const auto& s : states) {
    for (double g : {0.01, 0.1, 1.0}) EXPECT_LE(rate(model, s, g), g * rate_derivative(model, s) + 1e-12);
  }
}
