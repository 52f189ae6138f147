#include <gtest/gtest.h>

#include <wbo/exponent.hpp>

#include <cmath>
#include <vector>

using namespace wbo;

namespace {

std::vector<double> log_grid(double lo, double hi, int n) {
  std::vector<double> g(n);
  for (int i = 0; i < n; ++i) g[i] = lo * std::pow(hi / lo, i / double(n - 1));
  return g;
}

// Brute force sup over lambda in [-lo, 0] on a fixed step.
double grid_search(const FadingModel& m, double eta, double lo, double step) {
  double best = 0.0;
  for (double l = 0.0; l >= -lo; l -= step) best = std::max(best, l / eta - log_mgf(m, l));
  return best;
}

}  // namespace

TEST(ExponentNumeric, Rayleigh) {
  const auto ray = FadingModel::rayleigh();
  const auto at_bar = exponent_numeric(ray, 1.0);
  EXPECT_EQ(at_bar.exponent, 0.0);
  EXPECT_EQ(at_bar.lambda_star, 0.0);
  const double expected = 0.5 - 1.0 + std::log(2.0);
  EXPECT_NEAR(exponent_numeric(ray, 2.0).exponent, expected, 1e-12);
  EXPECT_NEAR(grid_search(ray, 2.0, 10.0, 1e-6), expected, 1e-9);
  EXPECT_NEAR(exponent_numeric(ray, 2.0).lambda_star, -1.0, 1e-9);
}

TEST(ExponentNumeric, NakagamiScaling) {
  EXPECT_NEAR(exponent_numeric(FadingModel::nakagami(2.0), 2.0).exponent, 2 * (std::log(2.0) - 0.5), 1e-12);
}

TEST(ExponentNumeric, BelowEtaBar) {
  try {
    exponent_numeric(FadingModel::rayleigh(), 0.5);
    FAIL();
  } catch (const DomainError& e) {
    EXPECT_NE(std::string(e.what()).find("below minimum energy per nat"), std::string::npos);
  }
  EXPECT_THROW(exponent_numeric(FadingModel::rayleigh(), 0.0), InvalidArgument);
  EXPECT_THROW(exponent_numeric(FadingModel::rayleigh(), std::nan("")), InvalidArgument);
  EXPECT_THROW(exponent_numeric(FadingModel::mimo_white(2, 4), 0.2), DomainError);
}

TEST(ExponentClosedForm, Examples) {
  EXPECT_NEAR(exponent_closed_form(FadingModel::rayleigh(), std::exp(1.0)).exponent, std::exp(-1.0), 1e-14);
  EXPECT_NEAR(exponent_closed_form(FadingModel::rician(1e-9), 2.0).exponent, 0.193147, 1e-6);
  EXPECT_NEAR(exponent_closed_form(FadingModel::mimo_white(2, 2), 1.0).exponent, 4 * (std::log(2.0) - 0.5), 1e-12);
  CMatrix eye = CMatrix::Identity(1, 1);
  EXPECT_THROW(exponent_closed_form(FadingModel::mimo_correlated(CovarianceSpec(eye, eye, 1, 1)), 2.0),
               Unsupported);
}

TEST(ExponentClosedForm, CrossValidatesNumeric) {
  const std::vector<FadingModel> models{
      FadingModel::rayleigh(),         FadingModel::rician(0.3),        FadingModel::rician(0.7),
      FadingModel::rician(0.9),        FadingModel::nakagami(0.5),      FadingModel::nakagami(2.0),
      FadingModel::nakagami(4.0),      FadingModel::mimo_white(1, 1),   FadingModel::mimo_white(2, 2),
      FadingModel::mimo_white(4, 2)};
  for (const auto& m : models) {
    const double bar = eta_bar(m);
    for (double eta : log_grid(bar, 100 * bar, 50)) {
      const auto c = exponent_closed_form(m, eta);
      const auto n = exponent_numeric(m, eta);
      EXPECT_NEAR(c.exponent, n.exponent, 1e-9) << m.name() << " eta=" << eta;
      EXPECT_NEAR(c.lambda_star, n.lambda_star, 1e-6 * (1 + std::abs(c.lambda_star))) << m.name();
      EXPECT_GE(n.exponent, 0.0);
    }
  }
}

TEST(ExponentNumeric, MonotoneAndConvexInInverseEta) {
  // E(eta) = sup_l {l/eta - Lambda} is convex in 1/eta and nondecreasing in eta.
  const auto m = FadingModel::rician(0.5);
  const auto g = log_grid(1.0, 50.0, 60);
  double prev = -1.0;
  for (double eta : g) {
    const double e = exponent_numeric(m, eta).exponent;
    EXPECT_GE(e, prev);
    prev = e;
  }
  for (double t = 0.05; t < 0.95; t += 0.05) {
    const double h = 0.01;
    const double mid = exponent_numeric(m, 1 / t).exponent;
    const double avg = 0.5 * (exponent_numeric(m, 1 / (t - h)).exponent + exponent_numeric(m, 1 / (t + h)).exponent);
    EXPECT_LE(mid, avg + 1e-12);
  }
}

TEST(ExponentNumeric, RicianIncreasingInKappa) {
  for (double eta : {1.5, 2.0, 4.0, 10.0}) {
    double prev = exponent_closed_form(FadingModel::rayleigh(), eta).exponent;
    for (double kappa : {0.1, 0.3, 0.5, 0.7, 0.9, 0.95}) {
      const double e = exponent_numeric(FadingModel::rician(kappa), eta).exponent;
      EXPECT_GE(e, prev - 1e-12) << "kappa=" << kappa << " eta=" << eta;
      prev = e;
    }
  }
}

TEST(ExponentCurve, RayleighExamples) {
  const std::vector<double> grid{1.0, 2.0, std::exp(1.0), 10.0};
  const auto c = exponent_curve(FadingModel::rayleigh(), grid);
  ASSERT_EQ(c.points.size(), 4u);
  // 1/eta - 1 + log eta at each grid point.
  const double expected[] = {0.0, 0.193147, 0.367879, 1.402585};
  for (int i = 0; i < 4; ++i) EXPECT_NEAR(c.points[i].exponent, expected[i], 1e-6);
}

TEST(ExponentCurve, DropsBelowEtaBarAndRejectsBadGrids) {
  const std::vector<double> grid{0.5, 0.9, 1.0, 3.0};
  const auto c = exponent_curve(FadingModel::rayleigh(), grid);
  EXPECT_EQ(c.points.size(), 2u);
  EXPECT_EQ(c.dropped.size(), 2u);
  const std::vector<double> low{0.1, 0.2};
  EXPECT_THROW(exponent_curve(FadingModel::rayleigh(), low), DomainError);
  const std::vector<double> unsorted{2.0, 1.5};
  EXPECT_THROW(exponent_curve(FadingModel::rayleigh(), unsorted), InvalidArgument);
  EXPECT_THROW(exponent_curve(FadingModel::rayleigh(), std::vector<double>{}), InvalidArgument);
}

TEST(Optimize, CapIsFlagged) {
  const auto r = maximize_concave_nonpositive([](double l) { return 0.5 * l; }, [](double) { return 0.5; });
  EXPECT_EQ(r.argmax, 0.0);
  EXPECT_FALSE(r.capped);
  // Slope that never turns positive: the supremum sits at -inf.
  const auto capped = maximize_concave_nonpositive([](double l) { return -0.5 * l; }, [](double) { return -0.5; });
  EXPECT_TRUE(capped.capped);
}

TEST(Optimize, GoldenSection) {
  const auto r = golden_section_minimize([](double x) { return (x - 0.3) * (x - 0.3); }, 0.0, 1.0);
  EXPECT_NEAR(r.x, 0.3, 1e-8);
}
