#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

#include "kahlerlab/numerics/ode.hpp"
#include "kahlerlab/numerics/quadrature.hpp"

namespace kn = kahlerlab::numerics;

TEST(Quadrature, PolynomialIsExact) {
  const double v = kn::integrate([](double x) { return 3 * x * x; }, 0.0, 2.0);
  EXPECT_NEAR(v, 8.0, 1e-13);
}

TEST(Quadrature, RelativeToleranceResolvesTinyIntegrals) {
  // sin on [0, 1e-3] integrates to 1 - cos(1e-3), about 5e-7.
  const double exact = 2.0 * std::pow(std::sin(0.5e-3), 2);
  const double v = kn::integrate([](double x) { return std::sin(x); }, 0.0, 1e-3);
  EXPECT_NEAR(v / exact, 1.0, 1e-12);
}

TEST(Quadrature, ReversedLimitsFlipSign) {
  const double a = kn::integrate([](double x) { return std::exp(x); }, 0.0, 1.0);
  const double b = kn::integrate([](double x) { return std::exp(x); }, 1.0, 0.0);
  EXPECT_NEAR(a, std::numbers::e - 1.0, 1e-13);
  EXPECT_DOUBLE_EQ(a, -b);
}

TEST(DormandPrince, ExponentialGrowthToTolerance) {
  auto rhs = [](double, const kn::State<1>& y) -> kn::State<1> { return {y[0]}; };
  double h = 0.0;
  kn::StepControl ctl;
  const auto res = kn::advance_dopri<1>(rhs, 0.0, {1.0}, 3.0, ctl, [](double, auto&) { return false; }, h);
  ASSERT_EQ(res.reason, kn::StopReason::reached);
  EXPECT_DOUBLE_EQ(res.t, 3.0);
  EXPECT_NEAR(res.y[0] / std::exp(3.0), 1.0, 1e-9);
}

TEST(DormandPrince, GuardStopsAtBlowUp) {
  // y' = y^2, y(0) = 1 blows up at t = 1.
  auto rhs = [](double, const kn::State<1>& y) -> kn::State<1> { return {y[0] * y[0]}; };
  double h = 0.0;
  kn::StepControl ctl;
  const auto res = kn::advance_dopri<1>(
      rhs, 0.0, {1.0}, 2.0, ctl, [](double, const kn::State<1>& y) { return y[0] > 1e6; }, h);
  EXPECT_NE(res.reason, kn::StopReason::reached);
  EXPECT_NEAR(res.t, 1.0, 1e-5);
}

TEST(Rk4, GlobalErrorIsFourthOrder) {
  auto rhs = [](double t, const kn::State<2>& y) -> kn::State<2> {
    return {y[1], -y[0] + 0.0 * t};
  };
  auto err = [&](std::size_t steps) {
    const auto res = kn::advance_rk4<2>(rhs, 0.0, {0.0, 1.0}, 2.0, steps,
                                        [](double, const auto&) { return false; });
    return std::abs(res.y[0] - std::sin(2.0));
  };
  const double ratio = err(50) / err(100);
  EXPECT_GT(ratio, 14.0);
  EXPECT_LT(ratio, 18.0);
}
