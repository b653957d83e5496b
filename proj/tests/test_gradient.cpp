#include <gtest/gtest.h>

#include <cmath>

#include <nlohmann/json.hpp>

#include "kahlerlab/gradient.hpp"

using namespace kahlerlab;
using namespace kahlerlab::gradient;

namespace {

const Stencil kStencil{1e-3L, 4};

RVec point(std::initializer_list<double> xs) {
  RVec p(static_cast<Eigen::Index>(xs.size()));
  Eigen::Index i = 0;
  for (double x : xs) p[i++] = x;
  return p;
}

double d(Real x) { return static_cast<double>(x); }

}  // namespace

TEST(Geometry, HalfspaceChristoffelSymbols) {
  const int n = 3;
  const auto chart = hyperbolic_halfspace(n);
  const RVec p = point({0.3, -0.2, 1.5});
  const auto gamma = detail::christoffel(chart, p, kStencil);
  const double y = 1.5;
  for (int k = 0; k < n; ++k) {
    for (int i = 0; i < n; ++i) {
      for (int j = 0; j < n; ++j) {
        double ref = 0;
        if (k == n - 1 && i == j && i < n - 1) ref = 1 / y;
        if (k == n - 1 && i == n - 1 && j == n - 1) ref = -1 / y;
        if (k < n - 1 && ((i == k && j == n - 1) || (j == k && i == n - 1))) ref = -1 / y;
        EXPECT_NEAR(d(gamma[static_cast<std::size_t>(k)](i, j)), ref, 1e-10) << k << i << j;
      }
    }
  }
}

TEST(Geometry, HalfspaceRicciIsMinusNMinusOne) {
  for (int n : {3, 4}) {
    const auto chart = hyperbolic_halfspace(n);
    RVec p = RVec::Zero(n);
    p[0] = 0.2;
    p[n - 1] = 0.8;
    const RMat ric = ricci_tensor(chart, p, kStencil);
    const RMat expected = -(n - 1) * chart.g(p);
    EXPECT_LT(d((ric - expected).cwiseAbs().maxCoeff()), 1e-7);
    EXPECT_NEAR(d(min_ricci(chart, p, kStencil)), -(n - 1.0), 1e-7);
  }
}

TEST(Geometry, FlatRicciVanishes) {
  EXPECT_NEAR(d(min_ricci(flat_chart(3), point({0.1, 0.2, 0.3}), kStencil)), 0.0, 1e-12);
}

TEST(Quantities, UInFrameOnExplicitHessian) {
  RMat H = RMat::Zero(3, 3);
  H(0, 0) = 1;
  H(1, 1) = 2;
  H(2, 2) = 3;
  // off-diagonal 0, (2n/(n-1)) H11^2 = 3, tail (2.5-2)^2 + (2.5-3)^2 = 0.5 doubled.
  EXPECT_NEAR(d(u_in_frame(H, RMat::Identity(3, 3), 3)), 4.0, 1e-15);
  H(0, 1) = H(1, 0) = 0.5;
  EXPECT_NEAR(d(u_in_frame(H, RMat::Identity(3, 3), 3)), 5.0, 1e-15);
}

TEST(Quantities, EqualityCaseOnHyperbolicPower) {
  for (int n : {3, 4}) {
    const auto sample = builtin_sample("hyperbolic_power", n);
    for (const auto& p : sample.points) {
      const auto q = yau_quantities(sample, p, kStencil);
      EXPECT_NEAR(d(q.g_val), (n - 1.0) * (n - 1.0), 1e-7);
      EXPECT_NEAR(d(q.w_val), 0.0, 1e-7);
      EXPECT_NEAR(d(q.u_val), 0.0, 1e-7);
      EXPECT_FALSE(q.frame_ambiguous);
    }
  }
}

TEST(Quantities, FlatLinearGradientNorm) {
  const auto sample = builtin_sample("flat_linear", 4);
  for (const auto& p : sample.points) {
    const double s = static_cast<double>(p[0]) + 10;
    const auto q = yau_quantities(sample, p, kStencil);
    EXPECT_NEAR(d(q.g_val), 1 / (s * s), 1e-12);
    EXPECT_NEAR(d(q.w_val), 9 - 1 / (s * s), 1e-12);
  }
}

TEST(Quantities, FrameIsOrthonormalAndAligned) {
  const auto sample = builtin_sample("hyperbolic_poisson", 4);
  const RVec& p = sample.points[2];
  const auto q = yau_quantities(sample, p, kStencil);
  const RMat G = sample.chart.g(p);
  EXPECT_LT(d((q.frame.transpose() * G * q.frame - RMat::Identity(4, 4)).cwiseAbs().maxCoeff()), 1e-12);
  const RVec dh = fd::gradient([&](const RVec& x) { return std::log(sample.f(x)); }, p, kStencil);
  EXPECT_NEAR(d(q.frame.col(0).dot(dh)), d(q.grad_norm), 1e-10);
}

TEST(Quantities, ConstantSampleIsFrameAmbiguous) {
  const auto sample = builtin_sample("flat_constant", 3);
  const auto q = yau_quantities(sample, sample.points[0], kStencil);
  EXPECT_TRUE(q.frame_ambiguous);
  EXPECT_EQ(d(q.g_val), 0.0);
}

TEST(Identities, LogIdentityOnHarmonicSamples) {
  for (const auto& [name, n] : std::vector<std::pair<std::string, int>>{
           {"flat_linear", 4}, {"flat_newton", 3}, {"hyperbolic_power", 3}, {"hyperbolic_poisson", 4},
           {"hyperbolic_sum", 4}}) {
    const auto sample = builtin_sample(name, n);
    for (const auto& p : sample.points) EXPECT_LT(d(log_identity_residual(sample, p, kStencil)), 1e-8) << name;
  }
}

TEST(Identities, NonHarmonicFunctionBreaksLogIdentity) {
  auto sample = builtin_sample("flat_linear", 3);
  sample.f = [](const RVec& p) { return p.squaredNorm() + 1; };
  EXPECT_GT(d(log_identity_residual(sample, sample.points[1], kStencil)), 0.1);
}

TEST(Identities, ChainInequalitiesHold) {
  for (const auto& [name, n] : std::vector<std::pair<std::string, int>>{
           {"flat_linear", 4}, {"flat_newton", 3}, {"hyperbolic_power", 4}, {"hyperbolic_poisson", 3},
           {"hyperbolic_sum", 4}}) {
    const auto sample = builtin_sample(name, n);
    for (const auto& p : sample.points) {
      const auto r = bochner_chain_residual(sample, p, kStencil);
      EXPECT_LE(d(r.res63), 1e-6) << name;
      EXPECT_LE(d(r.res610), 1e-6) << name;
      EXPECT_LT(d(r.identity64), 1e-6) << name;
    }
  }
}

TEST(Identities, CurvatureBelowBoundIsAPreconditionFailure) {
  // (dx^2 + dy^2) / (4 y^2) has sectional curvature -4.
  auto sample = builtin_sample("hyperbolic_power", 3);
  sample.chart.g = [](const RVec& p) { return (RMat::Identity(3, 3) / (4 * p[2] * p[2])).eval(); };
  EXPECT_THROW(bochner_chain_residual(sample, sample.points[0], kStencil), PreconditionError);
}

TEST(KaehlerGap, ExactRationalValues) {
  for (long long m = 2; m <= 6; ++m) {
    const auto gap = kahler_substitution_gap(static_cast<int>(m));
    EXPECT_TRUE(gap.consistent());
    // -(2m-1)^2 (m-1) / 2 in lowest terms.
    long long num = -(2 * m - 1) * (2 * m - 1) * (m - 1);
    long long den = 2;
    if (num % 2 == 0) {
      num /= 2;
      den = 1;
    }
    EXPECT_EQ(gap.gap.numerator(), num) << m;
    EXPECT_EQ(gap.gap.denominator(), den) << m;
    EXPECT_EQ(gap.lhs.numerator(), 0);
  }
  EXPECT_THROW(kahler_substitution_gap(1), ConfigError);
}

TEST(Samples, FromJson) {
  const auto s = sample_from_json(nlohmann::json::parse(
      R"({"metric": "hyperbolic_halfspace", "n": 4, "f": "power", "points": [[0, 0, 0, 1.5]]})"));
  ASSERT_EQ(s.points.size(), 1u);
  EXPECT_NEAR(d(s.f(s.points[0])), std::pow(1.5, 3), 1e-15);
  EXPECT_THROW(sample_from_json(nlohmann::json::parse(R"({"metric": "sphere", "n": 3, "f": "power"})")), ConfigError);
  EXPECT_THROW(sample_from_json(nlohmann::json::parse(R"({"metric": "flat", "n": 4, "f": "newton"})")), ConfigError);
  EXPECT_THROW(sample_from_json(nlohmann::json::parse(
                   R"({"metric": "hyperbolic_halfspace", "n": 3, "f": "power", "points": [[0, 0, -1]]})")),
               DomainError);
  EXPECT_THROW(sample_from_json(nlohmann::json::parse(R"({"metric": "flat"})")), ConfigError);
}

TEST(Samples, UnknownNameThrows) {
  EXPECT_THROW(builtin_sample("flat_quadratic", 3), ConfigError);
  EXPECT_THROW(flat_chart(1), ConfigError);
}
