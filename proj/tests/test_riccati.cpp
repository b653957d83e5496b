#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <random>

#include <nlohmann/json.hpp>

#include "kahlerlab/riccati.hpp"

using namespace kahlerlab;
using namespace kahlerlab::riccati;

namespace {

constexpr double kPi = std::numbers::pi;

// sqrt(k) cot(sqrt(k) r), continued to k <= 0.
double ct(double k, double r) {
  if (k > 0) return std::sqrt(k) / std::tan(std::sqrt(k) * r);
  if (k < 0) return std::sqrt(-k) / std::tanh(std::sqrt(-k) * r);
  return 1 / r;
}

// Closed-form radial solution of the space form with bisectional curvature c.
RadialKahlerState model_state(int m, double c, double r) {
  const double v = ct(c / 2, r);
  return {r, 0.5 * ct(2 * c, r) + (m - 1) * v, v};
}

double rel_err(double x, double ref) { return std::abs(x - ref) / std::max(std::abs(ref), 1.0); }

IntegrationConfig config(double r_lo, double r_hi, std::size_t points) {
  IntegrationConfig cfg;
  cfg.r0 = std::min(1e-3, r_lo);
  cfg.r_max = r_hi;
  cfg.grid = geometric_grid(r_lo, r_hi, points);
  return cfg;
}

}  // namespace

TEST(Profiles, ParseAndDescribe) {
  const auto p = parse_profile("bumps:-3,1,2,0.5", 2);
  EXPECT_NEAR(p(0.0), -3 + std::pow(std::sin(0.5), 2), 1e-15);
  EXPECT_EQ(p.lower_bound, -3.0);
  EXPECT_EQ(parse_profile("model:-1", 3)(1.0), -4.0);
  EXPECT_EQ(parse_profile("constant:2.5", 3)(7.0), 2.5);
}

TEST(Profiles, MalformedStringsAreRejected) {
  for (const char* bad : {"constant", "constant:", "constant:1,2", "model:x", "bumps:1,2", "spline:1", "constant:1e"}) {
    EXPECT_THROW(parse_profile(bad, 2), ConfigError) << bad;
  }
}

TEST(Profiles, FromJson) {
  const auto p = profile_from_json(nlohmann::json::parse(
      R"({"kind": "bumps", "base": -3, "bumps": [{"amplitude": -0.5, "frequency": 1}]})"));
  EXPECT_EQ(p.lower_bound, -3.5);
  const auto t = profile_from_json(nlohmann::json::parse(R"({"kind": "table", "r": [0, 1], "values": [0, 2]})"));
  EXPECT_NEAR(t(0.25), 0.5, 1e-15);
  EXPECT_EQ(t(5.0), 2.0);
  EXPECT_THROW(profile_from_json(nlohmann::json::parse(R"({"kind": "table", "r": [1, 0], "values": [0, 2]})")),
               ConfigError);
  EXPECT_THROW(profile_from_json(nlohmann::json::parse(R"({"value": 1})")), ConfigError);
}

TEST(Integration, ModelMatchesClosedForm) {
  for (int m : {2, 3, 5}) {
    for (double c : {-1.0, 1.0}) {
      const double r_hi = c > 0 ? 0.95 * kPi / std::sqrt(2.0) : 5.0;
      const auto sol = integrate_radial(m, model_profile(c, m), config(0.01, r_hi, 400));
      ASSERT_FALSE(sol.blew_down);
      ASSERT_EQ(sol.states.size(), 400u);
      double worst = 0;
      for (const auto& s : sol.states) {
        const auto ref = model_state(m, c, s.r);
        worst = std::max({worst, rel_err(s.u, ref.u), rel_err(s.v, ref.v)});
      }
      EXPECT_LT(worst, 1e-8) << "m=" << m << " c=" << c;
    }
  }
}

TEST(Integration, FlatModelIsRadial) {
  // c = 0: u = (2m-1)/(2r), v = 1/r.
  const auto sol = integrate_radial(3, constant_profile(0.0), config(0.01, 4, 50));
  for (const auto& s : sol.states) {
    EXPECT_LT(rel_err(s.u, 2.5 / s.r), 1e-9);
    EXPECT_LT(rel_err(s.v, 1.0 / s.r), 1e-9);
  }
}

TEST(Integration, Rk4IsFourthOrder) {
  const int m = 2;
  const double c = -1;
  const auto start = model_state(m, c, 0.5);
  auto run = [&](double step) {
    IntegrationConfig cfg;
    cfg.method = Method::rk4;
    cfg.rk4_step = step;
    cfg.r0 = 0.5;
    cfg.r_max = 2.0;
    cfg.grid = {2.0};
    const auto sol = integrate_from(m, model_profile(c, m), start, cfg);
    return std::abs(sol.states.back().u - model_state(m, c, 2.0).u);
  };
  const double ratio = run(0.02) / run(0.01);
  EXPECT_GT(ratio, 12.0);
  EXPECT_LT(ratio, 20.0);
}

TEST(Integration, CurvatureScaling) {
  // Scaling lengths by 1/2 multiplies curvature by 4: u_{4c}(r) = 2 u_c(2r).
  const int m = 3;
  const auto a = integrate_radial(m, model_profile(-1.0, m), config(0.02, 4.0, 30));
  const auto b = integrate_radial(m, model_profile(-4.0, m), config(0.01, 2.0, 30));
  ASSERT_EQ(a.states.size(), b.states.size());
  for (std::size_t i = 0; i < a.states.size(); ++i) {
    EXPECT_NEAR(b.states[i].r * 2, a.states[i].r, 1e-12);
    EXPECT_LT(rel_err(b.states[i].u, 2 * a.states[i].u), 1e-8);
    EXPECT_LT(rel_err(b.states[i].v, 2 * a.states[i].v), 1e-8);
  }
}

TEST(Integration, PositiveCurvatureBlowsDownAtConjugateRadius) {
  IntegrationConfig cfg = config(0.01, 3.0, 300);
  const auto sol = integrate_radial(2, model_profile(1.0, 2), cfg);
  ASSERT_TRUE(sol.blew_down);
  EXPECT_NEAR(sol.blowdown_radius, kPi / std::sqrt(2.0), 1e-4);
}

TEST(Integration, InvalidConfigThrows) {
  IntegrationConfig cfg;
  cfg.r0 = 2;
  cfg.r_max = 1;
  EXPECT_THROW(integrate_radial(2, constant_profile(0), cfg), ConfigError);
  EXPECT_THROW(integrate_radial(1, constant_profile(0), IntegrationConfig{}), ConfigError);
}

TEST(Comparison, RandomAdmissibleProfilesSatisfyBothMargins) {
  std::mt19937_64 rng(11);
  for (int m : {2, 3}) {
    for (int k : {-1, 1}) {
      const double r_hi = k > 0 ? 2.0 : 5.0;
      for (int i = 0; i < 5; ++i) {
        const auto profile = random_admissible_profile(m, k, rng);
        const auto cmp = compare_to_model(m, k, profile, config(0.01, r_hi, 200));
        EXPECT_TRUE(cmp.verdict.pass()) << profile.description << " margin " << cmp.verdict.worst_margin;
        for (const auto& s : cmp.profile_solution.states) EXPECT_GT(s.v, 0.0);
      }
    }
  }
}

TEST(Comparison, ModelHasZeroMargin) {
  const auto cmp = compare_to_model(2, -1, model_profile(-1, 2), config(0.01, 5, 50));
  EXPECT_EQ(cmp.verdict.worst_margin, 0.0);
  EXPECT_TRUE(cmp.verdict.pass());
}

TEST(Comparison, ViolatingProfileIsNeverPass) {
  // Dips to -4.5 < (m+1)k = -3: the precondition must fail even if margins look fine.
  const auto profile = bumps_profile(-4.5, {{3, 1, 0}});
  const auto cmp = compare_to_model(2, -1, profile, config(0.01, 5, 200));
  EXPECT_FALSE(cmp.verdict.precondition_ok);
  EXPECT_FALSE(cmp.verdict.pass());
  EXPECT_NE(cmp.verdict.note.find("drops below"), std::string::npos);
}

TEST(Comparison, RejectsBadSign) {
  EXPECT_THROW(compare_to_model(2, 0, constant_profile(0), config(0.01, 1, 5)), ConfigError);
}

TEST(SphereIdentity, ModelIsConsistentAndPerturbationIsNot) {
  const int m = 2;
  std::vector<RadialKahlerState> states;
  for (double r : linear_grid(0.5, 3.0, 400)) states.push_back(model_state(m, -1, r));
  EXPECT_LT(sphere_identity_residual(m, states).max_abs(), 1e-6);
  for (auto& s : states) s.v *= 1 + 0.05 * std::sin(3 * s.r);
  EXPECT_GT(sphere_identity_residual(m, states).max_abs(), 1e-3);
}

TEST(Envelope, ConstantBoundReproducesModel) {
  const int m = 3;
  const auto env = averaged_envelope(m, constant_profile(-(m + 1.0)), config(0.01, 5, 60));
  ASSERT_EQ(env.envelope.states.size(), 60u);
  for (const auto& s : env.envelope.states) {
    const auto ref = model_state(m, -1, s.r);
    EXPECT_LT(rel_err(s.u, ref.u), 1e-8);
    EXPECT_LT(rel_err(s.v, (m - 1) * ref.v), 1e-8);
  }
  EXPECT_TRUE(env.verdict.pass());
}

TEST(Envelope, LargerCurvatureStaysBelow) {
  std::mt19937_64 rng(5);
  const auto profile = random_admissible_profile(2, -1, rng);
  const auto env = averaged_envelope(2, profile, config(0.01, 5, 100));
  EXPECT_TRUE(env.verdict.pass()) << env.verdict.worst_margin;
}

TEST(Gap, SubstitutedValueIsConstantAndPrintedFormHasCorrectLimit) {
  for (int m = 2; m <= 6; ++m) {
    for (double r : {0.05, 0.5, 1.0, 3.0, 10.0}) {
      const auto g = gap_expression(m, r);
      EXPECT_NEAR(g.substituted, 0.5 * (m - 1), 1e-9 * m) << "m=" << m << " r=" << r;
      const double coth = 1 / std::tanh(r);
      EXPECT_NEAR(g.as_printed, 0.5 * (m - 1) * (2 * coth * coth - 1), 1e-12 * g.as_printed);
      EXPECT_GE(g.as_printed, g.stated);
    }
    EXPECT_NEAR(gap_expression(m, 40.0).as_printed, 0.5 * (m - 1), 1e-9);
  }
  EXPECT_NEAR(gap_expression(2, 1.0).discrepancy(), 1.2240616609663109 - 0.5, 1e-12);
}

TEST(Sanity, LaplacianBoundOnAdmissibleProfiles) {
  std::mt19937_64 rng(1);
  const int n = 4;
  std::vector<std::vector<RadialKahlerState>> runs;
  for (const auto& p : sanity_profiles(n, rng)) runs.push_back(integrate_radial(n / 2, p, config(0.01, 6, 200)).states);
  EXPECT_TRUE(laplacian_bound_sanity(n, 1.05, 6, runs).pass());
  EXPECT_THROW(laplacian_bound_sanity(3, 1.05, 6, runs), ConfigError);
}
