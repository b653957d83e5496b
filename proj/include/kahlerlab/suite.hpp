#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <numbers>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "kahlerlab/core.hpp"
#include "kahlerlab/examples.hpp"
#include "kahlerlab/models.hpp"
#include "kahlerlab/parallel.hpp"
#include "kahlerlab/reports.hpp"
#include "kahlerlab/riccati.hpp"

namespace kahlerlab::suite {

struct SuiteConfig {
  int m = 2;  // complex dimension of the chart metrics in the Bochner study
  std::uint64_t seed = 42;
  std::size_t threads = 0;
  std::size_t mc_samples = 1'000'000;
};

namespace detail {

inline std::mt19937_64 stream(std::uint64_t seed, std::uint64_t tag) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(tag)};
  return std::mt19937_64(seq);
}

inline std::string num(double x) { return io::format_double(x); }

}  // namespace detail

// ---------------------------------------------------------------------------
// Radial systems
// ---------------------------------------------------------------------------

/// Integrated model system against the closed form, relative to max(|exact|, 1).
/// For c > 0 the grid stops at 0.95 of the model diameter.
inline Verdict riccati_self_consistency(double tolerance = 1e-8) {
  Verdict v{"riccati_model_self_consistency", "radial system with model Ricci input vs closed form", 0};
  v.tolerance = 0.0;
  double worst = 0.0;
  for (int m : {2, 3, 5}) {
    for (double c : {-1.0, 1.0}) {
      const models::ComplexSpaceForm space(c, m);
      const double r_end = c > 0 ? 0.95 * models::diameter(space) : 5.0;
      riccati::IntegrationConfig cfg;
      cfg.grid = linear_grid(0.01, r_end, 400);
      cfg.r_max = r_end;
      const auto sol = riccati::integrate_radial(m, riccati::model_profile(c, m), cfg);
      if (sol.states.size() != cfg.grid.size()) v.precondition_ok = false;
      for (const auto& s : sol.states) {
        const auto H = models::model_complex_hessian(space, s.r);
        const double u = H.complex_laplacian(m);
        const double err = std::max(std::abs(s.u - u) / std::max(std::abs(u), 1.0),
                                    std::abs(s.v - H.r22) / std::max(std::abs(H.r22), 1.0));
        worst = std::max(worst, err);
        v.observe(tolerance - err, s.r);
      }
    }
  }
  v.note = "largest relative error " + detail::num(worst) + "; c = 1 runs stop at 0.95 diameter";
  return v;
}

/// c = 1 model: the solution must blow down at the diameter pi / sqrt 2.
inline Verdict riccati_blowdown(double tolerance = 1e-4) {
  Verdict v{"riccati_blowdown_radius", "c = 1, m = 2 blows down at pi / sqrt 2", 0};
  v.tolerance = 0.0;
  riccati::IntegrationConfig cfg;
  cfg.r_max = 3.0;
  cfg.output_points = 400;
  const auto sol = riccati::integrate_radial(2, riccati::model_profile(1.0, 2), cfg);
  const double target = std::numbers::pi / std::sqrt(2.0);
  if (!sol.blew_down) {
    v.precondition_ok = false;
    v.observe(-1.0, cfg.r_max);
    v.note = "no blow-down detected";
    return v;
  }
  v.observe(tolerance - std::abs(sol.blowdown_radius - target), sol.blowdown_radius);
  v.note = "blow-down at r = " + detail::num(sol.blowdown_radius);
  return v;
}

/// Seeded admissible profiles for one (m, k); every run must keep both margins >= -tol.
inline Verdict comparison_random_profiles(int m, int k, std::uint64_t seed, std::size_t count = 20,
                                          double tolerance = 1e-6) {
  std::ostringstream name;
  name << "laplacian_comparison_m" << m << (k < 0 ? "_negative" : "_positive");
  Verdict v{name.str(), "Ric >= (m+1)k gives the model comparison on seeded profiles", 0};
  v.tolerance = tolerance;
  auto rng = detail::stream(seed, static_cast<std::uint64_t>(100 + 10 * m + (k > 0)));
  riccati::IntegrationConfig cfg;
  std::size_t profiles_ok = 0;
  for (std::size_t i = 0; i < count; ++i) {
    const auto profile = riccati::random_admissible_profile(m, k, rng);
    const auto res = riccati::compare_to_model(m, k, profile, cfg, tolerance);
    if (!res.verdict.precondition_ok) v.precondition_ok = false;
    if (res.verdict.grid_size > 0) {
      v.observe(res.verdict.worst_margin, res.verdict.worst_at);
      v.grid_size += res.verdict.grid_size - 1;
    }
    for (const auto& s : res.profile_solution.states) {
      if (!(s.v > 0.0)) v.precondition_ok = false;
    }
    ++profiles_ok;
  }
  v.note = std::to_string(profiles_ok) + " profiles";
  return v;
}

/// A profile dipping below the bound must be flagged, never reported as a pass.
inline Verdict comparison_negative_control() {
  Verdict v{"laplacian_comparison_bound_violation", "profile below (m+1)k is flagged as a precondition failure", 0};
  v.tolerance = 0.0;
  const int m = 2;
  const auto bad = riccati::bumps_profile(-(m + 1.0) - 1.5, {{3.0, 1.0, 0.0}});
  riccati::IntegrationConfig cfg;
  const auto res = riccati::compare_to_model(m, -1, bad, cfg);
  const bool flagged = !res.verdict.precondition_ok && !res.verdict.pass();
  v.observe(flagged ? 0.0 : -1.0, 0.0);
  v.note = flagged ? "flagged: " + res.verdict.note : "violation not flagged";
  return v;
}

/// Averaged system: with the model bound it reproduces the model, and random
/// admissible profiles stay below it.
inline std::vector<Verdict> averaged_envelope_checks(std::uint64_t seed, double tolerance = 1e-8) {
  Verdict eq{"averaged_envelope_model", "averaged system at the model bound reproduces the model", 0};
  eq.tolerance = 0.0;
  riccati::IntegrationConfig cfg;
  cfg.grid = linear_grid(0.01, 5.0, 200);
  for (int m : {2, 3}) {
    const auto env = riccati::averaged_envelope(m, riccati::constant_profile(-(m + 1.0)), cfg);
    const models::ComplexSpaceForm space(-1.0, m);
    for (const auto& s : env.envelope.states) {
      const auto H = models::model_complex_hessian(space, s.r);
      const double u = H.complex_laplacian(m);
      eq.observe(tolerance - std::abs(s.u - u) / std::max(std::abs(u), 1.0), s.r);
    }
  }
  Verdict below{"averaged_envelope_below_model", "averaged envelope under admissible profiles", 0};
  below.tolerance = 1e-6;
  auto rng = detail::stream(seed, 300);
  riccati::IntegrationConfig rcfg;
  for (int m : {2, 3}) {
    for (int i = 0; i < 10; ++i) {
      const auto profile = riccati::random_admissible_profile(m, -1, rng);
      const auto env = riccati::averaged_envelope(m, profile, rcfg, below.tolerance);
      if (env.verdict.grid_size > 0) below.observe(env.verdict.worst_margin, env.verdict.worst_at);
      for (const auto& s : env.envelope.states) {
        if (!(s.v > 0.0)) below.precondition_ok = false;
      }
    }
  }
  return {eq, below};
}

/// Substitution of the hyperbolic model Hessian into the identity.
inline std::vector<Verdict> gap_checks() {
  Verdict lower{"gap_lower_bound", "gap(r) >= (m-1)/2 on r in [0.01, 20], m = 2..6", 0};
  lower.tolerance = 1e-9;
  Verdict limit{"gap_limit", "gap(r) -> (m-1)/2 as r grows", 0};
  limit.tolerance = 0.0;
  const auto grid = linear_grid(0.01, 20.0, 1000);
  for (int m = 2; m <= 6; ++m) {
    const double half = 0.5 * (m - 1);
    for (double r : grid) {
      const auto g = riccati::gap_expression(m, r);
      lower.observe(std::min(g.substituted, g.as_printed) - half, r);
    }
    const auto far = riccati::gap_expression(m, 40.0);
    limit.observe(1e-9 - std::max(std::abs(far.as_printed - half), std::abs(far.substituted - half)), m);
  }
  const auto g1 = riccati::gap_expression(2, 1.0);
  lower.note = "m = 2, r = 1: term-by-term substitution " + detail::num(g1.substituted) +
               ", closed expression (m-1)/2 (2 coth^2 r - 1) = " + detail::num(g1.as_printed) +
               ", stated value (m-1)/2 = " + detail::num(g1.stated) + "; difference " + detail::num(g1.discrepancy());
  limit.note = "evaluated at r = 40";
  return {lower, limit};
}

inline Verdict laplacian_sanity(std::uint64_t seed) {
  auto rng = detail::stream(seed, 400);
  const int n = 4;
  const int m = n / 2;
  riccati::IntegrationConfig cfg;
  cfg.r_max = 6.0;
  std::vector<std::vector<riccati::RadialKahlerState>> runs;
  // Real normalization Ric >= -(n-1) is R11 >= -(n-1) in the radial system.
  for (const auto& p : riccati::sanity_profiles(n, rng)) runs.push_back(riccati::integrate_radial(m, p, cfg).states);
  return riccati::laplacian_bound_sanity(n, 1.05, 6.0, runs);
}

// ---------------------------------------------------------------------------
// Model quantities
// ---------------------------------------------------------------------------

/// First zero of J_0 by bisection on the standard library Bessel function.
inline double bessel_j0_first_zero() {
  double lo = 2.0, hi = 3.0;
  for (int i = 0; i < 200 && hi - lo > 1e-15; ++i) {
    const double mid = 0.5 * (lo + hi);
    (std::cyl_bessel_j(0.0, mid) > 0.0 ? lo : hi) = mid;
  }
  return 0.5 * (lo + hi);
}

inline std::vector<Verdict> eigenvalue_checks() {
  Verdict n3{"dirichlet_flat_ball_n3", "unit ball in R^3: pi^2", 0};
  n3.tolerance = 0.0;
  const double l3 = models::first_dirichlet_eigenvalue({0.0, 3}, 1.0);
  n3.observe(1e-8 - std::abs(l3 - std::numbers::pi * std::numbers::pi), 1.0);
  n3.note = "computed " + detail::num(l3);

  Verdict n2{"dirichlet_flat_disc_n2", "unit disc: squared first zero of J_0", 0};
  n2.tolerance = 0.0;
  const double j0 = bessel_j0_first_zero();
  const double l2 = models::first_dirichlet_eigenvalue({0.0, 2}, 1.0);
  n2.observe(1e-6 - std::abs(l2 - j0 * j0), 1.0);
  n2.note = "computed " + detail::num(l2) + ", reference " + detail::num(j0 * j0);

  Verdict mono{"dirichlet_monotone_in_radius", "eigenvalue strictly decreases with the radius", 0};
  mono.tolerance = 0.0;
  const std::vector<models::RealSpaceForm> spaces{{0.0, 3}, {1.0, 2}, {-1.0, 4}};
  for (const auto& s : spaces) {
    const double r_hi = std::min(3.0, 0.95 * models::diameter(s));
    const auto grid = linear_grid(0.25, r_hi, 8);
    double prev = models::first_dirichlet_eigenvalue(s, grid.front());
    for (std::size_t i = 1; i < grid.size(); ++i) {
      const double cur = models::first_dirichlet_eigenvalue(s, grid[i]);
      mono.observe((prev - cur) / prev, grid[i]);
      prev = cur;
    }
  }
  if (!(mono.worst_margin > 0.0)) mono.precondition_ok = false;
  return {n2, n3, mono};
}

inline Verdict entropy_check() {
  Verdict v{"entropy_below_real_benchmark", "complex model entropy < 2m - 1 at Ric = -(2m-1)", 0};
  v.tolerance = 0.0;
  std::string gaps;
  for (int m = 2; m <= 6; ++m) {
    const auto e = examples::entropy_gap_demo(m);
    v.observe(e.gap(), m);
    gaps += (gaps.empty() ? "" : " ") + detail::num(e.gap());
  }
  if (!(v.worst_margin > 0.0)) v.precondition_ok = false;
  v.note = "gaps for m = 2..6: " + gaps;
  return v;
}

// ---------------------------------------------------------------------------
// Whole suite
// ---------------------------------------------------------------------------

/// Every acceptance check, sorted by name. Independent checks run concurrently;
/// the result does not depend on the worker count.
inline std::vector<Verdict> run_suite(const SuiteConfig& cfg) {
  using Job = std::function<std::vector<Verdict>()>;
  std::vector<Job> jobs{
      [&] {
        reports::BochnerStudyConfig b;
        b.m = cfg.m;
        b.seed = cfg.seed;
        b.threads = 1;
        return reports::study_verdicts(reports::bochner_study(b));
      },
      [] { return std::vector<Verdict>{riccati_self_consistency()}; },
      [] { return std::vector<Verdict>{riccati_blowdown()}; },
      [&] { return std::vector<Verdict>{comparison_random_profiles(2, -1, cfg.seed)}; },
      [&] { return std::vector<Verdict>{comparison_random_profiles(2, 1, cfg.seed)}; },
      [&] { return std::vector<Verdict>{comparison_random_profiles(3, -1, cfg.seed)}; },
      [&] { return std::vector<Verdict>{comparison_random_profiles(3, 1, cfg.seed)}; },
      [] { return std::vector<Verdict>{comparison_negative_control()}; },
      [&] { return averaged_envelope_checks(cfg.seed); },
      [] { return gap_checks(); },
      [&] { return std::vector<Verdict>{laplacian_sanity(cfg.seed)}; },
      [] { return eigenvalue_checks(); },
      [] { return std::vector<Verdict>{entropy_check()}; },
      [&] { return reports::examples_report(cfg.mc_samples, cfg.seed).verdicts; },
      [] { return reports::gradient_verdicts(reports::gradient_study()); },
  };
  std::vector<std::vector<Verdict>> results(jobs.size());
  parallel_for(jobs.size(), cfg.threads, [&](std::size_t i) { results[i] = jobs[i](); });
  std::vector<Verdict> out;
  for (auto& r : results) out.insert(out.end(), r.begin(), r.end());
  std::stable_sort(out.begin(), out.end(), [](const Verdict& a, const Verdict& b) { return a.name < b.name; });
  return out;
}

}  // namespace kahlerlab::suite
