#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>
#include <random>
#include <string>
#include <vector>

#include "kahlerlab/core.hpp"
#include "kahlerlab/models.hpp"
#include "kahlerlab/numerics/finite_difference.hpp"
#include "kahlerlab/numerics/quadrature.hpp"

namespace kahlerlab::examples {

inline constexpr double kPi = std::numbers::pi;

/// Product of m round 2-spheres of Gauss curvature 1 (Ric = g): sqrt(m) pi.
inline double product_diameter(int m) {
  if (m < 1) throw ConfigError("product_diameter: m must be positive");
  const double factor = models::diameter(models::RealSpaceForm(1.0, 2));
  return std::sqrt(m * factor * factor);
}

/// Complex projective space normalized to Ric = g.
inline double cpm_diameter(int m) {
  return models::diameter(models::complex_form_with_ricci(1.0, m));
}

/// Holomorphic sectional curvature of CP^m at Ric = g (twice the bisectional value).
inline double cpm_holomorphic_sectional(int m) { return 2.0 * models::complex_form_with_ricci(1.0, m).c; }

// ---------------------------------------------------------------------------
// Geodesic sphere area on S^2 x S^2
// ---------------------------------------------------------------------------

namespace detail {

// r sin(r c) sin(r s) / (c s) with the removable limits at c, s -> 0.
inline double product_jacobian(double r, double c, double s) {
  const double a = c == 0.0 ? r : std::sin(r * c) / c;
  const double b = s == 0.0 ? r : std::sin(r * s) / s;
  return r * a * b;
}

}  // namespace detail

/// Area of the distance-r sphere in S^2 x S^2 (unit Gauss curvature factors).
///
/// Directions (cos phi theta_1, sin phi theta_2) carry the measure
/// cos phi sin phi dphi dtheta_1 dtheta_2; a direction is minimizing up to r
/// while both factor distances stay <= pi.
inline double product_sphere_area(double r, const numerics::QuadratureOptions& opt = {}) {
  if (!(r > 0.0) || !(r < std::sqrt(2.0) * kPi)) {
    throw DomainError("product_sphere_area: need 0 < r < sqrt(2) pi");
  }
  double lo = 0.0;
  double hi = kPi / 2;
  if (r > kPi) {
    lo = std::acos(kPi / r);
    hi = std::asin(kPi / r);
  }
  const double integral =
      numerics::integrate([r](double phi) { return std::sin(r * std::cos(phi)) * std::sin(r * std::sin(phi)); },
                          lo, hi, opt);
  return 4.0 * kPi * kPi * r * integral;
}

struct MonteCarloEstimate {
  double mean = 0.0;
  double standard_error = 0.0;
  std::size_t samples = 0;
};

/// Same area by averaging the Jacobian over uniform directions on S^3.
inline MonteCarloEstimate product_sphere_area_mc(double r, std::size_t samples, std::uint64_t seed) {
  if (!(r > 0.0) || !(r < std::sqrt(2.0) * kPi)) {
    throw DomainError("product_sphere_area_mc: need 0 < r < sqrt(2) pi");
  }
  if (samples < 2) throw ConfigError("product_sphere_area_mc: need at least two samples");
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  double sum = 0.0;
  double sum_sq = 0.0;
  for (std::size_t i = 0; i < samples; ++i) {
    const double x1 = normal(rng), x2 = normal(rng), x3 = normal(rng), x4 = normal(rng);
    const double norm = std::sqrt(x1 * x1 + x2 * x2 + x3 * x3 + x4 * x4);
    const double c = std::hypot(x1, x2) / norm;
    const double s = std::hypot(x3, x4) / norm;
    const double val = (r * c <= kPi && r * s <= kPi) ? detail::product_jacobian(r, c, s) : 0.0;
    sum += val;
    sum_sq += val * val;
  }
  const double n = static_cast<double>(samples);
  const double mean = sum / n;
  const double var = std::max(0.0, (sum_sq / n - mean * mean) * n / (n - 1.0));
  const double total = 2.0 * kPi * kPi;
  return {total * mean, total * std::sqrt(var / n), samples};
}

/// CP^2 at Ric = g; undefined beyond its diameter.
inline double cp2_sphere_area(double r) {
  return models::model_area(models::complex_form_with_ricci(1.0, 2), r);
}

// ---------------------------------------------------------------------------
// Laplacian of distance along the diagonal
// ---------------------------------------------------------------------------

enum class DiagonalFamily { spheres, hyperbolic };

inline double family_curvature(DiagonalFamily f) { return f == DiagonalFamily::spheres ? 1.0 : -1.0; }

inline std::string family_name(DiagonalFamily f) { return f == DiagonalFamily::spheres ? "spheres" : "hyperbolic"; }

struct DiagonalComparison {
  double product = 0.0;  // real Laplacian of distance on the product
  double model = 0.0;    // complex space form with the same Ricci constant
  Verdict verdict;
};

/// Chain rule on d = sqrt(d_1^2 + d_2^2) at d_1 = d_2 = r / sqrt 2:
/// Lap d = sum (d_i/d) Lap d_i + (1/d)(sum |grad d_i|^2 - sum (d_i/d)^2).
inline double diagonal_product_laplacian(DiagonalFamily family, double r) {
  const double K = family_curvature(family);
  const double ri = r / std::sqrt(2.0);
  const double factor_lap = models::model_laplacian_real(models::RealSpaceForm(K, 2), ri);
  return 2.0 * (ri / r) * factor_lap + (2.0 - 2.0 * (ri / r) * (ri / r)) / r;
}

inline DiagonalComparison diagonal_laplacian_comparison(DiagonalFamily family, double r) {
  const double K = family_curvature(family);
  const auto model_space = models::complex_form_with_ricci(K, 2);
  const double limit = std::min(std::sqrt(2.0) * models::diameter(models::RealSpaceForm(K, 2)),
                                models::diameter(model_space));
  if (!(r > 0.0) || !(r < limit)) throw DomainError("diagonal_laplacian_comparison: r outside both diameters");
  DiagonalComparison out;
  out.product = diagonal_product_laplacian(family, r);
  out.model = models::model_laplacian_real(model_space, r);
  out.verdict.name = "diagonal_laplacian_" + family_name(family);
  out.verdict.anchor = family == DiagonalFamily::spheres ? "product above CP^2 on the diagonal"
                                                         : "product below CH^2 on the diagonal";
  out.verdict.tolerance = 0.0;
  const double margin = family == DiagonalFamily::spheres ? out.product - out.model : out.model - out.product;
  out.verdict.observe(margin, r);
  // Strict inequality: a zero margin must not pass.
  if (!(margin > 0.0)) out.verdict.precondition_ok = false;
  return out;
}

/// Independent path: 4-dimensional finite-difference Laplacian of the product
/// distance in stereographic charts, metric (2 / (1 + K|x|^2))^2 |dx|^2 per factor.
inline double diagonal_product_laplacian_fd(DiagonalFamily family, double r, long double h = 1e-3L,
                                            int order = 4) {
  using fd::Real;
  const Real K = family_curvature(family);
  const Real sk = std::sqrt(std::abs(K));
  auto factor_distance = [&](Real x, Real y) {
    const Real rho = std::sqrt(x * x + y * y);
    return K > 0 ? 2 / sk * std::atan(sk * rho) : 2 / sk * std::atanh(sk * rho);
  };
  auto dist = [&](const fd::RVec& p) {
    const Real d1 = factor_distance(p[0], p[1]);
    const Real d2 = factor_distance(p[2], p[3]);
    return std::sqrt(d1 * d1 + d2 * d2);
  };
  const Real ri = static_cast<Real>(r) / std::sqrt(Real(2));
  const Real xi = (K > 0 ? std::tan(sk * ri / 2) : std::tanh(sk * ri / 2)) / sk;
  fd::RVec p(4);
  p << xi, 0, xi, 0;
  const fd::Stencil s{h, order};
  const Real lam = 2 / (1 + K * xi * xi);
  Real lap = 0;
  for (int i = 0; i < 4; ++i) lap += fd::d2(dist, p, i, i, s);
  return static_cast<double>(lap / (lam * lam));
}

// ---------------------------------------------------------------------------
// Volume entropy direction
// ---------------------------------------------------------------------------

struct EntropyGap {
  double complex_model = 0.0;  // entropy of the complex space form with Ric = -(2m-1)
  double real_benchmark = 0.0;  // 2m - 1, real hyperbolic space of dimension 2m
  [[nodiscard]] double gap() const { return real_benchmark - complex_model; }
};

/// Entropies at Ric = -(2m-1) g, with lengths multiplied by `length_scale`.
inline EntropyGap entropy_gap_demo(int m, double length_scale = 1.0) {
  if (m < 2) throw ConfigError("entropy_gap_demo: m must be >= 2");
  if (!(length_scale > 0.0)) throw ConfigError("entropy_gap_demo: length scale must be positive");
  const double s2 = length_scale * length_scale;
  const auto complex_form = models::complex_form_with_ricci(-(2.0 * m - 1.0) / s2, m);
  const models::RealSpaceForm real_form(-1.0 / s2, 2 * m);
  return {models::volume_entropy(complex_form), models::volume_entropy(real_form)};
}

// ---------------------------------------------------------------------------
// Report
// ---------------------------------------------------------------------------

struct ReportRow {
  std::string quantity;
  double reference_value = 0.0;
  double computed = 0.0;
  [[nodiscard]] double abs_error() const { return std::abs(computed - reference_value); }
};

/// Closed-form numbers recomputed through the library, each against a literal formula.
inline std::vector<ReportRow> closed_form_report() {
  std::vector<ReportRow> rows;
  for (int m : {2, 3, 4}) {
    rows.push_back({"diam_product_m" + std::to_string(m), std::sqrt(static_cast<double>(m)) * kPi,
                    product_diameter(m)});
    rows.push_back({"diam_cpm_m" + std::to_string(m), kPi / std::sqrt(2.0 / (m + 1)), cpm_diameter(m)});
    rows.push_back({"holomorphic_sectional_m" + std::to_string(m), 2.0 / (m + 1), cpm_holomorphic_sectional(m)});
  }
  for (int m = 2; m <= 6; ++m) {
    rows.push_back({"entropy_complex_m" + std::to_string(m),
                    2.0 * m * std::sqrt((2.0 * m - 1.0) / (2.0 * (m + 1.0))), entropy_gap_demo(m).complex_model});
  }
  return rows;
}

/// Inequality verdicts for the product example.
inline std::vector<Verdict> inequality_report(std::size_t mc_samples = 1'000'000, std::uint64_t seed = 42) {
  std::vector<Verdict> out;

  Verdict diam;
  diam.name = "diameter_product_exceeds_cpm";
  diam.anchor = "diam(S^2 x ... x S^2) > diam(CP^m) at Ric = g";
  for (int m = 2; m <= 10; ++m) diam.observe(product_diameter(m) - cpm_diameter(m), m);
  if (!(diam.worst_margin > 0.0)) diam.precondition_ok = false;
  out.push_back(diam);

  Verdict area;
  area.name = "small_radius_area_below_cp2";
  area.anchor = "A_product(r) <= A_CP2(r) on (0, 0.5]";
  for (int i = 1; i <= 50; ++i) {
    const double r = 0.01 * i;
    const double a_cp2 = cp2_sphere_area(r);
    area.observe((a_cp2 - product_sphere_area(r)) / a_cp2, r);
  }
  out.push_back(area);

  Verdict beyond;
  beyond.name = "area_beyond_cp2_diameter";
  beyond.anchor = "at r = 4 the CP^2 sphere is empty while the product sphere is not";
  {
    bool cp2_undefined = false;
    try {
      (void)cp2_sphere_area(4.0);
    } catch (const DomainError&) {
      cp2_undefined = true;
    }
    const double a = product_sphere_area(4.0);
    beyond.observe(a, 4.0);
    if (!cp2_undefined || !(a > 0.0)) beyond.precondition_ok = false;
  }
  out.push_back(beyond);

  out.push_back(diagonal_laplacian_comparison(DiagonalFamily::spheres, 1.0).verdict);
  out.push_back(diagonal_laplacian_comparison(DiagonalFamily::hyperbolic, 1.0).verdict);

  Verdict mc;
  mc.name = "area_quadrature_vs_monte_carlo";
  mc.anchor = "quadrature within 3 standard errors of Monte Carlo";
  for (double r : {0.5, 1.0, 2.0}) {
    const auto est = product_sphere_area_mc(r, mc_samples, seed);
    mc.observe(3.0 * est.standard_error - std::abs(product_sphere_area(r) - est.mean), r);
  }
  out.push_back(mc);
  return out;
}

}  // namespace kahlerlab::examples
