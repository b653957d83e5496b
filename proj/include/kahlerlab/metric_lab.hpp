#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstdint>
#include <functional>
#include <memory>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <nlohmann/json.hpp>

#include "kahlerlab/core.hpp"
#include "kahlerlab/numerics/finite_difference.hpp"
#include "kahlerlab/parallel.hpp"

namespace kahlerlab::metric_lab {

using fd::Real;
using fd::RMat;
using fd::RVec;
using fd::Stencil;
using Cplx = std::complex<Real>;
using CVec = Eigen::Matrix<Cplx, Eigen::Dynamic, 1>;
using CMat = Eigen::Matrix<Cplx, Eigen::Dynamic, Eigen::Dynamic>;

// Points of C^m are stored as real vectors (x_1..x_m, y_1..y_m), z_a = x_a + i y_a.

inline RVec real_point(const std::vector<Cplx>& z) {
  const auto m = static_cast<Eigen::Index>(z.size());
  RVec p(2 * m);
  for (Eigen::Index a = 0; a < m; ++a) {
    p[a] = z[static_cast<std::size_t>(a)].real();
    p[m + a] = z[static_cast<std::size_t>(a)].imag();
  }
  return p;
}

inline CVec complex_point(const RVec& p) {
  const Eigen::Index m = p.size() / 2;
  CVec z(m);
  for (Eigen::Index a = 0; a < m; ++a) z[a] = Cplx(p[a], p[m + a]);
  return z;
}

struct Interval {
  Real lo = -1;
  Real hi = 1;
};

/// A Hermitian metric g_{ab̄} on a coordinate box of C^m.
struct ChartMetric {
  std::string name;
  int m = 2;
  std::vector<Interval> domain;  // 2m intervals, same ordering as real points
  std::function<CMat(const RVec&)> g;

  [[nodiscard]] bool contains(const RVec& p, Real margin = 0) const {
    if (p.size() != 2 * m || domain.size() != static_cast<std::size_t>(2 * m)) return false;
    for (Eigen::Index i = 0; i < p.size(); ++i) {
      const auto& iv = domain[static_cast<std::size_t>(i)];
      if (!(p[i] - margin >= iv.lo && p[i] + margin <= iv.hi)) return false;
    }
    return true;
  }

  void require_inside(const RVec& p, Real margin) const {
    if (!contains(p, margin)) {
      throw DomainError("metric '" + name + "': point or stencil leaves the chart box");
    }
  }

  /// g at p after checking that it is Hermitian positive definite.
  [[nodiscard]] CMat at(const RVec& p) const {
    CMat G = g(p);
    if ((G - G.adjoint()).cwiseAbs().maxCoeff() > 1e-12L * (1 + G.cwiseAbs().maxCoeff())) {
      throw DomainError("metric '" + name + "' is not Hermitian at the queried point");
    }
    Eigen::LLT<CMat> llt(G);
    if (llt.info() != Eigen::Success) {
      throw DomainError("metric '" + name + "' is not positive definite at the queried point");
    }
    return G;
  }
};

/// A smooth real function on the chart.
struct ScalarField {
  std::string name;
  std::function<Real(const RVec&)> f;
  Real operator()(const RVec& p) const { return f(p); }
};

// ---------------------------------------------------------------------------
// Polynomial potentials and fields: sums of Re(c z^a zbar^b)
// ---------------------------------------------------------------------------

struct Monomial {
  Cplx coeff{1, 0};
  std::vector<int> a;  // holomorphic exponents
  std::vector<int> b;  // antiholomorphic exponents
};

namespace detail {

inline Cplx ipow(Cplx z, int k) {
  Cplx out(1, 0);
  for (int i = 0; i < k; ++i) out *= z;
  return out;
}

inline Cplx monomial_value(const CVec& z, const std::vector<int>& a, const std::vector<int>& b) {
  Cplx out(1, 0);
  for (Eigen::Index i = 0; i < z.size(); ++i) {
    out *= ipow(z[i], a[static_cast<std::size_t>(i)]) *
           ipow(std::conj(z[i]), b[static_cast<std::size_t>(i)]);
  }
  return out;
}

inline void validate_monomials(int m, const std::vector<Monomial>& terms) {
  for (const auto& t : terms) {
    if (t.a.size() != static_cast<std::size_t>(m) || t.b.size() != static_cast<std::size_t>(m)) {
      throw ConfigError("monomial exponent vectors must have length m");
    }
    for (int e : t.a) {
      if (e < 0) throw ConfigError("monomial exponents must be nonnegative");
    }
    for (int e : t.b) {
      if (e < 0) throw ConfigError("monomial exponents must be nonnegative");
    }
  }
}

inline std::vector<Interval> box(int m, Real half_width) {
  return std::vector<Interval>(static_cast<std::size_t>(2 * m), Interval{-half_width, half_width});
}

}  // namespace detail

inline Real polynomial_value(const std::vector<Monomial>& terms, const RVec& p) {
  const CVec z = complex_point(p);
  Real out = 0;
  for (const auto& t : terms) out += std::real(t.coeff * detail::monomial_value(z, t.a, t.b));
  return out;
}

/// Exact d_a d_bbar of the potential sum Re(c z^a zbar^b).
inline CMat polynomial_levi_form(int m, const std::vector<Monomial>& terms, const RVec& p) {
  const CVec z = complex_point(p);
  CMat G = CMat::Zero(m, m);
  for (const auto& t : terms) {
    // Re(c z^a zbar^b) = (c z^a zbar^b + conj(c) z^b zbar^a) / 2
    for (int al = 0; al < m; ++al) {
      for (int be = 0; be < m; ++be) {
        const auto ua = static_cast<std::size_t>(al);
        const auto ub = static_cast<std::size_t>(be);
        if (t.a[ua] > 0 && t.b[ub] > 0) {
          auto a = t.a;
          auto b = t.b;
          --a[ua];
          --b[ub];
          G(al, be) += Real(0.5) * t.coeff * Real(t.a[ua] * t.b[ub]) * detail::monomial_value(z, a, b);
        }
        if (t.b[ua] > 0 && t.a[ub] > 0) {
          auto a = t.a;
          auto b = t.b;
          --b[ua];
          --a[ub];
          G(al, be) += Real(0.5) * std::conj(t.coeff) * Real(t.b[ua] * t.a[ub]) *
                       detail::monomial_value(z, b, a);
        }
      }
    }
  }
  return G;
}

// ---------------------------------------------------------------------------
// Builtin metrics
// ---------------------------------------------------------------------------

inline ChartMetric flat(int m, Real half_width = 1) {
  if (m < 1) throw ConfigError("flat: m must be positive");
  return {"flat", m, detail::box(m, half_width), [m](const RVec&) { return CMat::Identity(m, m).eval(); }};
}

namespace detail {

// Levi form of log(1 + c|z|^2)/c.
inline CMat projective_levi_form(int m, Real c, const RVec& p) {
  const CVec z = complex_point(p);
  const Real q = 1 + c * z.squaredNorm();
  if (!(q > 0)) throw DomainError("point outside the ball where 1 + c|z|^2 > 0");
  CMat G = CMat::Identity(m, m) / q;
  G -= (c / (q * q)) * (z.conjugate() * z.transpose());
  return G;
}

}  // namespace detail

/// Constant holomorphic bisectional curvature c > 0, Ricci = (m+1) c g.
inline ChartMetric fubini_study(int m, Real c, Real half_width = 1) {
  if (m < 1) throw ConfigError("fubini_study: m must be positive");
  if (!(c > 0)) throw ConfigError("fubini_study: curvature scale must be positive");
  return {"fubini_study", m, detail::box(m, half_width),
          [m, c](const RVec& p) { return detail::projective_levi_form(m, c, p); }};
}

/// Constant holomorphic bisectional curvature c < 0 on the ball |z|^2 < 1/|c|.
inline ChartMetric complex_hyperbolic(int m, Real c, Real half_width = 0) {
  if (m < 1) throw ConfigError("complex_hyperbolic: m must be positive");
  if (!(c < 0)) throw ConfigError("complex_hyperbolic: curvature scale must be negative");
  // The box corners must stay inside the ball: 2 m w^2 < 1/|c|.
  const Real w_max = std::sqrt(1 / (2 * m * -c));
  if (half_width <= 0) half_width = Real(0.85) * w_max;
  if (half_width >= w_max) throw ConfigError("complex_hyperbolic: chart box leaves the ball");
  return {"complex_hyperbolic", m, detail::box(m, half_width),
          [m, c](const RVec& p) { return detail::projective_levi_form(m, c, p); }};
}

/// Product of Fubini-Study lines; factor a has Gauss curvature 2 scales[a].
inline ChartMetric product_p1(const std::vector<Real>& scales, Real half_width = 1) {
  const int m = static_cast<int>(scales.size());
  if (m < 1) throw ConfigError("product_p1: need at least one factor");
  for (Real s : scales) {
    if (!(s > 0)) throw ConfigError("product_p1: factor scales must be positive");
  }
  return {"product_p1", m, detail::box(m, half_width), [m, scales](const RVec& p) {
            CMat G = CMat::Zero(m, m);
            for (int a = 0; a < m; ++a) {
              const Real r2 = p[a] * p[a] + p[m + a] * p[m + a];
              const Real q = 1 + scales[static_cast<std::size_t>(a)] * r2;
              G(a, a) = 1 / (q * q);
            }
            return G;
          }};
}

/// Constant positive multiple of another metric.
inline ChartMetric scaled(const ChartMetric& base, Real factor) {
  if (!(factor > 0)) throw ConfigError("scaled: factor must be positive");
  auto g = base.g;
  return {"scaled(" + base.name + ")", base.m, base.domain,
          [g, factor](const RVec& p) { return (factor * g(p)).eval(); }};
}

/// Metric generated by the potential Re sum c z^a zbar^b.
inline ChartMetric polynomial_potential(int m, std::vector<Monomial> terms, Real half_width = 1) {
  detail::validate_monomials(m, terms);
  return {"polynomial", m, detail::box(m, half_width),
          [m, terms = std::move(terms)](const RVec& p) { return polynomial_levi_form(m, terms, p); }};
}

/// Hermitian but not Kähler: identity plus eps * x_1 in the (1,2) slots.
/// Used as a negative control for kahler_defect.
inline ChartMetric hermitian_non_kahler(int m, Real eps, Real half_width = 1) {
  if (m < 2) throw ConfigError("hermitian_non_kahler: need m >= 2");
  return {"hermitian_non_kahler", m, detail::box(m, half_width), [m, eps](const RVec& p) {
            CMat G = CMat::Identity(m, m);
            G(0, 1) = eps * p[0];
            G(1, 0) = eps * p[0];
            return G;
          }};
}

struct MetricParams {
  int m = 2;
  Real scale = 1;                 // curvature c for the projective families
  std::vector<Real> scales;       // product_p1 factors; defaults to `scale`
  std::vector<Interval> domain;   // empty: family default
  Real factor = 1;                // scaled
  std::string base = "flat";      // scaled
  std::vector<Monomial> potential;
};

inline ChartMetric builtin_metric(const std::string& family, const MetricParams& prm) {
  ChartMetric out;
  if (family == "flat") {
    out = flat(prm.m);
  } else if (family == "fubini_study") {
    out = fubini_study(prm.m, prm.scale);
  } else if (family == "complex_hyperbolic") {
    out = complex_hyperbolic(prm.m, prm.scale);
  } else if (family == "product_p1") {
    out = product_p1(prm.scales.empty() ? std::vector<Real>(static_cast<std::size_t>(prm.m), prm.scale)
                                        : prm.scales);
  } else if (family == "scaled") {
    if (prm.base == "scaled") throw ConfigError("scaled: base family cannot itself be scaled");
    MetricParams inner = prm;
    inner.domain.clear();
    out = scaled(builtin_metric(prm.base, inner), prm.factor);
  } else if (family == "polynomial") {
    out = polynomial_potential(prm.m, prm.potential);
  } else {
    throw ConfigError("unknown metric family '" + family + "'");
  }
  if (!prm.domain.empty()) {
    if (prm.domain.size() != static_cast<std::size_t>(2 * out.m)) {
      throw ConfigError("metric domain needs 2m intervals");
    }
    for (const auto& iv : prm.domain) {
      if (!(iv.hi > iv.lo)) throw ConfigError("metric domain interval must have hi > lo");
    }
    out.domain = prm.domain;
  }
  return out;
}

namespace detail {

inline std::vector<Monomial> monomials_from_json(const nlohmann::json& arr) {
  std::vector<Monomial> out;
  for (const auto& t : arr) {
    Monomial mono;
    mono.coeff = Cplx(t.value("re", 0.0), t.value("im", 0.0));
    mono.a = t.at("a").get<std::vector<int>>();
    mono.b = t.at("b").get<std::vector<int>>();
    out.push_back(std::move(mono));
  }
  return out;
}

}  // namespace detail

/// {"family": ..., "m": int, "scale": float, "domain": [[lo, hi], ...]} plus
/// "scales" (product_p1), "base"/"factor" (scaled) and "potential" (polynomial,
/// a list of {"re", "im", "a": [...], "b": [...]}).
inline ChartMetric metric_from_json(const nlohmann::json& doc) {
  try {
    MetricParams prm;
    const auto family = doc.at("family").get<std::string>();
    prm.m = doc.value("m", 2);
    prm.scale = doc.value("scale", 1.0);
    if (doc.contains("scales")) {
      for (double s : doc.at("scales").get<std::vector<double>>()) prm.scales.push_back(s);
    }
    if (doc.contains("domain")) {
      for (const auto& iv : doc.at("domain")) {
        if (iv.size() != 2) throw ConfigError("domain entries must be [lo, hi]");
        prm.domain.push_back({iv[0].get<double>(), iv[1].get<double>()});
      }
    }
    prm.factor = doc.value("factor", 1.0);
    prm.base = doc.value("base", std::string("flat"));
    if (doc.contains("potential")) prm.potential = detail::monomials_from_json(doc.at("potential"));
    return builtin_metric(family, prm);
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("metric JSON: ") + e.what());
  }
}

// ---------------------------------------------------------------------------
// Builtin fields
// ---------------------------------------------------------------------------

inline ScalarField polynomial_field(int m, std::vector<Monomial> terms) {
  detail::validate_monomials(m, terms);
  return {"polynomial", [terms = std::move(terms)](const RVec& p) { return polynomial_value(terms, p); }};
}

/// Named closed-form test functions. All need m >= 2 except "linear",
/// "quadratic_linear" and "holomorphic_quadratic".
inline ScalarField builtin_field(const std::string& name, int m) {
  if (name == "linear") {  // Re z_1
    return {name, [](const RVec& p) { return p[0]; }};
  }
  if (name == "quadratic_linear") {  // |z|^2 + Re z_1
    return {name, [](const RVec& p) { return p.squaredNorm() + p[0]; }};
  }
  if (name == "holomorphic_quadratic") {  // Re z_1^2
    return {name, [m](const RVec& p) { return p[0] * p[0] - p[m] * p[m]; }};
  }
  if (name == "radial_potential") {  // |z|^2 / (1 + |z|^2)
    return {name, [](const RVec& p) {
              const Real s = p.squaredNorm();
              return s / (1 + s);
            }};
  }
  if (name == "log_radial") {  // log(1 + |z|^2)
    return {name, [](const RVec& p) { return std::log1p(p.squaredNorm()); }};
  }
  if (m < 2) throw ConfigError("field '" + name + "' needs m >= 2");
  if (name == "trig") {
    return {name, [m](const RVec& p) {
              return p[0] + Real(0.5) * p.squaredNorm() +
                     Real(0.3) * std::sin(p[0] + 2 * p[m] - p[1]) +
                     Real(0.2) * std::cos(p[m + 1] + Real(0.5) * p[0]);
            }};
  }
  if (name == "exp_mix") {
    return {name, [m](const RVec& p) {
              return std::exp(Real(0.5) * p[0] - Real(0.3) * p[m + 1]) * (1 + Real(0.25) * p.squaredNorm()) +
                     Real(0.4) * p[1];
            }};
  }
  throw ConfigError("unknown field '" + name + "'");
}

/// Seeded random polynomial of total degree <= 4 plus Re z_1, so that the
/// gradient stays away from zero on a unit box.
inline ScalarField random_polynomial_field(int m, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> coef(-0.25, 0.25);
  std::uniform_int_distribution<int> pick(0, m - 1);
  std::vector<Monomial> terms;
  terms.push_back({Cplx(1, 0), std::vector<int>(static_cast<std::size_t>(m), 0),
                   std::vector<int>(static_cast<std::size_t>(m), 0)});
  terms.back().a[0] = 1;
  for (int degree = 2; degree <= 4; ++degree) {
    for (int rep = 0; rep < 3; ++rep) {
      Monomial t;
      t.coeff = Cplx(coef(rng), coef(rng));
      t.a.assign(static_cast<std::size_t>(m), 0);
      t.b.assign(static_cast<std::size_t>(m), 0);
      for (int d = 0; d < degree; ++d) {
        const auto idx = static_cast<std::size_t>(pick(rng));
        (d % 2 == 0 ? t.a : t.b)[idx] += 1;
      }
      terms.push_back(std::move(t));
    }
  }
  auto field = polynomial_field(m, std::move(terms));
  field.name = "random_polynomial";
  return field;
}

// ---------------------------------------------------------------------------
// Complex calculus on the real chart
// ---------------------------------------------------------------------------

/// Real metric 2 [[A, B], [-B, A]] for g = A + iB in (x, y) block coordinates.
inline RMat real_metric(const CMat& G) {
  const Eigen::Index m = G.rows();
  RMat out(2 * m, 2 * m);
  const RMat A = G.real();
  const RMat B = G.imag();
  out.topLeftCorner(m, m) = 2 * A;
  out.topRightCorner(m, m) = 2 * B;
  out.bottomLeftCorner(m, m) = -2 * B;
  out.bottomRightCorner(m, m) = 2 * A;
  return out;
}

/// (d_a f) from real partials: (f_x - i f_y) / 2.
inline CVec holomorphic_part(const RVec& df) {
  const Eigen::Index m = df.size() / 2;
  CVec out(m);
  for (Eigen::Index a = 0; a < m; ++a) out[a] = Cplx(df[a], -df[m + a]) / Real(2);
  return out;
}

/// d_a d_bbar f from the real Hessian.
inline CMat mixed_from_real(const RMat& hess) {
  const Eigen::Index m = hess.rows() / 2;
  CMat out(m, m);
  for (Eigen::Index a = 0; a < m; ++a) {
    for (Eigen::Index b = 0; b < m; ++b) {
      out(a, b) = Cplx(hess(a, b) + hess(m + a, m + b), hess(a, m + b) - hess(m + a, b)) / Real(4);
    }
  }
  return out;
}

/// d_a d_b f from the real Hessian.
inline CMat holomorphic_from_real(const RMat& hess) {
  const Eigen::Index m = hess.rows() / 2;
  CMat out(m, m);
  for (Eigen::Index a = 0; a < m; ++a) {
    for (Eigen::Index b = 0; b < m; ++b) {
      out(a, b) = Cplx(hess(a, b) - hess(m + a, m + b), -(hess(a, m + b) + hess(m + a, b))) / Real(4);
    }
  }
  return out;
}

/// d_a of a matrix-valued function: (d_x - i d_y) / 2.
template <class F>
CMat complex_partial(const F& fun, const RVec& p, Eigen::Index a, Eigen::Index m, const Stencil& s) {
  const CMat dx = fd::d1(fun, p, a, s);
  const CMat dy = fd::d1(fun, p, m + a, s);
  return (dx - Cplx(0, 1) * dy) / Real(2);
}

/// Hermitian inner product h(a, b) = a^T g conj(b) on (1,0) vectors.
inline Cplx hermitian(const CMat& G, const CVec& a, const CVec& b) {
  return (a.transpose() * G * b.conjugate())(0, 0);
}

inline Real log_det(const CMat& G) {
  Eigen::LLT<CMat> llt(G);
  if (llt.info() != Eigen::Success) throw DomainError("metric is singular or indefinite at a stencil node");
  Real out = 0;
  for (Eigen::Index i = 0; i < G.rows(); ++i) out += 2 * std::log(llt.matrixL()(i, i).real());
  return out;
}

namespace detail {

inline void check_stencil(const ChartMetric& metric, const RVec& p, const Stencil& s) {
  s.validate();
  if (p.size() != 2 * metric.m) throw ConfigError("point dimension does not match 2m");
  metric.require_inside(p, 4 * s.h);
}

}  // namespace detail

/// max |d_c g_{ab̄} - d_a g_{cb̄}| by central differences.
inline Real kahler_defect(const ChartMetric& metric, const RVec& p, const Stencil& s) {
  detail::check_stencil(metric, p, s);
  const int m = metric.m;
  auto g = [&](const RVec& q) { return metric.at(q); };
  std::vector<CMat> dG;
  for (int a = 0; a < m; ++a) dG.push_back(complex_partial(g, p, a, m, s));
  Real worst = 0;
  for (int a = 0; a < m; ++a) {
    for (int b = 0; b < m; ++b) {
      for (int c = 0; c < m; ++c) worst = std::max(worst, std::abs(dG[c](a, b) - dG[a](c, b)));
    }
  }
  return worst;
}

/// Ric_{ab̄} = -d_a d_bbar log det g, symmetrized to be exactly Hermitian.
inline CMat ricci(const ChartMetric& metric, const RVec& p, const Stencil& s) {
  detail::check_stencil(metric, p, s);
  auto L = [&](const RVec& q) { return log_det(metric.at(q)); };
  CMat R = -mixed_from_real(fd::hessian(L, p, s));
  return ((R + R.adjoint()) / Real(2)).eval();
}

struct ComplexHessian {
  CMat mixed;  // f_{ab̄}
  CMat holo;   // f_{ab}, covariant
  CVec grad;   // f_a
};

namespace detail {

inline ComplexHessian complex_hessian_unchecked(const ScalarField& field, const ChartMetric& metric,
                                                const RVec& p, const Stencil& s) {
  const int m = metric.m;
  const RMat hess = fd::hessian(field.f, p, s);
  ComplexHessian out;
  out.grad = holomorphic_part(fd::gradient(field.f, p, s));
  out.mixed = mixed_from_real(hess);
  out.holo = holomorphic_from_real(hess);
  // f_{ab} -= Gamma^c_{ab} f_c with Gamma^c_{ab} = ((d_a G) G^{-1})_{bc}.
  auto g = [&](const RVec& q) { return metric.at(q); };
  const CMat Ginv = metric.at(p).inverse();
  for (int a = 0; a < m; ++a) {
    const CMat dGa = complex_partial(g, p, a, m, s);
    const CVec corr = dGa * (Ginv * out.grad);
    for (int b = 0; b < m; ++b) out.holo(a, b) -= corr[b];
  }
  return out;
}

}  // namespace detail

/// Mixed and covariant holomorphic second derivatives plus d_a f.
inline ComplexHessian complex_hessian(const ScalarField& field, const ChartMetric& metric, const RVec& p,
                                      const Stencil& s) {
  detail::check_stencil(metric, p, s);
  return detail::complex_hessian_unchecked(field, metric, p, s);
}

/// Complex Laplacian g^{ab̄} f_{ab̄} (half the real Beltrami Laplacian).
inline Real complex_laplacian(const CMat& G, const CMat& mixed) {
  return (G.inverse() * mixed).trace().real();
}

// ---------------------------------------------------------------------------
// Adapted frames
// ---------------------------------------------------------------------------

struct AdaptedFrame {
  RVec point;
  CMat E;               // columns e_1..e_m, h(e_a, e_b) = delta_ab
  int dropped = -1;     // coordinate direction skipped by Gram-Schmidt
};

struct FrameOptions {
  Real threshold = 1e-6L;    // refuse when |grad f| is at or below this
  std::vector<Real> phases;  // optional angles multiplying columns 2..m
};

namespace detail {

// (1,0) part of grad f: V = g^{-T} conj(d f); the real gradient is V + conj V.
inline CVec gradient_vector(const CMat& G, const CVec& df) { return G.transpose().inverse() * df.conjugate(); }

inline Real real_gradient_norm(const CMat& G, const CVec& V) {
  return std::sqrt(std::max(Real(0), 2 * hermitian(G, V, V).real()));
}

inline AdaptedFrame frame_from(const CMat& G, const CVec& V, Real grad_norm, const FrameOptions& opt) {
  const Eigen::Index m = G.rows();
  if (!(grad_norm > opt.threshold)) {
    throw VanishingGradientError("adapted frame: |grad f| below threshold");
  }
  AdaptedFrame out;
  out.E = CMat::Zero(m, m);
  out.E.col(0) = V * (std::sqrt(Real(2)) / grad_norm);
  // Drop the coordinate direction most aligned with e_1.
  Real best = -1;
  for (Eigen::Index mu = 0; mu < m; ++mu) {
    const CVec c = CVec::Unit(m, mu);
    const Real align = std::norm(hermitian(G, c, out.E.col(0))) / hermitian(G, c, c).real();
    if (align > best) {
      best = align;
      out.dropped = static_cast<int>(mu);
    }
  }
  Eigen::Index col = 1;
  for (Eigen::Index mu = 0; mu < m; ++mu) {
    if (mu == out.dropped) continue;
    CVec v = CVec::Unit(m, mu);
    for (Eigen::Index k = 0; k < col; ++k) v -= hermitian(G, v, out.E.col(k)) * out.E.col(k);
    const Real nrm = std::sqrt(hermitian(G, v, v).real());
    if (!(nrm > 1e-8L)) throw FrameBranchError("adapted frame: Gram-Schmidt degenerated");
    out.E.col(col) = v / nrm;
    ++col;
  }
  for (std::size_t k = 0; k < opt.phases.size() && static_cast<Eigen::Index>(k) + 1 < m; ++k) {
    out.E.col(static_cast<Eigen::Index>(k) + 1) *= std::polar(Real(1), opt.phases[k]);
  }
  return out;
}

}  // namespace detail

inline AdaptedFrame adapted_frame(const ScalarField& field, const ChartMetric& metric, const RVec& p,
                                  const Stencil& s, const FrameOptions& opt = {}) {
  detail::check_stencil(metric, p, s);
  const CMat G = metric.at(p);
  const CVec V = detail::gradient_vector(G, holomorphic_part(fd::gradient(field.f, p, s)));
  auto frame = detail::frame_from(G, V, detail::real_gradient_norm(G, V), opt);
  frame.point = p;
  return frame;
}

/// max |h(e_a, e_b) - delta_ab|.
inline Real frame_unitarity_residual(const AdaptedFrame& frame, const CMat& G) {
  const Eigen::Index m = G.rows();
  return (frame.E.transpose() * G * frame.E.conjugate() - CMat::Identity(m, m)).cwiseAbs().maxCoeff();
}

// ---------------------------------------------------------------------------
// Pointwise data shared by the identities
// ---------------------------------------------------------------------------

struct PointData {
  CMat G;
  CMat Ginv;
  CVec df;      // d_a f
  CMat mixed;   // f_{ab̄}
  CMat holo;    // covariant f_{ab}
  CVec V;       // (1,0) part of grad f
  Real grad_norm = 0;  // real |grad f|
  Real laplacian = 0;  // complex Laplacian
};

namespace detail {

inline PointData point_data(const ScalarField& field, const ChartMetric& metric, const RVec& q, const Stencil& s,
                            bool need_holo) {
  PointData d;
  d.G = metric.at(q);
  d.Ginv = d.G.inverse();
  const RMat hess = fd::hessian(field.f, q, s);
  d.df = holomorphic_part(fd::gradient(field.f, q, s));
  d.mixed = mixed_from_real(hess);
  if (need_holo) d.holo = complex_hessian_unchecked(field, metric, q, s).holo;
  d.V = gradient_vector(d.G, d.df);
  d.grad_norm = real_gradient_norm(d.G, d.V);
  d.laplacian = (d.Ginv * d.mixed).trace().real();
  return d;
}

// f_{11̄} = h-norm of H along e_1, written without choosing a phase.
inline Real f11(const PointData& d) {
  const CVec e1 = d.V * (std::sqrt(Real(2)) / d.grad_norm);
  return (e1.transpose() * d.mixed * e1.conjugate())(0, 0).real();
}

inline Real det_real(const CMat& G) { return std::exp(log_det(G)); }

// Real divergence of the real field attached to a (1,0) field X:
// (1/det g) sum_i d_i(det g * X_R^i) with X_R = (Re X, Im X).
template <class X>
Real real_divergence(const X& field10, const ChartMetric& metric, const RVec& p, const Stencil& s) {
  const Eigen::Index m = metric.m;
  Real acc = 0;
  for (Eigen::Index i = 0; i < 2 * m; ++i) {
    auto comp = [&](const RVec& q) {
      const CVec x = field10(q);
      const Real xi = i < m ? x[i].real() : x[i - m].imag();
      return det_real(metric.at(q)) * xi;
    };
    acc += fd::d1(comp, p, i, s);
  }
  return acc / det_real(metric.at(p));
}

// Complex divergence (1/det g) d_mu(det g X^mu) of a (1,0) field.
template <class X>
Cplx complex_divergence(const X& field10, const ChartMetric& metric, const RVec& p, const Stencil& s) {
  const Eigen::Index m = metric.m;
  Cplx acc = 0;
  for (Eigen::Index mu = 0; mu < m; ++mu) {
    auto comp = [&](const RVec& q) { return Cplx(det_real(metric.at(q))) * field10(q)[mu]; };
    const Cplx dx = fd::d1(comp, p, mu, s);
    const Cplx dy = fd::d1(comp, p, m + mu, s);
    acc += (dx - Cplx(0, 1) * dy) / Real(2);
  }
  return acc / det_real(metric.at(p));
}

inline Real sq_norm_mixed(const PointData& d) {
  return (d.mixed * d.Ginv * d.mixed * d.Ginv).trace().real();
}

inline Real sq_norm_holo(const PointData& d) {
  return (d.holo * d.Ginv.transpose() * d.holo.conjugate() * d.Ginv).trace().real();
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Bochner-type identity in the adapted frame
// ---------------------------------------------------------------------------

enum class FrameMode { projection, explicit_frame };

struct BochnerOptions {
  Real threshold = 1e-6L;
  FrameMode mode = FrameMode::projection;
  std::vector<Real> phases;  // explicit_frame only
};

/// Individual terms; residual() = lhs - (f11_laplacian - mixed_norm_sq + re_div_y).
struct BochnerTerms {
  Real lhs = 0;            // (1/2) <grad f, grad sum_{c != 1} f_{cc̄}>
  Real f11_laplacian = 0;  // f_{11̄} * Laplacian f
  Real mixed_norm_sq = 0;  // |f_{ab̄}|^2
  Real re_div_y = 0;

  [[nodiscard]] Real residual() const { return lhs - (f11_laplacian - mixed_norm_sq + re_div_y); }
};

inline BochnerTerms bochner_terms(const ScalarField& field, const ChartMetric& metric, const RVec& p,
                                  const Stencil& s, const BochnerOptions& opt = {}) {
  detail::check_stencil(metric, p, s);
  const int m = metric.m;
  const PointData c = detail::point_data(field, metric, p, s, false);
  if (!(c.grad_norm > opt.threshold)) throw VanishingGradientError("bochner: |grad f| below threshold at point");

  FrameOptions fopt{opt.threshold, opt.phases};
  const int branch = detail::frame_from(c.G, c.V, c.grad_norm, fopt).dropped;

  auto data_at = [&](const RVec& q) {
    PointData d = detail::point_data(field, metric, q, s, false);
    if (!(d.grad_norm > opt.threshold)) {
      throw VanishingGradientError("bochner: |grad f| below threshold on the stencil");
    }
    return d;
  };

  BochnerTerms t;
  // Left side: directional derivative of Q = Laplacian - f_{11̄} along the real gradient.
  auto Q = [&](const RVec& q) {
    const PointData d = data_at(q);
    return d.laplacian - detail::f11(d);
  };
  const RVec dfr = fd::gradient(field.f, p, s);
  const RVec grad_real = real_metric(c.G).ldlt().solve(dfr);
  t.lhs = fd::d_dir(Q, p, grad_real, s) / 2;

  t.f11_laplacian = detail::f11(c) * c.laplacian;
  t.mixed_norm_sq = detail::sq_norm_mixed(c);

  // Y = W - h(W, e_1) e_1 with W^c = f_abar f_{ac̄} in frame components.
  auto Y = [&](const RVec& q) -> CVec {
    const PointData d = data_at(q);
    const CVec W = d.G.transpose().inverse() * (d.mixed.transpose() * d.V);
    if (opt.mode == FrameMode::projection) {
      const CVec e1 = d.V * (std::sqrt(Real(2)) / d.grad_norm);
      return W - hermitian(d.G, W, e1) * e1;
    }
    const AdaptedFrame fr = detail::frame_from(d.G, d.V, d.grad_norm, fopt);
    if (fr.dropped != branch) throw FrameBranchError("bochner: adapted frame changes branch on the stencil");
    CVec out = CVec::Zero(m);
    for (int k = 1; k < m; ++k) out += hermitian(d.G, W, fr.E.col(k)) * fr.E.col(k);
    return out;
  };
  t.re_div_y = detail::real_divergence(Y, metric, p, s) / 2;
  return t;
}

/// Signed residual of the Bochner-type identity at p.
inline Real bochner_residual(const ScalarField& field, const ChartMetric& metric, const RVec& p, const Stencil& s,
                             const BochnerOptions& opt = {}) {
  return bochner_terms(field, metric, p, s, opt).residual();
}

// ---------------------------------------------------------------------------
// Decomposition of the Bochner formula
// ---------------------------------------------------------------------------

struct DecompositionResiduals {
  Real res22 = 0;  // |div W - |f_{ab̄}|^2 - (Lap f)_a f_abar|
  Real res23 = 0;  // |div U - |f_{ab}|^2 - (Lap f)_abar f_a - Ric(f_abar, f_b)|
  Real res21 = 0;  // |(1/2) Lap |grad f|^2 - (full right side)|
  /// |(r22 + r23) - (div(W + U) - full right side)| with signed complex residuals;
  /// zero up to rounding because divergence and right sides are linear.
  Real recombination = 0;
  /// |div(W + U) - (1/2) Lap |grad f|^2|, the product-rule step; O(h^order).
  Real product_rule_gap = 0;
};

inline DecompositionResiduals decomposition_residuals(const ScalarField& field, const ChartMetric& metric,
                                                      const RVec& p, const Stencil& s) {
  detail::check_stencil(metric, p, s);
  const PointData c = detail::point_data(field, metric, p, s, true);

  auto W = [&](const RVec& q) -> CVec {
    const PointData d = detail::point_data(field, metric, q, s, false);
    return d.G.transpose().inverse() * (d.mixed.transpose() * d.V);
  };
  auto U = [&](const RVec& q) -> CVec {
    const PointData d = detail::point_data(field, metric, q, s, true);
    return d.G.transpose().inverse() * (d.holo.conjugate() * (d.Ginv * d.df));
  };
  auto WU = [&](const RVec& q) -> CVec { return W(q) + U(q); };

  const Cplx divW = detail::complex_divergence(W, metric, p, s);
  const Cplx divU = detail::complex_divergence(U, metric, p, s);
  const Cplx divWU = detail::complex_divergence(WU, metric, p, s);

  auto lap = [&](const RVec& q) {
    const CMat G = metric.at(q);
    return (G.inverse() * mixed_from_real(fd::hessian(field.f, q, s))).trace().real();
  };
  const CVec dLap = holomorphic_part(fd::gradient(lap, p, s));
  const Cplx lap_term = (dLap.transpose() * c.V)(0, 0);  // (Lap f)_a f_abar
  const CMat R = ricci(metric, p, s);
  const Real ric_term = (c.V.transpose() * R * c.V.conjugate())(0, 0).real();
  const Real mixed_sq = detail::sq_norm_mixed(c);
  const Real holo_sq = detail::sq_norm_holo(c);

  auto grad_sq = [&](const RVec& q) {
    const CMat G = metric.at(q);
    const RVec dfr = fd::gradient(field.f, q, s);
    return dfr.dot(real_metric(G).ldlt().solve(dfr));
  };
  const Real lhs21 = (c.Ginv * mixed_from_real(fd::hessian(grad_sq, p, s))).trace().real() / 2;

  const Cplx rhs22 = mixed_sq + lap_term;
  const Cplx rhs23 = holo_sq + std::conj(lap_term) + ric_term;
  const Real rhs21 = holo_sq + mixed_sq + 2 * lap_term.real() + ric_term;

  DecompositionResiduals out;
  out.res22 = std::abs(divW - rhs22);
  out.res23 = std::abs(divU - rhs23);
  out.res21 = std::abs(lhs21 - rhs21);
  out.recombination = std::abs((divW - rhs22) + (divU - rhs23) - (divWU - rhs21));
  out.product_rule_gap = std::abs(divWU - lhs21);
  return out;
}

// ---------------------------------------------------------------------------
// Sweeps over sample points
// ---------------------------------------------------------------------------

/// Uniform random points inside the chart box shrunk by `margin`.
inline std::vector<RVec> sample_points(const ChartMetric& metric, std::size_t count, Real margin, std::mt19937_64& rng) {
  std::vector<RVec> out;
  out.reserve(count);
  for (std::size_t k = 0; k < count; ++k) {
    RVec p(2 * metric.m);
    for (Eigen::Index i = 0; i < p.size(); ++i) {
      const auto& iv = metric.domain[static_cast<std::size_t>(i)];
      std::uniform_real_distribution<double> u(static_cast<double>(iv.lo + margin), static_cast<double>(iv.hi - margin));
      p[i] = u(rng);
    }
    out.push_back(std::move(p));
  }
  return out;
}

struct SweepResult {
  std::vector<Real> residuals;  // NaN where the point was excluded
  std::size_t excluded = 0;

  [[nodiscard]] Real excluded_fraction() const {
    return residuals.empty() ? Real(0) : Real(excluded) / Real(residuals.size());
  }
  [[nodiscard]] Real max_abs() const {
    Real worst = 0;
    for (Real r : residuals) {
      if (!std::isnan(r)) worst = std::max(worst, std::abs(r));
    }
    return worst;
  }
};

/// Bochner residuals at many points. Points with |grad f| below
/// `exclude_below` are near-critical and skipped.
inline SweepResult sweep_bochner(const ScalarField& field, const ChartMetric& metric, const std::vector<RVec>& points,
                                 const Stencil& s, Real exclude_below = 1e-2L, std::size_t threads = 0) {
  SweepResult out;
  out.residuals.assign(points.size(), std::numeric_limits<Real>::quiet_NaN());
  std::vector<char> skipped(points.size(), 0);
  parallel_for(points.size(), threads, [&](std::size_t i) {
    const RVec& p = points[i];
    const CMat G = metric.at(p);
    const CVec V = detail::gradient_vector(G, holomorphic_part(fd::gradient(field.f, p, s)));
    if (!(detail::real_gradient_norm(G, V) > exclude_below)) {
      skipped[i] = 1;
      return;
    }
    try {
      out.residuals[i] = bochner_residual(field, metric, p, s);
    } catch (const VanishingGradientError&) {
      skipped[i] = 1;
    }
  });
  for (char c : skipped) out.excluded += static_cast<std::size_t>(c);
  return out;
}

}  // namespace kahlerlab::metric_lab
