#pragma once

#include <cmath>
#include <functional>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <boost/rational.hpp>
#include <nlohmann/json.hpp>

#include "kahlerlab/core.hpp"
#include "kahlerlab/numerics/finite_difference.hpp"

namespace kahlerlab::gradient {

using fd::Real;
using fd::RMat;
using fd::RVec;
using fd::Stencil;

// Real Riemannian conventions throughout: Lap is the Beltrami Laplacian and
// frames are orthonormal for g.

/// Riemannian metric g_ij on an open subset of R^n.
struct RealChart {
  std::string name;
  int n = 3;
  std::function<RMat(const RVec&)> g;
  std::function<bool(const RVec&)> inside;  // open domain test
};

inline RealChart flat_chart(int n) {
  if (n < 2) throw ConfigError("flat_chart: n must be >= 2");
  return {"flat", n, [n](const RVec&) { return RMat::Identity(n, n).eval(); }, [](const RVec&) { return true; }};
}

/// Upper half-space model (dx^2 + dy^2)/y^2 with y the last coordinate; sectional curvature -1.
inline RealChart hyperbolic_halfspace(int n) {
  if (n < 2) throw ConfigError("hyperbolic_halfspace: n must be >= 2");
  return {"hyperbolic_halfspace", n,
          [n](const RVec& p) {
            const Real y = p[n - 1];
            if (!(y > 0)) throw DomainError("hyperbolic_halfspace: need y > 0");
            return (RMat::Identity(n, n) / (y * y)).eval();
          },
          [n](const RVec& p) { return p[n - 1] > 0; }};
}

/// A positive function with a harmonicity budget and its test points.
struct HarmonicSample {
  std::string name;
  RealChart chart;
  std::function<Real(const RVec&)> f;
  Real harmonic_tolerance = 1e-8L;
  std::vector<RVec> points;
};

namespace detail {

inline RVec vec(std::initializer_list<Real> xs) {
  RVec out(static_cast<Eigen::Index>(xs.size()));
  Eigen::Index i = 0;
  for (Real x : xs) out[i++] = x;
  return out;
}

inline std::vector<RVec> default_points(int n, bool halfspace) {
  std::vector<RVec> pts;
  const Real offsets[] = {0.0L, 0.13L, -0.21L, 0.37L, -0.05L};
  const Real heights[] = {0.7L, 1.0L, 1.6L, 2.3L, 0.9L};
  for (int k = 0; k < 5; ++k) {
    RVec p(n);
    for (int i = 0; i < n; ++i) p[i] = offsets[(k + i) % 5] * (i + 1);
    if (halfspace) p[n - 1] = heights[k];
    pts.push_back(p);
  }
  return pts;
}

}  // namespace detail

/// Named samples:
///   flat_constant     flat R^n, f = 1 (gradient vanishes everywhere)
///   flat_linear       flat R^n, f = x_1 + 10
///   flat_newton       flat R^3, f = 1/|x - x0| with x0 = (0, 0, -3)
///   hyperbolic_power  half-space H^n, f = y^(n-1)
///   hyperbolic_poisson half-space H^n, f = (y / (|x - x0|^2 + y^2))^(n-1)
///   hyperbolic_sum    half-space H^n, f = y^(n-1) + 1
inline HarmonicSample builtin_sample(const std::string& name, int n) {
  HarmonicSample s;
  s.name = name;
  if (name == "flat_constant") {
    s.chart = flat_chart(n);
    s.f = [](const RVec&) { return Real(1); };
    s.points = detail::default_points(n, false);
  } else if (name == "flat_linear") {
    s.chart = flat_chart(n);
    s.f = [](const RVec& p) { return p[0] + 10; };
    s.points = detail::default_points(n, false);
  } else if (name == "flat_newton") {
    if (n != 3) throw ConfigError("flat_newton is defined for n = 3");
    s.chart = flat_chart(3);
    s.f = [](const RVec& p) {
      const Real dz = p[2] + 3;
      return 1 / std::sqrt(p[0] * p[0] + p[1] * p[1] + dz * dz);
    };
    s.points = detail::default_points(3, false);
  } else if (name == "hyperbolic_power") {
    s.chart = hyperbolic_halfspace(n);
    s.f = [n](const RVec& p) { return std::pow(p[n - 1], Real(n - 1)); };
    s.points = detail::default_points(n, true);
  } else if (name == "hyperbolic_poisson") {
    s.chart = hyperbolic_halfspace(n);
    s.f = [n](const RVec& p) {
      Real q = 0;
      for (int i = 0; i + 1 < n; ++i) {
        const Real d = p[i] - Real(0.4);
        q += d * d;
      }
      const Real y = p[n - 1];
      return std::pow(y / (q + y * y), Real(n - 1));
    };
    s.points = detail::default_points(n, true);
  } else if (name == "hyperbolic_sum") {
    s.chart = hyperbolic_halfspace(n);
    s.f = [n](const RVec& p) { return std::pow(p[n - 1], Real(n - 1)) + 1; };
    s.points = detail::default_points(n, true);
  } else {
    throw ConfigError("unknown harmonic sample '" + name + "'");
  }
  return s;
}

/// {"metric": "flat" | "hyperbolic_halfspace", "n": int, "f": kind} where kind
/// is constant, linear, newton (flat) or power, poisson, sum (hyperbolic).
/// Optional "points": [[x_1, ..., x_n], ...] replaces the default points.
inline HarmonicSample sample_from_json(const nlohmann::json& doc) {
  try {
    const auto metric = doc.at("metric").get<std::string>();
    const int n = doc.at("n").get<int>();
    const auto kind = doc.at("f").get<std::string>();
    std::string prefix;
    if (metric == "flat") {
      prefix = "flat_";
    } else if (metric == "hyperbolic_halfspace") {
      prefix = "hyperbolic_";
    } else {
      throw ConfigError("sample: unknown metric '" + metric + "'");
    }
    HarmonicSample s = builtin_sample(prefix + kind, n);
    if (doc.contains("points")) {
      s.points.clear();
      for (const auto& pt : doc.at("points")) {
        const auto xs = pt.get<std::vector<double>>();
        if (static_cast<int>(xs.size()) != n) throw ConfigError("sample: point dimension does not match n");
        RVec p(n);
        for (int i = 0; i < n; ++i) p[i] = xs[static_cast<std::size_t>(i)];
        if (!s.chart.inside(p)) throw DomainError("sample: point outside the chart");
        s.points.push_back(p);
      }
    }
    return s;
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("sample JSON: ") + e.what());
  }
}

// ---------------------------------------------------------------------------
// Riemannian finite-difference calculus
// ---------------------------------------------------------------------------

namespace detail {

inline void check_point(const RealChart& chart, const RVec& p, const Stencil& s) {
  s.validate();
  if (p.size() != chart.n) throw ConfigError("point dimension does not match the chart");
  for (Eigen::Index i = 0; i < p.size(); ++i) {
    for (int sign : {-1, 1}) {
      RVec q = p;
      q[i] += sign * 8 * s.h;
      if (!chart.inside(q)) throw DomainError("stencil leaves the chart domain");
    }
  }
}

// Gamma[k](i, j) = Gamma^k_ij.
inline std::vector<RMat> christoffel(const RealChart& chart, const RVec& p, const Stencil& s) {
  const int n = chart.n;
  std::vector<RMat> dg;
  for (int l = 0; l < n; ++l) dg.push_back(fd::d1(chart.g, p, l, s));
  const RMat ginv = chart.g(p).inverse();
  std::vector<RMat> gamma(static_cast<std::size_t>(n), RMat::Zero(n, n));
  for (int k = 0; k < n; ++k) {
    for (int i = 0; i < n; ++i) {
      for (int j = 0; j < n; ++j) {
        Real acc = 0;
        for (int l = 0; l < n; ++l) acc += ginv(k, l) * (dg[i](j, l) + dg[j](i, l) - dg[l](i, j));
        gamma[k](i, j) = acc / 2;
      }
    }
  }
  return gamma;
}

template <class F>
RMat covariant_hessian(const F& fun, const RealChart& chart, const RVec& p, const Stencil& s) {
  RMat hess = fd::hessian(fun, p, s);
  const RVec d = fd::gradient(fun, p, s);
  const auto gamma = christoffel(chart, p, s);
  for (std::size_t k = 0; k < gamma.size(); ++k) hess -= gamma[k] * d[static_cast<Eigen::Index>(k)];
  return hess;
}

template <class F>
Real laplacian(const F& fun, const RealChart& chart, const RVec& p, const Stencil& s) {
  return (chart.g(p).inverse() * covariant_hessian(fun, chart, p, s)).trace();
}

}  // namespace detail

/// Ricci tensor R_ij by differences of Christoffel symbols.
inline RMat ricci_tensor(const RealChart& chart, const RVec& p, const Stencil& s) {
  const int n = chart.n;
  const auto gamma = detail::christoffel(chart, p, s);
  std::vector<std::vector<RMat>> dgamma(static_cast<std::size_t>(n));  // dgamma[l][k] = d_l Gamma^k
  for (int l = 0; l < n; ++l) {
    for (int k = 0; k < n; ++k) {
      auto comp = [&, k](const RVec& q) { return detail::christoffel(chart, q, s)[static_cast<std::size_t>(k)]; };
      dgamma[static_cast<std::size_t>(l)].push_back(fd::d1(comp, p, l, s));
    }
  }
  RMat ric = RMat::Zero(n, n);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) {
      Real acc = 0;
      for (int k = 0; k < n; ++k) {
        const auto uk = static_cast<std::size_t>(k);
        acc += dgamma[uk][uk](i, j) - dgamma[static_cast<std::size_t>(j)][uk](i, k);
        for (int l = 0; l < n; ++l) {
          const auto ul = static_cast<std::size_t>(l);
          acc += gamma[uk](k, l) * gamma[ul](i, j) - gamma[uk](j, l) * gamma[ul](i, k);
        }
      }
      ric(i, j) = acc;
    }
  }
  return ((ric + ric.transpose()) / 2).eval();
}

/// Smallest eigenvalue of Ric relative to g.
inline Real min_ricci(const RealChart& chart, const RVec& p, const Stencil& s) {
  Eigen::GeneralizedSelfAdjointEigenSolver<RMat> es(ricci_tensor(chart, p, s), chart.g(p));
  return es.eigenvalues().minCoeff();
}

// ---------------------------------------------------------------------------
// Quantities built from h = log f
// ---------------------------------------------------------------------------

struct YauQuantities {
  Real h = 0;
  Real grad_norm = 0;  // |grad h|
  Real g_val = 0;      // |grad h|^2
  Real w_val = 0;      // (n-1)^2 - g
  Real u_val = 0;
  bool frame_ambiguous = false;  // grad h vanished; u taken in a coordinate frame
  RMat frame;                    // orthonormal columns, first along grad h when defined
  RMat hessian;                  // covariant Hessian of h in coordinates
  Real laplacian = 0;            // Lap h
};

/// u in an orthonormal frame E from the coordinate Hessian.
inline Real u_in_frame(const RMat& hess, const RMat& E, int n) {
  const RMat H = E.transpose() * hess * E;
  const Real lap = H.trace();
  Real off = 0;
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) {
      if (i != j) off += H(i, j) * H(i, j);
    }
  }
  Real tail = 0;
  for (int i = 1; i < n; ++i) {
    const Real d = (lap - H(0, 0)) / (n - 1) - H(i, i);
    tail += d * d;
  }
  return 2 * off + (Real(2 * n) / (n - 1)) * H(0, 0) * H(0, 0) + 2 * tail;
}

namespace detail {

inline RMat orthonormal_frame(const RMat& G, const RVec& first, bool use_first) {
  const Eigen::Index n = G.rows();
  auto ip = [&](const RVec& a, const RVec& b) { return a.dot(G * b); };
  RMat E = RMat::Zero(n, n);
  Eigen::Index col = 0;
  Eigen::Index dropped = -1;
  if (use_first) {
    E.col(0) = first / std::sqrt(ip(first, first));
    col = 1;
    Real best = -1;
    for (Eigen::Index mu = 0; mu < n; ++mu) {
      const RVec c = RVec::Unit(n, mu);
      const Real align = std::pow(ip(c, E.col(0)), 2) / ip(c, c);
      if (align > best) {
        best = align;
        dropped = mu;
      }
    }
  }
  for (Eigen::Index mu = 0; mu < n; ++mu) {
    if (mu == dropped) continue;
    RVec v = RVec::Unit(n, mu);
    for (Eigen::Index k = 0; k < col; ++k) v -= ip(v, E.col(k)) * E.col(k);
    E.col(col++) = v / std::sqrt(ip(v, v));
  }
  return E;
}

}  // namespace detail

inline YauQuantities yau_quantities(const HarmonicSample& sample, const RVec& p, const Stencil& s,
                                    Real threshold = 1e-6L) {
  detail::check_point(sample.chart, p, s);
  const int n = sample.chart.n;
  auto h = [&](const RVec& q) {
    const Real v = sample.f(q);
    if (!(v > 0)) throw DomainError("harmonic sample must be positive");
    return std::log(v);
  };
  YauQuantities out;
  const RMat G = sample.chart.g(p);
  const RVec dh = fd::gradient(h, p, s);
  const RVec grad = G.ldlt().solve(dh);
  out.h = h(p);
  out.g_val = dh.dot(grad);
  out.grad_norm = std::sqrt(std::max(Real(0), out.g_val));
  out.w_val = Real((n - 1) * (n - 1)) - out.g_val;
  out.hessian = detail::covariant_hessian(h, sample.chart, p, s);
  out.laplacian = (G.inverse() * out.hessian).trace();
  out.frame_ambiguous = !(out.grad_norm > threshold);
  out.frame = detail::orthonormal_frame(G, grad, !out.frame_ambiguous);
  out.u_val = u_in_frame(out.hessian, out.frame, n);
  return out;
}

/// |Lap h + |grad h|^2|.
inline Real log_identity_residual(const HarmonicSample& sample, const RVec& p, const Stencil& s) {
  const auto q = yau_quantities(sample, p, s);
  return std::abs(q.laplacian + q.g_val);
}

struct ChainResiduals {
  Real res63 = 0;    // max(0, lower bound for Lap g - Lap g)
  Real res610 = 0;   // max(0, Lap w + c <grad h, grad w> + u - 2(n-1) w)
  Real slack63 = 0;  // Lap g - lower bound (signed)
  Real slack610 = 0;
  Real identity64 = 0;  // |<grad h, grad g> - 2 g h_11|
  Real min_ricci = 0;
};

inline ChainResiduals bochner_chain_residual(const HarmonicSample& sample, const RVec& p, const Stencil& s,
                                             Real ricci_tolerance = 1e-6L) {
  detail::check_point(sample.chart, p, s);
  const int n = sample.chart.n;
  ChainResiduals out;
  out.min_ricci = min_ricci(sample.chart, p, s);
  if (out.min_ricci < -(n - 1) - ricci_tolerance) {
    throw PreconditionError("bochner_chain_residual: Ricci curvature below -(n-1) at the point");
  }
  const auto q = yau_quantities(sample, p, s);
  auto h = [&](const RVec& x) { return std::log(sample.f(x)); };
  auto gfun = [&](const RVec& x) {
    const RVec d = fd::gradient(h, x, s);
    return d.dot(sample.chart.g(x).ldlt().solve(d));
  };
  const RMat G = sample.chart.g(p);
  const RVec dh = fd::gradient(h, p, s);
  const RVec dg = fd::gradient(gfun, p, s);
  const Real h_grad_g = dh.dot(G.ldlt().solve(dg));
  const Real lap_g = detail::laplacian(gfun, sample.chart, p, s);
  const Real c = Real(2 * n - 4) / (n - 1);
  const Real lower = q.u_val + (Real(2) / (n - 1)) * q.g_val * q.g_val - 2 * (n - 1) * q.g_val - c * h_grad_g;
  out.slack63 = lap_g - lower;
  out.res63 = std::max(Real(0), -out.slack63);
  // w = (n-1)^2 - g: Lap w = -Lap g, grad w = -grad g.
  const Real lhs610 = -lap_g - c * h_grad_g + q.u_val;
  out.slack610 = 2 * (n - 1) * q.w_val - lhs610;
  out.res610 = std::max(Real(0), -out.slack610);
  const Real h11 = q.frame_ambiguous ? Real(0) : (q.frame.col(0).transpose() * q.hessian * q.frame.col(0))(0, 0);
  out.identity64 = std::abs(h_grad_g - 2 * q.g_val * h11);
  return out;
}

// ---------------------------------------------------------------------------
// Kähler substitution gap (exact arithmetic)
// ---------------------------------------------------------------------------

using Rational = boost::rational<long long>;

// boost 1.74's operator== recurses under C++20 rewritten comparisons.
inline bool same(const Rational& a, const Rational& b) {
  return a.numerator() == b.numerator() && a.denominator() == b.denominator();
}

struct SubstitutionGap {
  std::vector<std::vector<Rational>> table;  // h_{ab̄} replaced by constants
  Rational lhs;                              // sum_{a != 1}(h_{aā} + 2m - 1), vanishes
  Rational gap;                              // h_{11̄} Lap h - |h_{ab̄}|^2 from the table
  Rational literal;                          // the same expression written out term by term
  Rational closed_form;                      // -(2m-1)^2 (m-1) / 2
  [[nodiscard]] bool consistent() const { return same(lhs, Rational(0)) && same(gap, literal) && same(gap, closed_form); }
};

inline SubstitutionGap kahler_substitution_gap(int m) {
  if (m < 2) throw ConfigError("kahler_substitution_gap: m must be >= 2");
  const Rational b(1 - 2 * m);
  const Rational a = b / 2;
  SubstitutionGap out;
  out.table.assign(static_cast<std::size_t>(m), std::vector<Rational>(static_cast<std::size_t>(m), Rational(0)));
  out.table[0][0] = a;
  for (int i = 1; i < m; ++i) out.table[static_cast<std::size_t>(i)][static_cast<std::size_t>(i)] = b;

  Rational trace(0), norm_sq(0);
  for (int i = 0; i < m; ++i) {
    for (int j = 0; j < m; ++j) {
      const Rational e = out.table[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)];
      norm_sq += e * e;
    }
    trace += out.table[static_cast<std::size_t>(i)][static_cast<std::size_t>(i)];
  }
  for (int i = 1; i < m; ++i) {
    out.lhs += out.table[static_cast<std::size_t>(i)][static_cast<std::size_t>(i)] + Rational(2 * m - 1);
  }
  out.gap = out.table[0][0] * trace - norm_sq;
  out.literal = a * (a + Rational(m - 1) * b) - a * a - Rational(m - 1) * b * b;
  out.closed_form = -Rational((2 * m - 1) * (2 * m - 1) * (m - 1), 2);
  return out;
}

}  // namespace kahlerlab::gradient
