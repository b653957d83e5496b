#pragma once

// Closed-form comparison quantities for real and complex space forms.
//
// Conventions
//  * Curvatures are in 1/length^2, radii in length.
//  * Every Laplacian returned here is the real Beltrami Laplacian unless the
//    name says "complex". The complex Laplacian of a Kahler manifold is half
//    of it; complex Hessian entries are the unitary-frame components r_{a b-bar}.
//  * A complex space form of constant holomorphic bisectional curvature c has
//    radial sectional curvature 2c in the holomorphic plane through the radial
//    direction and c/2 on the 2m-2 orthogonal directions, so Ric = (m+1) c.
//  * For positive curvature every radial quantity hard-fails at or beyond the
//    first conjugate radius.

#include <cmath>
#include <sstream>
#include <limits>
#include <numbers>
#include <string>
#include <utility>

#include "kahlerlab/core.hpp"
#include "kahlerlab/numerics/ode.hpp"
#include "kahlerlab/numerics/quadrature.hpp"

namespace kahlerlab::models {

inline constexpr double kInf = std::numeric_limits<double>::infinity();

// ---------------------------------------------------------------------------
// Generalised trigonometric functions
// ---------------------------------------------------------------------------

/// First zero of sn(k, .) on (0, inf); infinite when k <= 0.
inline double conjugate_radius(double k) noexcept {
  return k > 0.0 ? std::numbers::pi / std::sqrt(k) : kInf;
}

/// Solution of y'' + k y = 0, y(0) = 0, y'(0) = 1.
inline double sn(double k, double r) {
  if (!(r >= 0.0)) throw DomainError("sn: radius must be non-negative");
  if (k > 0.0) {
    if (r > conjugate_radius(k)) throw DomainError("sn: radius beyond pi/sqrt(k)");
    const double s = std::sqrt(k);
    return std::sin(s * r) / s;
  }
  if (k < 0.0) {
    const double s = std::sqrt(-k);
    return std::sinh(s * r) / s;
  }
  return r;
}

/// Derivative of sn(k, .).
inline double cn(double k, double r) {
  if (!(r >= 0.0)) throw DomainError("cn: radius must be non-negative");
  if (k > 0.0) {
    if (r > conjugate_radius(k)) throw DomainError("cn: radius beyond pi/sqrt(k)");
    return std::cos(std::sqrt(k) * r);
  }
  if (k < 0.0) return std::cosh(std::sqrt(-k) * r);
  return 1.0;
}

/// sn'/sn, the mean curvature of a distance sphere per direction.
///
/// Defined on 0 < r < pi/sqrt(k). Uses the Laurent series below r = 1e-3.
inline double ct(double k, double r) {
  if (!(r > 0.0)) throw DomainError("ct: radius must be positive");
  if (k > 0.0 && !(r < conjugate_radius(k))) {
    throw DomainError("ct: radius at or beyond the conjugate radius");
  }
  if (r < 1e-3) {
    return 1.0 / r - k * r / 3.0 - k * k * r * r * r / 45.0;
  }
  if (k > 0.0) {
    const double s = std::sqrt(k);
    return s / std::tan(s * r);
  }
  if (k < 0.0) {
    const double s = std::sqrt(-k);
    return s / std::tanh(s * r);
  }
  return 1.0 / r;
}

/// Volume of the unit (d)-sphere in R^{d+1}: 2 pi^{(d+1)/2} / Gamma((d+1)/2).
inline double unit_sphere_area(int d) {
  if (d < 0) throw DomainError("unit_sphere_area: negative dimension");
  const double half = 0.5 * (d + 1);
  return 2.0 * std::pow(std::numbers::pi, half) / std::tgamma(half);
}

// ---------------------------------------------------------------------------
// Space forms
// ---------------------------------------------------------------------------

/// Simply connected real space form of sectional curvature k and real dimension n.
struct RealSpaceForm {
  double k = 0.0;
  int n = 2;

  RealSpaceForm() = default;
  RealSpaceForm(double curvature, int dim) : k(curvature), n(dim) {
    if (n < 2) throw DomainError("RealSpaceForm: dimension must be at least 2");
    if (!std::isfinite(k)) throw DomainError("RealSpaceForm: curvature must be finite");
  }
};

/// Complex space form of constant holomorphic bisectional curvature c, complex dimension m.
struct ComplexSpaceForm {
  double c = 0.0;
  int m = 2;

  ComplexSpaceForm() = default;
  ComplexSpaceForm(double bisectional, int complex_dim) : c(bisectional), m(complex_dim) {
    if (m < 2) throw DomainError("ComplexSpaceForm: complex dimension must be at least 2");
    if (!std::isfinite(c)) throw DomainError("ComplexSpaceForm: curvature must be finite");
  }

  /// Constant Ricci curvature (m+1) c.
  [[nodiscard]] double ricci() const noexcept { return (m + 1) * c; }
  [[nodiscard]] int real_dim() const noexcept { return 2 * m; }
};

/// Complex space form whose Ricci curvature equals `ricci` times the metric.
inline ComplexSpaceForm complex_form_with_ricci(double ricci, int m) {
  return {ricci / (m + 1), m};
}

inline double diameter(const RealSpaceForm& s) noexcept { return conjugate_radius(s.k); }
inline double diameter(const ComplexSpaceForm& s) noexcept { return conjugate_radius(2.0 * s.c); }

/// Exponential growth rate of ball volume: (n-1) sqrt(-k) for k < 0, else 0.
inline double volume_entropy(const RealSpaceForm& s) noexcept {
  return s.k < 0.0 ? (s.n - 1) * std::sqrt(-s.k) : 0.0;
}

/// lim ln A(r) / r = sqrt(-2c) + (2m-2) sqrt(-c/2) for c < 0, else 0.
inline double volume_entropy(const ComplexSpaceForm& s) noexcept {
  if (!(s.c < 0.0)) return 0.0;
  return std::sqrt(-2.0 * s.c) + (2 * s.m - 2) * std::sqrt(-0.5 * s.c);
}

namespace detail {

inline std::string range_message(const char* what, double r, double diam, char close) {
  std::ostringstream os;
  os.precision(17);
  os << what << ": radius " << r << " outside (0, " << diam << close;
  return os.str();
}

inline void require_open_radius(double r, double diam, const char* what) {
  if (!(r > 0.0) || !(r < diam)) throw DomainError(range_message(what, r, diam, ')'));
}

inline void require_closed_radius(double r, double diam, const char* what) {
  if (!(r > 0.0) || r > diam) throw DomainError(range_message(what, r, diam, ']'));
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Hessians and Laplacians of the distance function
// ---------------------------------------------------------------------------

/// Real Beltrami Laplacian of the distance function: (n-1) sn'/sn.
inline double model_laplacian_real(const RealSpaceForm& s, double r) {
  detail::require_open_radius(r, diameter(s), "model_laplacian_real");
  return (s.n - 1) * ct(s.k, r);
}

/// Unitary-frame entries of the complexified real-space-form distance Hessian.
struct ModelHessianS {
  double s11;      ///< radial entry, half of sn'/sn
  double offdiag;  ///< every other diagonal entry, sn'/sn
};

/// Complexified Hessian of the distance function of the real space form of curvature k.
///
/// Entries with alpha != beta vanish. The complex trace s11 + (m-1) offdiag is
/// half of the real Laplacian of the 2m-dimensional real form.
inline ModelHessianS model_hessian_S(double k, int m, double r) {
  if (m < 2) throw DomainError("model_hessian_S: complex dimension must be at least 2");
  detail::require_open_radius(r, conjugate_radius(k), "model_hessian_S");
  const double s = ct(k, r);
  return {0.5 * s, s};
}

/// Unitary-frame complex Hessian of the distance function of a complex space form.
struct ComplexHessian {
  double r11;  ///< radial entry r_{1 1-bar}
  double r22;  ///< common off-radial entry r_{2 2-bar}

  /// Complex Laplacian u = r11 + (m-1) r22.
  [[nodiscard]] double complex_laplacian(int m) const noexcept { return r11 + (m - 1) * r22; }
};

inline ComplexHessian model_complex_hessian(const ComplexSpaceForm& s, double r) {
  detail::require_open_radius(r, diameter(s), "model_complex_hessian");
  return {0.5 * ct(2.0 * s.c, r), ct(0.5 * s.c, r)};
}

/// Real Beltrami Laplacian of the distance function of a complex space form (2u).
inline double model_laplacian_real(const ComplexSpaceForm& s, double r) {
  return 2.0 * model_complex_hessian(s, r).complex_laplacian(s.m);
}

// ---------------------------------------------------------------------------
// Areas, volumes, Bishop-Gromov ratios
// ---------------------------------------------------------------------------

inline double model_area(const RealSpaceForm& s, double r) {
  detail::require_closed_radius(r, diameter(s), "model_area");
  return unit_sphere_area(s.n - 1) * std::pow(sn(s.k, r), s.n - 1);
}

inline double model_area(const ComplexSpaceForm& s, double r) {
  detail::require_closed_radius(r, diameter(s), "model_area");
  return unit_sphere_area(2 * s.m - 1) * sn(2.0 * s.c, r) * std::pow(sn(0.5 * s.c, r), 2 * s.m - 2);
}

template <class Space>
double model_volume(const Space& s, double r) {
  detail::require_closed_radius(r, diameter(s), "model_volume");
  return numerics::integrate([&](double t) { return t > 0.0 ? model_area(s, t) : 0.0; }, 0.0, r);
}

/// Relative volume V(b) / V(a) for 0 < a < b <= diameter.
template <class Space>
double bg_ratio(const Space& s, double a, double b) {
  if (!(a > 0.0) || !(b > a)) throw DomainError("bg_ratio: need 0 < a < b");
  detail::require_closed_radius(b, diameter(s), "bg_ratio");
  const double va = model_volume(s, a);
  const double shell = numerics::integrate([&](double t) { return model_area(s, t); }, a, b);
  return (va + shell) / va;
}

// ---------------------------------------------------------------------------
// First Dirichlet eigenvalue of a model ball
// ---------------------------------------------------------------------------

struct EigenOptions {
  double rel_tol = 1e-13;       ///< bisection width relative to the bracket
  double ode_rel_tol = 1e-12;
  double ode_abs_tol = 1e-14;
  int max_bracket_doublings = 200;
  int max_bisections = 200;
};

namespace detail {

/// True when the radial solution with eigenvalue guess `lambda` vanishes on (0, radius].
inline bool radial_solution_has_zero(const RealSpaceForm& s, double radius, double lambda,
                                     const EigenOptions& opt) {
  const double n = s.n;
  const double rho0 = 1e-4 * radius;
  // Regular solution near the origin: phi = 1 - lambda rho^2 / (2n) + ...
  numerics::State<2> y0{1.0 - lambda * rho0 * rho0 / (2.0 * n), -lambda * rho0 / n};
  auto rhs = [&](double rho, const numerics::State<2>& y) -> numerics::State<2> {
    return {y[1], -(n - 1.0) * ct(s.k, rho) * y[1] - lambda * y[0]};
  };
  numerics::StepControl ctl;
  ctl.rel_tol = opt.ode_rel_tol;
  ctl.abs_tol = opt.ode_abs_tol;
  double h = 0.0;
  auto guard = [](double, const numerics::State<2>& y) { return y[0] <= 0.0; };
  const auto res = numerics::advance_dopri<2>(rhs, rho0, y0, radius, ctl, guard, h);
  if (res.reason == numerics::StopReason::underflow) {
    throw NonConvergenceError("first_dirichlet_eigenvalue: ODE step underflow");
  }
  return res.reason == numerics::StopReason::guard || res.y[0] <= 0.0;
}

}  // namespace detail

/// Smallest Dirichlet eigenvalue of the geodesic ball of radius r, by shooting
/// on the radial equation phi'' + (n-1)(sn'/sn) phi' + lambda phi = 0 with
/// bisection on lambda.
inline double first_dirichlet_eigenvalue(const RealSpaceForm& s, double r,
                                         const EigenOptions& opt = {}) {
  detail::require_open_radius(r, diameter(s), "first_dirichlet_eigenvalue");
  double lo = 0.0;
  double hi = 4.0 / (r * r);
  int doublings = 0;
  while (!detail::radial_solution_has_zero(s, r, hi, opt)) {
    lo = hi;
    hi *= 2.0;
    if (++doublings > opt.max_bracket_doublings) {
      throw NonConvergenceError("first_dirichlet_eigenvalue: could not bracket eigenvalue");
    }
  }
  for (int it = 0; it < opt.max_bisections; ++it) {
    const double mid = 0.5 * (lo + hi);
    if (detail::radial_solution_has_zero(s, r, mid, opt)) {
      hi = mid;
    } else {
      lo = mid;
    }
    if (hi - lo <= opt.rel_tol * hi) return 0.5 * (lo + hi);
  }
  throw NonConvergenceError("first_dirichlet_eigenvalue: bisection did not converge");
}

}  // namespace kahlerlab::models
