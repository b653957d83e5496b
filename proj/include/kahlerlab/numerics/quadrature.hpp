#pragma once

#include <cmath>
#include <limits>
#include <string>

#include "kahlerlab/core.hpp"

namespace kahlerlab::numerics {

struct QuadratureOptions {
  double rel_tol = 1e-13;
  double abs_tol = 1e-300;
  int max_depth = 50;
};

namespace detail {

template <class F>
double simpson_recurse(const F& f, double a, double b, double fa, double fm, double fb,
                       double whole, double tol, int depth, int max_depth) {
  const double m = 0.5 * (a + b);
  const double lm = 0.5 * (a + m);
  const double rm = 0.5 * (m + b);
  const double flm = f(lm);
  const double frm = f(rm);
  const double left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
  const double right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
  const double delta = left + right - whole;
  // Below this the panel difference is rounding noise.
  const double floor = 64.0 * std::numeric_limits<double>::epsilon() * (std::abs(left) + std::abs(right));
  const double target = std::max(15.0 * tol, floor);
  if (std::abs(delta) <= target || depth >= max_depth) {
    if (depth >= max_depth && std::abs(delta) > target) {
      throw NonConvergenceError("adaptive Simpson: maximum depth reached");
    }
    return left + right + delta / 15.0;
  }
  return simpson_recurse(f, a, m, fa, flm, fm, left, 0.5 * tol, depth + 1, max_depth) +
         simpson_recurse(f, m, b, fm, frm, fb, right, 0.5 * tol, depth + 1, max_depth);
}

}  // namespace detail

/// Adaptive Simpson rule with Richardson correction.
///
/// The tolerance is relative to a coarse first estimate of the integral so that
/// integrals of tiny magnitude are resolved to the same number of digits.
template <class F>
double integrate(const F& f, double a, double b, const QuadratureOptions& opt = {}) {
  if (a == b) return 0.0;
  if (b < a) return -integrate(f, b, a, opt);
  // Seed with a 16-panel composite estimate so the relative target is meaningful.
  constexpr int kPanels = 16;
  const double h = (b - a) / kPanels;
  double coarse = 0.0;
  for (int i = 0; i < kPanels; ++i) {
    const double lo = a + h * i;
    const double hi = (i + 1 == kPanels) ? b : lo + h;
    coarse += (hi - lo) / 6.0 * (f(lo) + 4.0 * f(0.5 * (lo + hi)) + f(hi));
  }
  const double tol_total = std::max(opt.abs_tol, opt.rel_tol * std::abs(coarse));
  double total = 0.0;
  for (int i = 0; i < kPanels; ++i) {
    const double lo = a + h * i;
    const double hi = (i + 1 == kPanels) ? b : lo + h;
    const double flo = f(lo);
    const double fmid = f(0.5 * (lo + hi));
    const double fhi = f(hi);
    const double whole = (hi - lo) / 6.0 * (flo + 4.0 * fmid + fhi);
    total += detail::simpson_recurse(f, lo, hi, flo, fmid, fhi, whole, tol_total / kPanels, 0,
                                     opt.max_depth);
  }
  return total;
}

}  // namespace kahlerlab::numerics
