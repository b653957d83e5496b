#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>

#include "kahlerlab/core.hpp"

namespace kahlerlab::numerics {

template <std::size_t N>
using State = std::array<double, N>;

enum class StopReason { reached, guard, underflow };

template <std::size_t N>
struct AdvanceResult {
  double t = 0.0;
  State<N> y{};
  StopReason reason = StopReason::reached;
  std::size_t steps = 0;
};

struct StepControl {
  double rel_tol = 1e-10;
  double abs_tol = 1e-12;
  /// Smallest step relative to max(|t|, 1) before declaring underflow.
  double min_step_rel = 1e-15;
  std::size_t max_steps = 2'000'000;
};

namespace detail {

template <std::size_t N>
State<N> axpy(const State<N>& y, double h, std::initializer_list<std::pair<double, const State<N>*>> terms) {
  State<N> out = y;
  for (const auto& [c, k] : terms) {
    for (std::size_t i = 0; i < N; ++i) out[i] += h * c * (*k)[i];
  }
  return out;
}

template <std::size_t N>
bool finite(const State<N>& y) {
  for (double v : y) {
    if (!std::isfinite(v)) return false;
  }
  return true;
}

}  // namespace detail

/// One classical fourth-order Runge-Kutta step.
template <std::size_t N, class Rhs>
State<N> rk4_step(const Rhs& rhs, double t, const State<N>& y, double h) {
  const State<N> k1 = rhs(t, y);
  const State<N> k2 = rhs(t + 0.5 * h, detail::axpy<N>(y, h, {{0.5, &k1}}));
  const State<N> k3 = rhs(t + 0.5 * h, detail::axpy<N>(y, h, {{0.5, &k2}}));
  const State<N> k4 = rhs(t + h, detail::axpy<N>(y, h, {{1.0, &k3}}));
  State<N> out = y;
  for (std::size_t i = 0; i < N; ++i) {
    out[i] += h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
  }
  return out;
}

/// Fixed-step RK4 from t0 to t1 using `steps` equal steps; `guard(t, y)` may stop early.
template <std::size_t N, class Rhs, class Guard>
AdvanceResult<N> advance_rk4(const Rhs& rhs, double t0, const State<N>& y0, double t1,
                             std::size_t steps, const Guard& guard) {
  AdvanceResult<N> res{t0, y0, StopReason::reached, 0};
  if (steps == 0) return res;
  const double h = (t1 - t0) / static_cast<double>(steps);
  for (std::size_t i = 0; i < steps; ++i) {
    const double t_next = (i + 1 == steps) ? t1 : t0 + h * static_cast<double>(i + 1);
    State<N> y = rk4_step<N>(rhs, res.t, res.y, t_next - res.t);
    ++res.steps;
    if (!detail::finite<N>(y) || guard(t_next, y)) {
      res.reason = StopReason::guard;
      if (detail::finite<N>(y)) {
        res.t = t_next;
        res.y = y;
      }
      return res;
    }
    res.t = t_next;
    res.y = y;
  }
  return res;
}

/// Dormand-Prince 5(4) embedded pair with standard step-size control.
///
/// Advances from t0 towards t1 (t1 > t0). `h` carries the step size between
/// calls so that consecutive output intervals reuse the controller state; pass
/// 0 to let the integrator choose an initial step. The guard is evaluated on
/// every accepted step.
template <std::size_t N, class Rhs, class Guard>
AdvanceResult<N> advance_dopri(const Rhs& rhs, double t0, const State<N>& y0, double t1,
                               const StepControl& ctl, const Guard& guard, double& h) {
  constexpr double c2 = 1.0 / 5, c3 = 3.0 / 10, c4 = 4.0 / 5, c5 = 8.0 / 9;
  constexpr double a21 = 1.0 / 5;
  constexpr double a31 = 3.0 / 40, a32 = 9.0 / 40;
  constexpr double a41 = 44.0 / 45, a42 = -56.0 / 15, a43 = 32.0 / 9;
  constexpr double a51 = 19372.0 / 6561, a52 = -25360.0 / 2187, a53 = 64448.0 / 6561,
                   a54 = -212.0 / 729;
  constexpr double a61 = 9017.0 / 3168, a62 = -355.0 / 33, a63 = 46732.0 / 5247,
                   a64 = 49.0 / 176, a65 = -5103.0 / 18656;
  constexpr double b1 = 35.0 / 384, b3 = 500.0 / 1113, b4 = 125.0 / 192, b5 = -2187.0 / 6784,
                   b6 = 11.0 / 84;
  constexpr double e1 = 71.0 / 57600, e3 = -71.0 / 16695, e4 = 71.0 / 1920,
                   e5 = -17253.0 / 339200, e6 = 22.0 / 525, e7 = -1.0 / 40;

  AdvanceResult<N> res{t0, y0, StopReason::reached, 0};
  if (!(t1 > t0)) return res;

  State<N> k1 = rhs(res.t, res.y);
  if (h <= 0.0) {
    double scale = 0.0;
    double dnorm = 0.0;
    for (std::size_t i = 0; i < N; ++i) {
      const double sc = ctl.abs_tol + ctl.rel_tol * std::abs(res.y[i]);
      scale = std::max(scale, std::abs(res.y[i]) / sc);
      dnorm = std::max(dnorm, std::abs(k1[i]) / sc);
    }
    h = (dnorm > 1e-10 && scale > 1e-10) ? 0.01 * scale / dnorm : 1e-6;
    h = std::min(h, t1 - t0);
  }

  while (res.t < t1) {
    if (res.steps >= ctl.max_steps) {
      throw NonConvergenceError("Dormand-Prince: step budget exhausted");
    }
    const double h_min = ctl.min_step_rel * std::max(1.0, std::abs(res.t));
    bool last = false;
    double step = h;
    if (res.t + step >= t1) {
      step = t1 - res.t;
      last = true;
    }
    if (step < h_min && !last) {
      res.reason = StopReason::underflow;
      return res;
    }

    const State<N>& y = res.y;
    const double t = res.t;
    const State<N> k2 = rhs(t + c2 * step, detail::axpy<N>(y, step, {{a21, &k1}}));
    const State<N> k3 = rhs(t + c3 * step, detail::axpy<N>(y, step, {{a31, &k1}, {a32, &k2}}));
    const State<N> k4 =
        rhs(t + c4 * step, detail::axpy<N>(y, step, {{a41, &k1}, {a42, &k2}, {a43, &k3}}));
    const State<N> k5 = rhs(
        t + c5 * step, detail::axpy<N>(y, step, {{a51, &k1}, {a52, &k2}, {a53, &k3}, {a54, &k4}}));
    const State<N> k6 =
        rhs(t + step, detail::axpy<N>(y, step,
                                      {{a61, &k1}, {a62, &k2}, {a63, &k3}, {a64, &k4}, {a65, &k5}}));
    const State<N> y5 = detail::axpy<N>(
        y, step, {{b1, &k1}, {b3, &k3}, {b4, &k4}, {b5, &k5}, {b6, &k6}});
    const State<N> k7 = rhs(t + step, y5);

    double err = 0.0;
    bool ok = detail::finite<N>(y5) && detail::finite<N>(k7);
    if (ok) {
      for (std::size_t i = 0; i < N; ++i) {
        const double ei = step * (e1 * k1[i] + e3 * k3[i] + e4 * k4[i] + e5 * k5[i] +
                                  e6 * k6[i] + e7 * k7[i]);
        const double sc =
            ctl.abs_tol + ctl.rel_tol * std::max(std::abs(y[i]), std::abs(y5[i]));
        err = std::max(err, std::abs(ei) / sc);
      }
      ok = std::isfinite(err);
    }

    if (ok && err <= 1.0) {
      res.t = last ? t1 : t + step;
      res.y = y5;
      k1 = k7;
      ++res.steps;
      if (guard(res.t, res.y)) {
        res.reason = StopReason::guard;
        return res;
      }
      const double factor = err == 0.0 ? 5.0 : std::clamp(0.9 * std::pow(err, -0.2), 0.2, 5.0);
      if (!last) h = step * factor;
    } else {
      const double factor = ok ? std::clamp(0.9 * std::pow(err, -0.2), 0.1, 0.9) : 0.25;
      h = step * factor;
      if (h < h_min) {
        res.reason = StopReason::underflow;
        return res;
      }
    }
  }
  return res;
}

}  // namespace kahlerlab::numerics
