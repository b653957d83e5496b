#pragma once

#include <array>
#include <cmath>
#include <span>
#include <string>
#include <utility>

#include <Eigen/Dense>

#include "kahlerlab/core.hpp"

namespace kahlerlab::fd {

/// Working precision for nested finite differences. Third derivatives taken by
/// nesting central differences lose about eps/h^3 relative accuracy, which
/// rules out double at h = 1e-3.
using Real = long double;

using RVec = Eigen::Matrix<Real, Eigen::Dynamic, 1>;
using RMat = Eigen::Matrix<Real, Eigen::Dynamic, Eigen::Dynamic>;

struct Stencil {
  Real h = 1e-3L;
  int order = 2;

  void validate() const {
    if (!(h > 0) || !std::isfinite(static_cast<double>(h))) throw ConfigError("stencil step must be positive");
    if (order != 2 && order != 4) throw ConfigError("stencil order must be 2 or 4");
  }

  /// Furthest offset of a single differentiation, in units of h.
  [[nodiscard]] int reach() const { return order / 2; }
};

namespace detail {

struct Tap {
  int offset;
  Real weight;
};

inline std::span<const Tap> first_taps(int order) {
  static constexpr std::array<Tap, 2> o2{{{-1, -0.5L}, {1, 0.5L}}};
  static constexpr std::array<Tap, 4> o4{{{-2, 1.0L / 12}, {-1, -8.0L / 12}, {1, 8.0L / 12}, {2, -1.0L / 12}}};
  if (order == 2) return o2;
  return o4;
}

inline std::span<const Tap> second_taps(int order) {
  static constexpr std::array<Tap, 3> o2{{{-1, 1.0L}, {0, -2.0L}, {1, 1.0L}}};
  static constexpr std::array<Tap, 5> o4{
      {{-2, -1.0L / 12}, {-1, 16.0L / 12}, {0, -30.0L / 12}, {1, 16.0L / 12}, {2, -1.0L / 12}}};
  if (order == 2) return o2;
  return o4;
}

template <class T>
void accumulate(T& acc, bool& first, const T& value, Real w) {
  if (first) {
    acc = value * w;
    first = false;
  } else {
    acc += value * w;
  }
}

}  // namespace detail

/// Partial derivative along coordinate i. `f` may return any type closed under
/// addition and scaling by Real (scalars, complex numbers, Eigen objects).
template <class F>
auto d1(const F& f, const RVec& p, Eigen::Index i, const Stencil& s) {
  using T = std::decay_t<decltype(f(p))>;
  T acc{};
  bool first = true;
  RVec q = p;
  for (const auto& t : detail::first_taps(s.order)) {
    q[i] = p[i] + static_cast<Real>(t.offset) * s.h;
    detail::accumulate<T>(acc, first, f(q), t.weight);
  }
  return T(acc / s.h);
}

/// Second partial derivative along coordinates i and j.
template <class F>
auto d2(const F& f, const RVec& p, Eigen::Index i, Eigen::Index j, const Stencil& s) {
  using T = std::decay_t<decltype(f(p))>;
  T acc{};
  bool first = true;
  RVec q = p;
  if (i == j) {
    for (const auto& t : detail::second_taps(s.order)) {
      q[i] = p[i] + static_cast<Real>(t.offset) * s.h;
      detail::accumulate<T>(acc, first, f(q), t.weight);
    }
  } else {
    for (const auto& ti : detail::first_taps(s.order)) {
      for (const auto& tj : detail::first_taps(s.order)) {
        q[i] = p[i] + static_cast<Real>(ti.offset) * s.h;
        q[j] = p[j] + static_cast<Real>(tj.offset) * s.h;
        detail::accumulate<T>(acc, first, f(q), ti.weight * tj.weight);
      }
    }
  }
  return T(acc / (s.h * s.h));
}

/// Directional derivative along `dir` (not normalized); the step is h along the
/// unit vector and the result is scaled back by |dir|.
template <class F>
auto d_dir(const F& f, const RVec& p, const RVec& dir, const Stencil& s) {
  using T = std::decay_t<decltype(f(p))>;
  const Real len = dir.norm();
  if (len == 0) return T(f(p) * Real(0));
  const RVec unit = dir / len;
  T acc{};
  bool first = true;
  for (const auto& t : detail::first_taps(s.order)) {
    const RVec q = p + unit * (static_cast<Real>(t.offset) * s.h);
    detail::accumulate<T>(acc, first, f(q), t.weight);
  }
  return T(acc * (len / s.h));
}

/// Euclidean-coordinate gradient of a real function.
template <class F>
RVec gradient(const F& f, const RVec& p, const Stencil& s) {
  RVec out(p.size());
  for (Eigen::Index i = 0; i < p.size(); ++i) out[i] = d1(f, p, i, s);
  return out;
}

/// Coordinate Hessian of a real function (symmetric by construction).
template <class F>
RMat hessian(const F& f, const RVec& p, const Stencil& s) {
  const Eigen::Index n = p.size();
  RMat out(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    out(i, i) = d2(f, p, i, i, s);
    for (Eigen::Index j = i + 1; j < n; ++j) {
      out(i, j) = d2(f, p, i, j, s);
      out(j, i) = out(i, j);
    }
  }
  return out;
}

}  // namespace kahlerlab::fd
