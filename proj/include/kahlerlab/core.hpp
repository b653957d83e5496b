#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <numbers>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace kahlerlab {

// ---------------------------------------------------------------------------
// Errors
// ---------------------------------------------------------------------------

/// Argument outside the radial range or chart box where a quantity is defined.
class DomainError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

/// An iterative procedure (bracketing, quadrature, step control) gave up.
class NonConvergenceError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// The gradient is too small for an adapted frame to be meaningful.
class VanishingGradientError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// The adapted frame jumps between neighbouring stencil nodes.
class FrameBranchError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A hypothesis of a comparison check does not hold on the input.
class PreconditionError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Malformed configuration, profile string or JSON document.
class ConfigError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// ---------------------------------------------------------------------------
// RadialProfile
// ---------------------------------------------------------------------------

/// A real function sampled on a strictly increasing radius grid.
class RadialProfile {
 public:
  RadialProfile() = default;

  RadialProfile(std::vector<double> r_grid, std::vector<double> values)
      : r_(std::move(r_grid)), values_(std::move(values)) {
    if (r_.size() != values_.size()) {
      throw ConfigError("RadialProfile: grid and value lengths differ");
    }
    for (std::size_t i = 1; i < r_.size(); ++i) {
      if (!(r_[i] > r_[i - 1])) {
        throw ConfigError("RadialProfile: radius grid must be strictly increasing");
      }
    }
  }

  [[nodiscard]] std::size_t size() const noexcept { return r_.size(); }
  [[nodiscard]] bool empty() const noexcept { return r_.empty(); }
  [[nodiscard]] const std::vector<double>& r() const noexcept { return r_; }
  [[nodiscard]] const std::vector<double>& values() const noexcept { return values_; }

  [[nodiscard]] double max_abs() const noexcept {
    double worst = 0.0;
    for (double v : values_) worst = std::max(worst, std::abs(v));
    return worst;
  }

 private:
  std::vector<double> r_;
  std::vector<double> values_;
};

/// Uniform grid of `steps` points on [lo, hi] (both ends included).
inline std::vector<double> linear_grid(double lo, double hi, std::size_t steps) {
  if (steps < 2 || !(hi > lo)) throw ConfigError("linear_grid: need steps >= 2 and hi > lo");
  std::vector<double> grid(steps);
  for (std::size_t i = 0; i < steps; ++i) {
    grid[i] = lo + (hi - lo) * static_cast<double>(i) / static_cast<double>(steps - 1);
  }
  grid.back() = hi;
  return grid;
}

/// Geometric grid of `steps` points on [lo, hi]; constant ratio between neighbours.
inline std::vector<double> geometric_grid(double lo, double hi, std::size_t steps) {
  if (steps < 2 || !(hi > lo) || !(lo > 0.0)) {
    throw ConfigError("geometric_grid: need steps >= 2 and 0 < lo < hi");
  }
  std::vector<double> grid(steps);
  const double ratio = std::log(hi / lo) / static_cast<double>(steps - 1);
  for (std::size_t i = 0; i < steps; ++i) grid[i] = lo * std::exp(ratio * static_cast<double>(i));
  grid.front() = lo;
  grid.back() = hi;
  return grid;
}

// ---------------------------------------------------------------------------
// Verdict
// ---------------------------------------------------------------------------

/// Outcome of one inequality or residual check over a grid.
///
/// `worst_margin` is the smallest value of (checked quantity - bound) seen on
/// the grid, so the check passes when it is no worse than `-tolerance`.
/// A failed precondition always fails the verdict regardless of margin.
struct Verdict {
  std::string name;
  std::string anchor;
  std::size_t grid_size = 0;
  double worst_margin = std::numeric_limits<double>::infinity();
  double worst_at = std::numeric_limits<double>::quiet_NaN();
  double tolerance = 0.0;
  bool precondition_ok = true;
  std::string note;

  [[nodiscard]] bool pass() const noexcept {
    return precondition_ok && worst_margin >= -tolerance;
  }

  /// Record one margin sample taken at coordinate `at`.
  void observe(double margin, double at) noexcept {
    ++grid_size;
    if (std::isnan(margin)) {
      worst_margin = -std::numeric_limits<double>::infinity();
      worst_at = at;
    } else if (margin < worst_margin) {
      worst_margin = margin;
      worst_at = at;
    }
  }

  /// Field-wise equality; NaN coordinates compare equal to each other.
  [[nodiscard]] bool same_as(const Verdict& o) const noexcept {
    auto same = [](double a, double b) {
      return (std::isnan(a) && std::isnan(b)) || a == b;
    };
    return name == o.name && anchor == o.anchor && grid_size == o.grid_size &&
           same(worst_margin, o.worst_margin) && same(worst_at, o.worst_at) &&
           tolerance == o.tolerance && precondition_ok == o.precondition_ok && note == o.note;
  }
};

}  // namespace kahlerlab
