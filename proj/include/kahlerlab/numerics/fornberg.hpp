#pragma once

#include <cstddef>
#include <vector>

#include "kahlerlab/core.hpp"

namespace kahlerlab::numerics {

/// Finite-difference weights on arbitrary nodes (Fornberg's recursion).
///
/// Returns w with w[k] the weight of node k for the derivative of order
/// `deriv` at x0.
inline std::vector<double> fornberg_weights(double x0, const std::vector<double>& nodes, int deriv) {
  const std::size_t n = nodes.size();
  if (deriv < 0 || n <= static_cast<std::size_t>(deriv)) {
    throw ConfigError("fornberg_weights: need more nodes than the derivative order");
  }
  const auto M = static_cast<std::size_t>(deriv);
  // c[j][k]: weight of node j for derivative k
  std::vector<std::vector<double>> c(n, std::vector<double>(M + 1, 0.0));
  double c1 = 1.0;
  double c4 = nodes[0] - x0;
  c[0][0] = 1.0;
  for (std::size_t i = 1; i < n; ++i) {
    const std::size_t mn = std::min(i, M);
    double c2 = 1.0;
    const double c5 = c4;
    c4 = nodes[i] - x0;
    for (std::size_t j = 0; j < i; ++j) {
      const double c3 = nodes[i] - nodes[j];
      c2 *= c3;
      if (j == i - 1) {
        for (std::size_t k = mn; k >= 1; --k) {
          c[i][k] = c1 * (static_cast<double>(k) * c[i - 1][k - 1] - c5 * c[i - 1][k]) / c2;
        }
        c[i][0] = -c1 * c5 * c[i - 1][0] / c2;
      }
      for (std::size_t k = mn; k >= 1; --k) {
        c[j][k] = (c4 * c[j][k] - static_cast<double>(k) * c[j][k - 1]) / c3;
      }
      c[j][0] = c4 * c[j][0] / c3;
    }
    c1 = c2;
  }
  std::vector<double> out(n);
  for (std::size_t j = 0; j < n; ++j) out[j] = c[j][M];
  return out;
}

/// First derivative of samples y on grid x at every node, using a window of
/// `width` nodes (centred where possible).
inline std::vector<double> nonuniform_derivative(const std::vector<double>& x, const std::vector<double>& y,
                                                 std::size_t width = 7) {
  const std::size_t n = x.size();
  if (y.size() != n) throw ConfigError("nonuniform_derivative: length mismatch");
  if (n < width) throw ConfigError("nonuniform_derivative: grid shorter than stencil");
  std::vector<double> out(n);
  for (std::size_t i = 0; i < n; ++i) {
    std::size_t lo = i >= width / 2 ? i - width / 2 : 0;
    if (lo + width > n) lo = n - width;
    const std::vector<double> nodes(x.begin() + static_cast<std::ptrdiff_t>(lo),
                                    x.begin() + static_cast<std::ptrdiff_t>(lo + width));
    const auto w = fornberg_weights(x[i], nodes, 1);
    double acc = 0.0;
    for (std::size_t k = 0; k < width; ++k) acc += w[k] * y[lo + k];
    out[i] = acc;
  }
  return out;
}

}  // namespace kahlerlab::numerics
