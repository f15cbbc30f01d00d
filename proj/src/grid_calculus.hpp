#pragma once

// Differentiation and cumulative integration of sampled paths on arbitrary
// (monotone) grids.

#include <algorithm>
#include <cmath>
#include <span>
#include <vector>

#include <Eigen/Dense>

namespace spinrs::detail {

/// Fornberg weights for the `order`-th derivative at z from nodes x.
std::vector<double> fd_weights(double z, std::span<const double> x, int order);

/// First derivative at every grid point from a `width`-point stencil (5 by
/// default), centred where possible.
template <class T>
std::vector<T> differentiate(std::span<const double> t, const std::vector<T>& f, int width = 5);

/// Cumulative integral F(t_k) = int_{t_0}^{t_k} f, exact for cubics: each
/// interval integrates the cubic through the four nearest samples.
template <class T>
std::vector<T> cumulative_integral(std::span<const double> t, const std::vector<T>& f);

// ---------------------------------------------------------------------------

inline std::vector<std::size_t> stencil(std::size_t k, std::size_t n, std::size_t width) {
  width = std::min(width, n);
  std::size_t lo = k >= width / 2 ? k - width / 2 : 0;
  if (lo + width > n) lo = n - width;
  std::vector<std::size_t> idx(width);
  for (std::size_t i = 0; i < width; ++i) idx[i] = lo + i;
  return idx;
}

template <class T>
std::vector<T> differentiate(std::span<const double> t, const std::vector<T>& f, int width) {
  const std::size_t n = t.size();
  std::vector<T> out;
  out.reserve(n);
  for (std::size_t k = 0; k < n; ++k) {
    const auto idx = stencil(k, n, static_cast<std::size_t>(width));
    std::vector<double> nodes;
    for (auto i : idx) nodes.push_back(t[i]);
    const auto w = fd_weights(t[k], nodes, 1);
    T acc = w[0] * f[idx[0]];
    for (std::size_t i = 1; i < idx.size(); ++i) acc = acc + w[i] * f[idx[i]];
    out.push_back(acc);
  }
  return out;
}

template <class T>
std::vector<T> cumulative_integral(std::span<const double> t, const std::vector<T>& f) {
  const std::size_t n = t.size();
  std::vector<T> out;
  out.reserve(n);
  out.push_back(0.0 * f[0]);
  // Two-point Gauss-Legendre is exact for the cubic interpolant.
  const double g = 1.0 / std::sqrt(3.0);
  for (std::size_t k = 0; k + 1 < n; ++k) {
    const double a = t[k], b = t[k + 1];
    const double mid = 0.5 * (a + b), half = 0.5 * (b - a);
    std::size_t lo = k >= 1 ? k - 1 : 0;
    if (lo + 4 > n) lo = n >= 4 ? n - 4 : 0;
    const std::size_t width = std::min<std::size_t>(4, n);
    std::vector<double> nodes;
    for (std::size_t i = 0; i < width; ++i) nodes.push_back(t[lo + i]);
    T acc = 0.0 * f[0];
    for (double s : {-g, g}) {
      const auto w = fd_weights(mid + s * half, nodes, 0);
      for (std::size_t i = 0; i < width; ++i) acc = acc + (half * w[i]) * f[lo + i];
    }
    out.push_back(out.back() + acc);
  }
  return out;
}

}  // namespace spinrs::detail
