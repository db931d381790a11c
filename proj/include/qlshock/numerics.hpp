#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <limits>
#include <span>
#include <stdexcept>
#include <vector>

namespace qlshock::numerics {

/// First derivative of uniformly spaced samples. Interior points use the
/// centered stencil of the requested order (2 or 4); points without enough
/// neighbours fall back to second-order centered, and the two end points to
/// second-order one-sided differences.
inline std::vector<double> derivative(std::span<const double> f, double h, int order = 2) {
  const std::size_t n = f.size();
  std::vector<double> d(n, 0.0);
  if (n < 3) {
    if (n == 2) d[0] = d[1] = (f[1] - f[0]) / h;
    return d;
  }
  d[0] = (-3.0 * f[0] + 4.0 * f[1] - f[2]) / (2.0 * h);
  d[n - 1] = (3.0 * f[n - 1] - 4.0 * f[n - 2] + f[n - 3]) / (2.0 * h);
  for (std::size_t i = 1; i + 1 < n; ++i) {
    if (order >= 4 && i >= 2 && i + 2 < n) {
      d[i] = (f[i - 2] - 8.0 * f[i - 1] + 8.0 * f[i + 1] - f[i + 2]) / (12.0 * h);
    } else {
      d[i] = (f[i + 1] - f[i - 1]) / (2.0 * h);
    }
  }
  return d;
}

/// derivative() writing into a preallocated output of the same size.
inline void derivative_into(std::span<const double> f, double h, int order, std::span<double> d) {
  const std::size_t n = f.size();
  const double inv = 1.0 / h;
  d[0] = (-3.0 * f[0] + 4.0 * f[1] - f[2]) * (0.5 * inv);
  d[n - 1] = (3.0 * f[n - 1] - 4.0 * f[n - 2] + f[n - 3]) * (0.5 * inv);
  d[1] = (f[2] - f[0]) * (0.5 * inv);
  d[n - 2] = (f[n - 1] - f[n - 3]) * (0.5 * inv);
  if (order >= 4) {
    const double k = inv / 12.0;
    for (std::size_t i = 2; i + 2 < n; ++i)
      d[i] = (f[i - 2] - 8.0 * f[i - 1] + 8.0 * f[i + 1] - f[i + 2]) * k;
  } else {
    for (std::size_t i = 2; i + 2 < n; ++i) d[i] = (f[i + 1] - f[i - 1]) * (0.5 * inv);
  }
}

/// Centered first derivative at node i of a uniform array (interior only).
inline double d1_at(std::span<const double> f, std::size_t i, double inv_h, int order) {
  if (order >= 4 && i >= 2 && i + 2 < f.size())
    return (f[i - 2] - 8.0 * f[i - 1] + 8.0 * f[i + 1] - f[i + 2]) * (inv_h / 12.0);
  return (f[i + 1] - f[i - 1]) * (0.5 * inv_h);
}

inline double d2_at(std::span<const double> f, std::size_t i, double inv_h2, int order) {
  if (order >= 4 && i >= 2 && i + 2 < f.size())
    return (-f[i - 2] + 16.0 * f[i - 1] - 30.0 * f[i] + 16.0 * f[i + 1] - f[i + 2]) *
           (inv_h2 / 12.0);
  return (f[i + 1] - 2.0 * f[i] + f[i - 1]) * inv_h2;
}

/// Four-point Lagrange interpolation on a uniform grid x_i = x0 + i h.
/// Returns the value and the derivative of the interpolating cubic.
struct CubicSample {
  double value;
  double derivative;
};

inline CubicSample cubic_lagrange(std::span<const double> f, double x0, double h, double x) {
  const std::size_t n = f.size();
  if (n < 4) throw std::invalid_argument("cubic_lagrange needs at least 4 samples");
  const double u = (x - x0) / h;
  auto base = static_cast<std::ptrdiff_t>(std::floor(u)) - 1;
  base = std::clamp<std::ptrdiff_t>(base, 0, static_cast<std::ptrdiff_t>(n) - 4);
  const double s = u - static_cast<double>(base);  // in [1,2) for interior points
  const std::array<double, 4> y{f[base], f[base + 1], f[base + 2], f[base + 3]};
  // Nodes at 0,1,2,3.
  const double l0 = -(s - 1.0) * (s - 2.0) * (s - 3.0) / 6.0;
  const double l1 = s * (s - 2.0) * (s - 3.0) / 2.0;
  const double l2 = -s * (s - 1.0) * (s - 3.0) / 2.0;
  const double l3 = s * (s - 1.0) * (s - 2.0) / 6.0;
  const double d0 = -((s - 2.0) * (s - 3.0) + (s - 1.0) * (s - 3.0) + (s - 1.0) * (s - 2.0)) / 6.0;
  const double d1 = ((s - 2.0) * (s - 3.0) + s * (s - 3.0) + s * (s - 2.0)) / 2.0;
  const double d2 = -((s - 1.0) * (s - 3.0) + s * (s - 3.0) + s * (s - 1.0)) / 2.0;
  const double d3 = ((s - 1.0) * (s - 2.0) + s * (s - 2.0) + s * (s - 1.0)) / 6.0;
  return {l0 * y[0] + l1 * y[1] + l2 * y[2] + l3 * y[3],
          (d0 * y[0] + d1 * y[1] + d2 * y[2] + d3 * y[3]) / h};
}

/// Ordinary least squares y = a + b x.
struct LinearFit {
  double intercept = 0.0;
  double slope = 0.0;
  std::size_t n = 0;
};

inline LinearFit fit_line(std::span<const double> x, std::span<const double> y) {
  const std::size_t n = std::min(x.size(), y.size());
  LinearFit fit;
  fit.n = n;
  if (n < 2) {
    fit.intercept = n == 1 ? y[0] : std::numeric_limits<double>::quiet_NaN();
    fit.slope = std::numeric_limits<double>::quiet_NaN();
    return fit;
  }
  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    mx += x[i];
    my += y[i];
  }
  mx /= static_cast<double>(n);
  my /= static_cast<double>(n);
  double sxx = 0.0, sxy = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    sxx += (x[i] - mx) * (x[i] - mx);
    sxy += (x[i] - mx) * (y[i] - my);
  }
  fit.slope = sxx > 0.0 ? sxy / sxx : std::numeric_limits<double>::quiet_NaN();
  fit.intercept = my - fit.slope * mx;
  return fit;
}

/// Slope of log(y) against log(x); non-positive entries are skipped.
inline double loglog_slope(std::span<const double> x, std::span<const double> y) {
  std::vector<double> lx, ly;
  for (std::size_t i = 0; i < std::min(x.size(), y.size()); ++i) {
    if (x[i] > 0.0 && y[i] > 0.0) {
      lx.push_back(std::log(x[i]));
      ly.push_back(std::log(y[i]));
    }
  }
  if (lx.size() < 2) return std::numeric_limits<double>::quiet_NaN();
  return fit_line(lx, ly).slope;
}

/// Composite trapezoid rule on a uniform grid.
inline double trapezoid(std::span<const double> f, double h) {
  if (f.size() < 2) return 0.0;
  double s = 0.5 * (f.front() + f.back());
  for (std::size_t i = 1; i + 1 < f.size(); ++i) s += f[i];
  return s * h;
}

/// Trapezoid rule on arbitrary abscissae.
inline double trapezoid(std::span<const double> x, std::span<const double> f) {
  double s = 0.0;
  for (std::size_t i = 1; i < std::min(x.size(), f.size()); ++i)
    s += 0.5 * (f[i] + f[i - 1]) * (x[i] - x[i - 1]);
  return s;
}

/// Quintic smoothstep 10x^3 - 15x^4 + 6x^5 clamped to [0,1], with its first
/// two derivatives; C^2 at both ends.
struct Smoothstep {
  double value, d1, d2;
};

inline Smoothstep smoothstep5(double x) {
  if (x <= 0.0) return {0.0, 0.0, 0.0};
  if (x >= 1.0) return {1.0, 0.0, 0.0};
  const double x2 = x * x;
  return {x2 * x * (10.0 - 15.0 * x + 6.0 * x2), 30.0 * x2 * (1.0 - x) * (1.0 - x),
          60.0 * x * (1.0 - x) * (1.0 - 2.0 * x)};
}

}  // namespace qlshock::numerics
