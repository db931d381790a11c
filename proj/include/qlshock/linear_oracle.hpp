#pragma once

// Exact solution of the linear radial problem (g2 = 0). u = r phi solves the
// one-dimensional wave equation on r > 0 with u(t, 0) = 0, so d'Alembert's
// formula with odd extensions gives phi at any later time. The Cauchy data are
// represented by cubic Hermite interpolants built from the exact profile
// derivatives, which keeps the oracle fourth-order accurate in the data grid.

#include <array>
#include <cmath>
#include <cstddef>
#include <vector>

#include "qlshock/data_builder.hpp"
#include "qlshock/errors.hpp"

namespace qlshock::solver {

class DalembertOracle {
 public:
  explicit DalembertOracle(const data::CauchyData& d) : t0_(d.t), x0_(d.r_lo), h_(d.dr) {
    const std::size_t n = d.size();
    if (n < 2) throw ConfigInvalid("oracle needs at least two data nodes");
    u_.resize(n);
    du_.resize(n);
    v_.resize(n);
    dv_.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
      const double r = d.r(i);
      u_[i] = r * d.phi[i];
      du_[i] = d.phi[i] + r * d.dr_phi[i];
      v_[i] = r * d.psi0[i];
      dv_[i] = d.psi0[i] + r * d.dr_psi0[i];
    }
    // Cumulative integral of the Hermite interpolant of v (exact for cubics).
    cum_.assign(n, 0.0);
    for (std::size_t i = 0; i + 1 < n; ++i)
      cum_[i + 1] = cum_[i] + h_ * (v_[i] + v_[i + 1]) / 2.0 + h_ * h_ * (dv_[i] - dv_[i + 1]) / 12.0;
  }

  /// phi(t, r) for r > 0. Data vanish outside the sampled interval.
  double phi(double t, double r) const {
    if (!(r > 0.0)) throw LeftDomain("oracle evaluated at r <= 0");
    const double tau = t - t0_;
    const double a = r - tau, b = r + tau;
    const double u = 0.5 * (odd(u_, du_, a) + odd(u_, du_, b)) + 0.5 * (W(b) - W(std::abs(a)));
    return u / r;
  }

 private:
  double hermite(const std::vector<double>& f, const std::vector<double>& df, double x) const {
    const double s = (x - x0_) / h_;
    if (s < 0.0 || s > static_cast<double>(f.size() - 1)) return 0.0;
    auto i = static_cast<std::size_t>(s);
    if (i >= f.size() - 1) i = f.size() - 2;
    const double q = s - static_cast<double>(i);
    const double q2 = q * q, q3 = q2 * q;
    return (2 * q3 - 3 * q2 + 1) * f[i] + (q3 - 2 * q2 + q) * h_ * df[i] + (-2 * q3 + 3 * q2) * f[i + 1] +
           (q3 - q2) * h_ * df[i + 1];
  }

  double odd(const std::vector<double>& f, const std::vector<double>& df, double x) const {
    return x >= 0.0 ? hermite(f, df, x) : -hermite(f, df, -x);
  }

  /// Integral of v from 0 to x >= 0.
  double W(double x) const {
    const double s = (x - x0_) / h_;
    if (s <= 0.0) return 0.0;
    const auto last = static_cast<double>(cum_.size() - 1);
    if (s >= last) return cum_.back();
    const auto i = static_cast<std::size_t>(s);
    const double a = x0_ + h_ * static_cast<double>(i);
    // Three-point Gauss-Legendre is exact for the cubic piece.
    static constexpr std::array<double, 3> node{-0.7745966692414834, 0.0, 0.7745966692414834};
    static constexpr std::array<double, 3> weight{5.0 / 9.0, 8.0 / 9.0, 5.0 / 9.0};
    const double half = 0.5 * (x - a), mid = 0.5 * (x + a);
    double part = 0.0;
    for (int k = 0; k < 3; ++k) part += weight[k] * hermite(v_, dv_, mid + half * node[k]);
    return cum_[i] + half * part;
  }

  double t0_, x0_, h_;
  std::vector<double> u_, du_, v_, dv_, cum_;
};

}  // namespace qlshock::solver
