#pragma once

#include <cmath>
#include <string>

#include "qlshock/errors.hpp"

namespace qlshock {

/// Physical constants of -(1 + 3 G''(0) (d_t phi)^2) d_t^2 phi + Laplacian(phi) = 0
/// together with the short-pulse geometry.
struct ModelParams {
  double g2 = 0.0;     ///< G''(0); zero selects the linear wave equation
  double delta = 0.05; ///< pulse width
  double r0 = 2.0;     ///< inner radius of the pulse on the initial slice t = -r0
  double hyperbolicity_floor = 0.01;

  void validate() const {
    if (!(delta > 0.0) || !std::isfinite(delta)) throw ConfigInvalid("model.delta must be > 0");
    if (!(r0 > 0.0) || !std::isfinite(r0)) throw ConfigInvalid("model.r0 must be > 0");
    if (!(hyperbolicity_floor > 0.0))
      throw ConfigInvalid("model.hyperbolicity_floor must be > 0");
    if (!std::isfinite(g2)) throw ConfigInvalid("model.g2 must be finite");
  }

  double t_initial() const noexcept { return -r0; }
};

/// Constitutive relations derived from the wave speed c = (1 + 3 g2 rho)^{-1/2},
/// rho = psi0^2. Every function checks the hyperbolicity floor.
namespace constitutive {

inline double radicand(const ModelParams& p, double rho) noexcept { return 1.0 + 3.0 * p.g2 * rho; }

inline double checked_radicand(const ModelParams& p, double rho) {
  const double q = radicand(p, rho);
  if (!(q >= p.hyperbolicity_floor)) throw HyperbolicityLoss(q, p.hyperbolicity_floor);
  return q;
}

inline double speed_from_rho(const ModelParams& p, double rho) {
  if (p.g2 == 0.0) return 1.0;
  return 1.0 / std::sqrt(checked_radicand(p, rho));
}

inline double speed(const ModelParams& p, double psi0) { return speed_from_rho(p, psi0 * psi0); }

/// d(c^2)/d rho = -3 g2 / (1 + 3 g2 rho)^2 = -3 g2 c^4.
inline double dc2_drho(const ModelParams& p, double rho) {
  const double q = checked_radicand(p, rho);
  return -3.0 * p.g2 / (q * q);
}

/// m = -1/2 d(c^2)/d rho * T rho.
inline double source_m(const ModelParams& p, double psi0, double T_rho) {
  return -0.5 * dc2_drho(p, psi0 * psi0) * T_rho;
}

/// e = 1/(2 c^2) d(c^2)/d rho * Lbar rho.
inline double source_e(const ModelParams& p, double psi0, double Lbar_rho) {
  const double rho = psi0 * psi0;
  const double c = speed_from_rho(p, rho);
  return dc2_drho(p, rho) * Lbar_rho / (2.0 * c * c);
}

}  // namespace constitutive
}  // namespace qlshock
