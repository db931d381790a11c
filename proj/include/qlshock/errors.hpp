#pragma once

#include <stdexcept>
#include <string>

namespace qlshock {

/// Base class for every typed failure raised by the pipeline.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// 1 + 3 G''(0) rho dropped below the configured floor.
class HyperbolicityLoss : public Error {
 public:
  HyperbolicityLoss(double radicand, double floor)
      : Error("hyperbolicity lost: 1 + 3 g2 rho = " + std::to_string(radicand) +
              " below floor " + std::to_string(floor)),
        radicand_(radicand) {}
  double radicand() const noexcept { return radicand_; }

 private:
  double radicand_;
};

class OdeDivergence : public Error {
 public:
  using Error::Error;
};

class GridTooCoarse : public Error {
 public:
  using Error::Error;
};

class DegenerateDensity : public Error {
 public:
  using Error::Error;
};

/// Raised by the solver when |d_r psi0| exceeds the divergence guard.
/// Carries the last time at which the state was still valid.
class BlowupDetected : public Error {
 public:
  BlowupDetected(double t_last_valid, double max_gradient)
      : Error("gradient blowup detected after t = " + std::to_string(t_last_valid) +
              " (|d_r psi0| = " + std::to_string(max_gradient) + ")"),
        t_last_valid_(t_last_valid) {}
  double t_last_valid() const noexcept { return t_last_valid_; }

 private:
  double t_last_valid_;
};

class LeftDomain : public Error {
 public:
  using Error::Error;
};

class FanReordered : public Error {
 public:
  FanReordered(double t, std::size_t lower_label)
      : Error("characteristic fan reordered at t = " + std::to_string(t) + " (labels " +
              std::to_string(lower_label) + "/" + std::to_string(lower_label + 1) + ")"),
        t_(t),
        lower_label_(lower_label) {}
  double t() const noexcept { return t_; }
  std::size_t lower_label() const noexcept { return lower_label_; }

 private:
  double t_;
  std::size_t lower_label_;
};

class NoShock : public Error {
 public:
  using Error::Error;
};

class InsufficientCollapse : public Error {
 public:
  using Error::Error;
};

class ConfigInvalid : public Error {
 public:
  using Error::Error;
};

}  // namespace qlshock
