#pragma once

// Depth-channel plant: transfer-function construction from hydrodynamic
// parameters, the preset vehicle plant, and a controllable-canonical
// state-space realization with a fixed-step RK4 integrator.

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstddef>
#include <string>
#include <vector>

#include "auvtune/errors.hpp"

namespace auvtune {

/// Vehicle mass/inertia and linear hydrodynamic derivatives of the vertical plane.
struct HydroParams {
  double m = 0.0;   ///< mass [kg]
  double Iy = 0.0;  ///< pitch moment of inertia [kg m^2]
  double V = 0.0;   ///< travel speed [m/s]
  double g = 9.81;  ///< gravitational acceleration [m/s^2]
  double h = 0.0;   ///< metacentric arm, CG to CB [m]
  double Zw = 0.0;
  double Zw_dot = 0.0;
  double Zq = 0.0;
  double Zq_dot = 0.0;
  double Mw = 0.0;
  double Mw_dot = 0.0;
  double Mq = 0.0;
  double Mq_dot = 0.0;
  double Zde = 0.0;  ///< rudder-effect derivative

  void validate() const {
    if (!(m > 0.0)) throw ConfigError("hydro: m must be > 0");
    if (!(Iy > 0.0)) throw ConfigError("hydro: Iy must be > 0");
    if (!(g > 0.0)) throw ConfigError("hydro: g must be > 0");
    if (!(V >= 0.0)) throw ConfigError("hydro: V must be >= 0");
  }

  friend bool operator==(const HydroParams&, const HydroParams&) = default;
};

/// Coefficients of A3 s^4 + A2 s^3 + A1 s^2 + A0 s.
struct DenominatorCoeffs {
  double a0 = 0.0;
  double a1 = 0.0;
  double a2 = 0.0;
  double a3 = 0.0;
};

/// Rational function num(s)/den(s); coefficients are stored highest degree first.
struct TransferFunction {
  std::vector<double> numerator;
  std::vector<double> denominator;

  friend bool operator==(const TransferFunction&, const TransferFunction&) = default;
};

/// Effective polynomial degree, ignoring leading zeros. An all-zero polynomial has degree -1.
inline int degree(const std::vector<double>& coeffs) {
  for (std::size_t i = 0; i < coeffs.size(); ++i) {
    if (coeffs[i] != 0.0) return static_cast<int>(coeffs.size() - 1 - i);
  }
  return -1;
}

inline std::complex<double> evaluate_polynomial(const std::vector<double>& coeffs,
                                                std::complex<double> s) {
  std::complex<double> acc{0.0, 0.0};
  for (double c : coeffs) acc = acc * s + c;
  return acc;
}

inline std::complex<double> evaluate(const TransferFunction& tf, std::complex<double> s) {
  return evaluate_polynomial(tf.numerator, s) / evaluate_polynomial(tf.denominator, s);
}

/// Denominator coefficients exactly as printed for the depth channel,
/// including the mixed use of Zw and Zw_dot in A1/A2.
inline DenominatorCoeffs denominator_coeffs(const HydroParams& p) {
  p.validate();
  const double mgh = p.m * p.g * p.h;
  DenominatorCoeffs c;
  c.a0 = -mgh;
  c.a1 = p.Mq * p.Zw + mgh * (p.m - p.Zw) - p.Mw * (p.m * p.V + p.Zq);
  c.a2 = -p.Mq * (p.m - p.Zw) - p.Iy * p.Zw_dot;
  c.a3 = p.Iy * (p.m - p.Zw_dot);
  if (c.a3 == 0.0) throw DegeneratePlantError("degenerate plant: A3 = Iy (m - Zw_dot) is zero");
  return c;
}

/// Fourth-order rudder-to-depth transfer function, normalized to a monic denominator.
inline TransferFunction build_depth_tf(const HydroParams& p) {
  const DenominatorCoeffs c = denominator_coeffs(p);
  const double gain = p.Zde * p.V / c.a3;
  const double mgh = p.m * p.g * p.h;
  TransferFunction tf;
  tf.numerator = {gain * p.Iy, -gain * p.Mq, gain * mgh};
  tf.denominator = {1.0, c.a2 / c.a3, c.a1 / c.a3, c.a0 / c.a3, 0.0};
  return tf;
}

/// The preset benchmark vehicle:
/// (0.3559 s^2 + 5.226 s + 35.2459) / (s^4 + 10.0997 s^3 + 8.3879 s^2).
inline TransferFunction default_auv_plant() {
  return TransferFunction{{0.3559, 5.226, 35.2459}, {1.0, 10.0997, 8.3879, 0.0, 0.0}};
}

/// Single-input single-output realization dx/dt = A x + B u, y = C x + D u.
struct StateSpaceModel {
  Eigen::MatrixXd A;
  Eigen::VectorXd B;
  Eigen::RowVectorXd C;
  double D = 0.0;

  [[nodiscard]] Eigen::Index order() const noexcept { return A.rows(); }

  [[nodiscard]] double output(const Eigen::VectorXd& x, double u) const {
    if (x.size() != order()) throw DimensionMismatchError("state dimension mismatch");
    return C.dot(x) + D * u;
  }
};

/// Controllable canonical form: ones on the superdiagonal, last row holds the
/// negated monic denominator coefficients (constant term first), B = e_n.
inline StateSpaceModel tf_to_state_space(const TransferFunction& tf) {
  const int den_deg = degree(tf.denominator);
  if (tf.denominator.empty() || tf.denominator.front() == 0.0 || den_deg < 1) {
    throw ImproperTransferFunctionError(
        "denominator must have a nonzero leading coefficient and degree >= 1");
  }
  if (degree(tf.numerator) >= den_deg) {
    throw ImproperTransferFunctionError("numerator degree must be below denominator degree");
  }

  const auto n = static_cast<Eigen::Index>(den_deg);
  const double lead = tf.denominator.front();

  StateSpaceModel ss;
  ss.A = Eigen::MatrixXd::Zero(n, n);
  for (Eigen::Index i = 0; i + 1 < n; ++i) ss.A(i, i + 1) = 1.0;
  // denominator[k] multiplies s^(n-k); row entry j multiplies x_{j} ~ s^j.
  for (Eigen::Index j = 0; j < n; ++j) {
    ss.A(n - 1, j) = -tf.denominator[static_cast<std::size_t>(n - j)] / lead;
  }
  ss.B = Eigen::VectorXd::Zero(n);
  ss.B(n - 1) = 1.0;

  ss.C = Eigen::RowVectorXd::Zero(n);
  const auto num_len = static_cast<Eigen::Index>(tf.numerator.size());
  for (Eigen::Index k = 0; k < num_len; ++k) {
    const Eigen::Index power = num_len - 1 - k;
    if (power < n) ss.C(power) += tf.numerator[static_cast<std::size_t>(k)] / lead;
  }
  ss.D = 0.0;
  return ss;
}

/// C (jw I - A)^{-1} B + D.
inline std::complex<double> frequency_response(const StateSpaceModel& ss, double omega) {
  const Eigen::Index n = ss.order();
  const std::complex<double> jw{0.0, omega};
  Eigen::MatrixXcd M = -ss.A.cast<std::complex<double>>();
  M.diagonal().array() += jw;
  const Eigen::VectorXcd x = M.partialPivLu().solve(ss.B.cast<std::complex<double>>());
  std::complex<double> y = ss.D;
  for (Eigen::Index i = 0; i < n; ++i) y += ss.C(i) * x(i);
  return y;
}

inline Eigen::VectorXd plant_derivative(const StateSpaceModel& ss, const Eigen::VectorXd& x,
                                        double u) {
  if (x.size() != ss.order()) throw DimensionMismatchError("state dimension mismatch");
  return ss.A * x + ss.B * u;
}

/// Classical fourth-order Runge-Kutta with zero-order-hold input.
/// Owns its scratch vectors so repeated steps do not allocate.
class Rk4Integrator {
 public:
  explicit Rk4Integrator(const StateSpaceModel& ss)
      : ss_(&ss),
        k1_(ss.order()),
        k2_(ss.order()),
        k3_(ss.order()),
        k4_(ss.order()),
        tmp_(ss.order()) {}

  void step(Eigen::VectorXd& x, double u, double dt) {
    if (x.size() != ss_->order()) throw DimensionMismatchError("state dimension mismatch");
    const auto& A = ss_->A;
    const auto& B = ss_->B;
    k1_.noalias() = A * x;
    k1_ += B * u;
    tmp_ = x + (0.5 * dt) * k1_;
    k2_.noalias() = A * tmp_;
    k2_ += B * u;
    tmp_ = x + (0.5 * dt) * k2_;
    k3_.noalias() = A * tmp_;
    k3_ += B * u;
    tmp_ = x + dt * k3_;
    k4_.noalias() = A * tmp_;
    k4_ += B * u;
    x += (dt / 6.0) * (k1_ + 2.0 * k2_ + 2.0 * k3_ + k4_);
  }

 private:
  const StateSpaceModel* ss_;
  Eigen::VectorXd k1_, k2_, k3_, k4_, tmp_;
};

inline Eigen::VectorXd rk4_step(const StateSpaceModel& ss, const Eigen::VectorXd& x, double u,
                                double dt) {
  Eigen::VectorXd next = x;
  Rk4Integrator(ss).step(next, u, dt);
  return next;
}

}  // namespace auvtune
