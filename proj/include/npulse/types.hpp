#pragma once

#include <array>
#include <complex>
#include <numbers>

#include <Eigen/Dense>

namespace npulse {

using Complex = std::complex<double>;
using Unitary2 = Eigen::Matrix2cd;
using Unitary3 = Eigen::Matrix3cd;

inline constexpr double kPi = std::numbers::pi;
inline constexpr double kTwoPi = 2.0 * std::numbers::pi;
inline constexpr double kInvSqrt2 = 0.70710678118654752440;

/// Training time domain: every pulse lives on t in [-pi, pi] (duration 2*pi,
/// so the amplitude for a full 2*pi rotation is 1).
inline constexpr double kTimeStart = -kPi;
inline constexpr double kTimeEnd = kPi;

/// Real coefficients of an SU(2) propagator,
/// U = c0*sigma0 - i*(cx*sigmax + cy*sigmay + cz*sigmaz).
struct CVec4 {
  double c0 = 1.0;
  double cx = 0.0;
  double cy = 0.0;
  double cz = 0.0;

  [[nodiscard]] double norm() const;
  [[nodiscard]] std::array<double, 4> to_array() const { return {c0, cx, cy, cz}; }
  static CVec4 from_array(const std::array<double, 4>& a) { return {a[0], a[1], a[2], a[3]}; }

  friend bool operator==(const CVec4&, const CVec4&) = default;
};

/// Transmon truncated to three levels, expressed in training units.
struct QutritModel {
  double Delta = 0.0;    // anharmonic offset of |2>, = 2*pi*alpha*T
  double lambda = 1.37;  // <2|q|1> / <1|q|0>

  /// Delta for anharmonicity `alpha_hz` (Hz, negative for a transmon) and a
  /// pulse of physical duration `duration_s`.
  static QutritModel transmon(double alpha_hz, double duration_s, double lambda = 1.37);
  void validate() const;
};

/// Physical scale attached to a pulse designed in training units.
struct PulseMeta {
  double duration_s = 60e-9;

  [[nodiscard]] double omega_2pi() const { return kTwoPi / duration_s; }  // rad/s
  /// Detuning in Hz -> units of Omega_2pi (delta_hz * 2*pi / Omega_2pi).
  [[nodiscard]] double dimensionless_detuning(double delta_hz) const { return delta_hz * duration_s; }
  [[nodiscard]] double detuning_hz(double delta) const { return delta / duration_s; }
  /// Physical time (s, measured from pulse start) -> training time.
  [[nodiscard]] double training_time(double t_s) const { return kTimeStart + kTwoPi * t_s / duration_s; }
  [[nodiscard]] double physical_time(double t) const { return (t - kTimeStart) * duration_s / kTwoPi; }
  void validate() const;
};

}  // namespace npulse
