#include "npulse/quantum.hpp"

#include <cmath>
#include <sstream>

#include "npulse/error.hpp"

namespace npulse {

namespace {

constexpr double kNormTol = 1e-6;

void require_unit(const CVec4& c, const char* where) {
  const double n = c.norm();
  if (!(std::abs(n - 1.0) <= kNormTol)) {
    std::ostringstream os;
    os << where << ": c-vector is not normalized (|c| = " << n << ")";
    throw ConfigError(os.str());
  }
}

}  // namespace

double CVec4::norm() const { return std::sqrt(c0 * c0 + cx * cx + cy * cy + cz * cz); }

QutritModel QutritModel::transmon(double alpha_hz, double duration_s, double lambda) {
  return {kTwoPi * alpha_hz * duration_s, lambda};
}

void QutritModel::validate() const {
  if (!std::isfinite(Delta)) throw ConfigError("qutrit model: Delta must be finite");
  if (!(lambda > 0.0) || !std::isfinite(lambda)) throw ConfigError("qutrit model: lambda must be > 0");
}

void PulseMeta::validate() const {
  if (!(duration_s > 0.0) || !std::isfinite(duration_s))
    throw ConfigError("pulse meta: duration must be > 0");
}

Generator4 qubit_generator(Complex omega) {
  const double re = 0.5 * omega.real();
  const double im = 0.5 * omega.imag();
  return {{{0.0, -re, -im, 0.0},
           {re, 0.0, 0.0, im},
           {im, 0.0, 0.0, -re},
           {0.0, -im, re, 0.0}}};
}

Unitary2 cvec_to_unitary(const CVec4& c) {
  require_unit(c, "cvec_to_unitary");
  const Complex i(0.0, 1.0);
  Unitary2 u;
  u(0, 0) = c.c0 - i * c.cz;
  u(0, 1) = -c.cy - i * c.cx;
  u(1, 0) = c.cy - i * c.cx;
  u(1, 1) = c.c0 + i * c.cz;
  return u;
}

CVec4 block_cvec(const Eigen::Ref<const Eigen::MatrixXcd>& u) {
  CVec4 c;
  c.c0 = 0.5 * (u(0, 0).real() + u(1, 1).real());
  c.cz = 0.5 * (u(1, 1).imag() - u(0, 0).imag());
  c.cx = -0.5 * (u(0, 1).imag() + u(1, 0).imag());
  c.cy = 0.5 * (u(1, 0).real() - u(0, 1).real());
  return c;
}

CVec4 unitary_to_cvec(const Unitary2& u) {
  const Complex det = u.determinant();
  if (std::abs(det - 1.0) > kNormTol) {
    std::ostringstream os;
    os << "unitary_to_cvec: determinant " << det.real() << (det.imag() < 0 ? "" : "+") << det.imag()
       << "i is not 1 (remove the global phase first)";
    throw ConfigError(os.str());
  }
  const double unitarity = (u.adjoint() * u - Unitary2::Identity()).norm();
  if (unitarity > kNormTol) {
    std::ostringstream os;
    os << "unitary_to_cvec: matrix is not unitary (|U^dag U - I| = " << unitarity << ")";
    throw ConfigError(os.str());
  }
  return block_cvec(u);
}

Unitary3 qutrit_hamiltonian(Complex omega, const QutritModel& model) {
  Unitary3 h = Unitary3::Zero();
  h(1, 0) = 0.5 * omega;
  h(0, 1) = std::conj(h(1, 0));
  h(2, 1) = 0.5 * model.lambda * omega;
  h(1, 2) = std::conj(h(2, 1));
  h(2, 2) = model.Delta;
  return h;
}

double qubit_loss(const CVec4& c) {
  const double d0 = c.c0 - kInvSqrt2;
  return c.cz * c.cz + d0 * d0;
}

double leakage(const Unitary3& u) { return std::norm(u(2, 0)) + std::norm(u(2, 1)); }

double qutrit_loss(const Unitary3& u, double leak_weight) {
  const CVec4 c = block_cvec(u);
  const double d0 = c.c0 - kInvSqrt2;
  const double plane = c.cx * c.cx + c.cy * c.cy - 0.5;
  return d0 * d0 + c.cz * c.cz + plane * plane + leak_weight * leakage(u);
}

double vertical_fidelity(const CVec4& c) {
  const double s = std::abs(c.c0) + std::hypot(c.cx, c.cy);
  return 0.5 * s * s;
}

Unitary2 sigma_x() {
  Unitary2 s;
  s << 0.0, 1.0, 1.0, 0.0;
  return s;
}

Unitary2 sigma_y() {
  const Complex i(0.0, 1.0);
  Unitary2 s;
  s << 0.0, -i, i, 0.0;
  return s;
}

Unitary2 sigma_z() {
  Unitary2 s;
  s << 1.0, 0.0, 0.0, -1.0;
  return s;
}

Unitary2 rotation(double angle, double nx, double ny, double nz) {
  const Complex i(0.0, 1.0);
  const double c = std::cos(0.5 * angle);
  const double s = std::sin(0.5 * angle);
  return c * Unitary2::Identity() - i * s * (nx * sigma_x() + ny * sigma_y() + nz * sigma_z());
}

}  // namespace npulse
