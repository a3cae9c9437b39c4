#pragma once

#include <array>

#include "npulse/types.hpp"

namespace npulse {

using Generator4 = std::array<std::array<double, 4>, 4>;

/// Real 4x4 generator M(omega) of the qubit equation of motion dc/dt = M c.
/// Antisymmetric for every omega, so |c| is conserved.
Generator4 qubit_generator(Complex omega);

/// Throws ConfigError unless |c| = 1 within 1e-6.
Unitary2 cvec_to_unitary(const CVec4& c);

/// Inverse of cvec_to_unitary. `u` must be in SU(2) within 1e-6; matrices with
/// det != 1 are rejected rather than phase-corrected.
CVec4 unitary_to_cvec(const Unitary2& u);

/// c-vector read off the qubit block of any 2x2 (or the upper block of a
/// 3x3) matrix without normalization or validation.
CVec4 block_cvec(const Eigen::Ref<const Eigen::MatrixXcd>& u);

/// H = 1/2 [omega |1><0| + lambda*omega |2><1| + h.c.] + Delta |2><2|.
Unitary3 qutrit_hamiltonian(Complex omega, const QutritModel& model);

/// Infidelity against a pi/2 rotation in a vertical plane:
/// cz^2 + (c0 - 1/sqrt2)^2.
double qubit_loss(const CVec4& c);

/// Qubit-block loss plus explicit in-plane and leakage terms:
///   (c0-1/sqrt2)^2 + cz^2 + (cx^2+cy^2-1/2)^2 + w(|u20|^2+|u21|^2)
double qutrit_loss(const Unitary3& u, double leak_weight = 1.0);

/// Process fidelity of the unitary c against the closest pi/2 rotation about
/// an equatorial axis: (|c0| + sqrt(cx^2+cy^2))^2 / 2.
double vertical_fidelity(const CVec4& c);

/// |u20|^2 + |u21|^2
double leakage(const Unitary3& u);

/// Pauli matrices in the usual basis.
Unitary2 sigma_x();
Unitary2 sigma_y();
Unitary2 sigma_z();

/// exp(-i*angle/2 * (nx sx + ny sy + nz sz)) for a unit axis.
Unitary2 rotation(double angle, double nx, double ny, double nz);

}  // namespace npulse
