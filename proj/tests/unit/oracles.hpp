#pragma once

// Independent reference propagators for tests: products of exact matrix
// exponentials of the Hamiltonian frozen at substep midpoints.

#include <Eigen/Eigenvalues>

#include "npulse/field.hpp"
#include "npulse/quantum.hpp"

namespace oracle {

inline npulse::Unitary2 qubit_exp_product(const npulse::ControlField& f, int substeps) {
  using namespace npulse;
  Unitary2 u = Unitary2::Identity();
  const double h = kTwoPi / substeps;
  for (int k = 0; k < substeps; ++k) {
    const Complex w = f(kTimeStart + (k + 0.5) * h);
    const double r = std::abs(w);
    if (r == 0.0) continue;
    u = rotation(h * r, w.real() / r, w.imag() / r, 0.0) * u;
  }
  return u;
}

inline npulse::Unitary3 expm_hermitian(const npulse::Unitary3& h, double tau) {
  Eigen::SelfAdjointEigenSolver<npulse::Unitary3> es(h);
  Eigen::Vector3cd ph;
  for (int i = 0; i < 3; ++i) ph[i] = std::polar(1.0, -tau * es.eigenvalues()[i]);
  return es.eigenvectors() * ph.asDiagonal() * es.eigenvectors().adjoint();
}

inline npulse::Unitary3 qutrit_exp_product(const npulse::ControlField& f, const npulse::QutritModel& m,
                                           int substeps) {
  using namespace npulse;
  Unitary3 u = Unitary3::Identity();
  const double h = kTwoPi / substeps;
  for (int k = 0; k < substeps; ++k) {
    const Complex w = f(kTimeStart + (k + 0.5) * h);
    u = expm_hermitian(qutrit_hamiltonian(w, m), h) * u;
  }
  return u;
}

}  // namespace oracle
