#include <catch_amalgamated.hpp>

#include <cmath>
#include <random>

#include "npulse/error.hpp"
#include "npulse/quantum.hpp"

using namespace npulse;
using Catch::Matchers::WithinAbs;

namespace {

CVec4 random_unit(std::mt19937_64& rng) {
  std::normal_distribution<double> g;
  CVec4 c{g(rng), g(rng), g(rng), g(rng)};
  const double n = c.norm();
  return {c.c0 / n, c.cx / n, c.cy / n, c.cz / n};
}

double max_abs(const Eigen::MatrixXcd& m) { return m.cwiseAbs().maxCoeff(); }

}  // namespace

TEST_CASE("qubit generator entries") {
  const auto m = qubit_generator({1.0, 0.0});
  CHECK(m[0][1] == -0.5);
  CHECK(m[1][0] == 0.5);
  CHECK(m[0][2] == 0.0);
  CHECK(m[2][0] == 0.0);

  const auto z = qubit_generator({0.0, 0.0});
  for (const auto& row : z)
    for (double v : row) CHECK(v == 0.0);

  const auto mi = qubit_generator({0.0, 1.0});
  CHECK(mi[0][2] == -0.5);
  CHECK(mi[2][0] == 0.5);
  CHECK(mi[0][1] == 0.0);
  CHECK(mi[1][0] == 0.0);
}

TEST_CASE("qubit generator is antisymmetric") {
  std::mt19937_64 rng(1);
  std::normal_distribution<double> g;
  for (int k = 0; k < 50; ++k) {
    const auto m = qubit_generator({g(rng), g(rng)});
    for (int i = 0; i < 4; ++i)
      for (int j = 0; j < 4; ++j) CHECK(m[i][j] + m[j][i] == 0.0);
  }
}

TEST_CASE("generator matches the Schrodinger equation") {
  // dU/dt = -i H U with H = 1/2 (Omega |1><0| + h.c.) must map to dc/dt = M c.
  std::mt19937_64 rng(2);
  std::normal_distribution<double> g;
  for (int k = 0; k < 20; ++k) {
    const Complex w(g(rng), g(rng));
    const CVec4 c = random_unit(rng);
    Unitary2 h;
    h << 0.0, 0.5 * std::conj(w), 0.5 * w, 0.0;
    const Unitary2 du = Complex(0, -1) * h * cvec_to_unitary(c);
    const CVec4 dc = block_cvec(du);
    const auto m = qubit_generator(w);
    const auto a = c.to_array();
    const auto d = dc.to_array();
    for (int i = 0; i < 4; ++i) {
      double acc = 0.0;
      for (int j = 0; j < 4; ++j) acc += m[i][j] * a[j];
      CHECK_THAT(acc, WithinAbs(d[i], 1e-14));
    }
  }
}

TEST_CASE("cvec_to_unitary examples") {
  CHECK(max_abs(cvec_to_unitary({1, 0, 0, 0}) - Unitary2::Identity()) == 0.0);
  const Unitary2 x90 = cvec_to_unitary({kInvSqrt2, kInvSqrt2, 0, 0});
  CHECK(max_abs(x90 - rotation(kPi / 2, 1, 0, 0)) < 1e-15);
  const Unitary2 z = cvec_to_unitary({0, 0, 0, 1});
  CHECK(max_abs(z - Complex(0, -1) * sigma_z()) == 0.0);
  CHECK(std::abs(x90.determinant() - 1.0) < 1e-15);
  CHECK_THROWS_AS(cvec_to_unitary({1, 0.1, 0, 0}), ConfigError);
}

TEST_CASE("unitary_to_cvec examples and round trip") {
  CHECK(unitary_to_cvec(Unitary2::Identity()) == CVec4{1, 0, 0, 0});
  const CVec4 y = unitary_to_cvec(rotation(kPi / 2, 0, 1, 0));
  CHECK_THAT(y.c0, WithinAbs(std::cos(kPi / 4), 1e-15));
  CHECK_THAT(y.cx, WithinAbs(0.0, 1e-15));
  CHECK_THAT(y.cy, WithinAbs(std::sin(kPi / 4), 1e-15));
  CHECK_THAT(y.cz, WithinAbs(0.0, 1e-15));

  std::mt19937_64 rng(3);
  for (int k = 0; k < 200; ++k) {
    const CVec4 c = random_unit(rng);
    const CVec4 r = unitary_to_cvec(cvec_to_unitary(c));
    CHECK_THAT(r.c0, WithinAbs(c.c0, 1e-12));
    CHECK_THAT(r.cx, WithinAbs(c.cx, 1e-12));
    CHECK_THAT(r.cy, WithinAbs(c.cy, 1e-12));
    CHECK_THAT(r.cz, WithinAbs(c.cz, 1e-12));
    CHECK(max_abs(cvec_to_unitary(r) - cvec_to_unitary(c)) < 1e-8);
  }
  // U(2) element with det = i is rejected, not projected.
  CHECK_THROWS_AS(unitary_to_cvec(std::polar(1.0, kPi / 4) * Unitary2::Identity()), ConfigError);
}

TEST_CASE("qutrit hamiltonian") {
  const QutritModel m{2.5, 1.37};
  const Unitary3 h0 = qutrit_hamiltonian(0.0, m);
  CHECK(max_abs(h0 - Eigen::Vector3cd(0, 0, 2.5).asDiagonal().toDenseMatrix()) == 0.0);
  const Unitary3 h1 = qutrit_hamiltonian(1.0, m);
  CHECK(h1(1, 0) == Complex(0.5, 0));
  CHECK_THAT(h1(2, 1).real(), WithinAbs(0.685, 1e-15));
  std::mt19937_64 rng(4);
  std::normal_distribution<double> g;
  for (int k = 0; k < 20; ++k) {
    const Unitary3 h = qutrit_hamiltonian({g(rng), g(rng)}, m);
    CHECK(max_abs(h - h.adjoint()) == 0.0);
  }
}

TEST_CASE("qubit loss examples") {
  CHECK_THAT(qubit_loss({kInvSqrt2, kInvSqrt2, 0, 0}), WithinAbs(0.0, 1e-16));
  CHECK_THAT(qubit_loss({1, 0, 0, 0}), WithinAbs(0.085786, 1e-6));
  CHECK_THAT(qubit_loss({1, 0, 0, 0}), WithinAbs((1 - kInvSqrt2) * (1 - kInvSqrt2), 1e-16));
  CHECK_THAT(qubit_loss({kInvSqrt2, 0, 0, kInvSqrt2}), WithinAbs(0.5, 1e-15));
}

TEST_CASE("qubit loss zero implies in-plane magnitude 1/2") {
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> u(0, kTwoPi);
  for (int k = 0; k < 20; ++k) {
    const double phi = u(rng);
    const CVec4 c{kInvSqrt2, kInvSqrt2 * std::cos(phi), kInvSqrt2 * std::sin(phi), 0};
    CHECK(qubit_loss(c) < 1e-30);
    CHECK_THAT(c.cx * c.cx + c.cy * c.cy, WithinAbs(0.5, 1e-15));
  }
}

TEST_CASE("qutrit loss examples") {
  Unitary3 u = Unitary3::Zero();
  u.topLeftCorner<2, 2>() = rotation(kPi / 2, 1, 0, 0);
  u(2, 2) = std::polar(1.0, 0.7);
  CHECK_THAT(qutrit_loss(u), WithinAbs(0.0, 1e-15));

  CHECK_THAT(qutrit_loss(Unitary3::Identity()), WithinAbs(0.335786, 1e-6));

  // Exact qubit block plus |u20|^2 = 0.01, scored with weight 3.
  Unitary3 v = Unitary3::Zero();
  v.topLeftCorner<2, 2>() = rotation(kPi / 2, 1, 0, 0);
  v(2, 0) = 0.1;
  CHECK_THAT(leakage(v), WithinAbs(0.01, 1e-15));
  CHECK_THAT(qutrit_loss(v, 3.0), WithinAbs(0.03, 1e-15));
}
