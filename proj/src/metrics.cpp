#include "npulse/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>
#include <sstream>

#include <boost/math/tools/minima.hpp>

#include "npulse/error.hpp"
#include "npulse/parallel.hpp"
#include "npulse/quantum.hpp"

namespace npulse {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();
const Complex kI(0.0, 1.0);

// b = D c for the {sigma0, sigmax, -i sigmay, sigmaz} basis.
const Eigen::Vector4cd kD(1.0, -kI, 1.0, -kI);

Eigen::Matrix4d real_part_in_c_basis(const ChiMatrix& chi) {
  const ChiMatrix m = kD.conjugate().asDiagonal() * chi * kD.asDiagonal();
  return m.real();
}

std::array<Unitary2, 4> chi_basis() {
  return {Unitary2::Identity(), sigma_x(), Unitary2(-kI * sigma_y()), sigma_z()};
}

Unitary2 bloch_to_rho(const std::array<double, 3>& r) {
  return 0.5 * (Unitary2::Identity() + r[0] * sigma_x() + r[1] * sigma_y() + r[2] * sigma_z());
}

void require_hermitian(const ChiMatrix& chi, const char* where) {
  if (!chi.allFinite()) throw NumericalError(std::string(where) + ": non-finite process matrix");
  if ((chi - chi.adjoint()).cwiseAbs().maxCoeff() > 1e-8)
    throw ConfigError(std::string(where) + ": process matrix is not Hermitian");
}

double wrap_angle(double a) {
  double w = std::remainder(a, kTwoPi);
  if (w <= -kPi) w += kTwoPi;
  return w;
}

}  // namespace

std::array<std::array<double, 3>, 4> qpt_input_bloch() {
  return {{{0.0, 0.0, 1.0}, {1.0, 0.0, 0.0}, {0.0, 1.0, 0.0}, {0.0, 0.0, -1.0}}};
}

QPTDataset qpt_from_unitary(const Eigen::Ref<const Eigen::MatrixXcd>& u, int shots, std::uint64_t seed) {
  if (u.rows() < 2 || u.rows() != u.cols()) throw ConfigError("qpt: propagator must be square with dimension >= 2");
  if (shots < 0) throw ConfigError("qpt: shots must be >= 0");
  const double s = kInvSqrt2;
  const std::array<std::array<Complex, 2>, 4> inputs{{{1.0, 0.0}, {s, s}, {s, s * kI}, {0.0, 1.0}}};
  std::mt19937_64 rng(seed);
  QPTDataset data;
  for (std::size_t i = 0; i < 4; ++i) {
    const Complex a = u(0, 0) * inputs[i][0] + u(0, 1) * inputs[i][1];
    const Complex b = u(1, 0) * inputs[i][0] + u(1, 1) * inputs[i][1];
    const Complex w = std::conj(a) * b;
    data.values[i] = {2.0 * w.real(), 2.0 * w.imag(), std::norm(a) - std::norm(b)};
    if (shots > 0) {
      for (auto& e : data.values[i]) {
        std::binomial_distribution<int> draw(shots, std::clamp(0.5 * (1.0 + e), 0.0, 1.0));
        e = 2.0 * draw(rng) / shots - 1.0;
      }
    }
  }
  return data;
}

QPTDataset simulate_qpt(const ControlField& field, const Scenario& scenario, const SystemSpec& system, int shots,
                        std::uint64_t seed, const IntegratorConfig& cfg) {
  const auto drive = detune(field, scenario.delta, scenario.alpha);
  if (system.is_qutrit()) return qpt_from_unitary(propagate_qutrit(drive, system.model, cfg).final_state(), shots, seed);
  return qpt_from_unitary(cvec_to_unitary(propagate_qubit(drive, cfg).final_state()), shots, seed);
}

ChiMatrix reconstruct_chi(const QPTDataset& data) {
  for (std::size_t i = 0; i < 4; ++i) {
    for (std::size_t k = 0; k < 3; ++k) {
      const double v = data.values[i][k];
      std::ostringstream where;
      where << "input " << QPTDataset::kInputs[i] << ", axis " << QPTDataset::kAxes[k];
      if (!std::isfinite(v)) throw FormatError("incomplete QPT dataset: missing value at " + where.str());
      if (std::abs(v) > 1.0 + 1e-9) throw FormatError("inconsistent QPT dataset: |value| > 1 at " + where.str());
    }
  }
  const Unitary2 e0 = bloch_to_rho(data.values[0]);
  const Unitary2 ex = bloch_to_rho(data.values[1]);
  const Unitary2 ey = bloch_to_rho(data.values[2]);
  const Unitary2 e1 = bloch_to_rho(data.values[3]);
  const Unitary2 eI = e0 + e1;
  const Unitary2 eX = 2.0 * ex - eI;
  const Unitary2 eY = 2.0 * ey - eI;
  // Images of |i><j|, assembled into the Choi matrix J[(i,k),(j,l)].
  const std::array<std::array<Unitary2, 2>, 2> img{{{e0, Unitary2(0.5 * (eX + kI * eY))},
                                                     {Unitary2(0.5 * (eX - kI * eY)), e1}}};
  Eigen::Matrix4cd J;
  for (int i = 0; i < 2; ++i)
    for (int j = 0; j < 2; ++j)
      for (int k = 0; k < 2; ++k)
        for (int l = 0; l < 2; ++l) J(i * 2 + k, j * 2 + l) = img[i][j](k, l);
  const auto basis = chi_basis();
  Eigen::Matrix4cd V;  // column m holds vec(E_m) with V[(i,k), m] = (E_m)_{k i}
  for (int m = 0; m < 4; ++m)
    for (int i = 0; i < 2; ++i)
      for (int k = 0; k < 2; ++k) V(i * 2 + k, m) = basis[m](k, i);
  return 0.25 * V.adjoint() * J * V;
}

ChiMatrix chi_from_cvec(const CVec4& c) {
  if (!(std::abs(c.norm() - 1.0) <= 1e-6)) throw ConfigError("chi_from_cvec: c-vector is not normalized");
  const Eigen::Vector4cd b(c.c0, -kI * c.cx, c.cy, -kI * c.cz);
  return b * b.adjoint();
}

UnitaryFit fit_unitary(const ChiMatrix& chi) {
  require_hermitian(chi, "fit_unitary");
  const Eigen::SelfAdjointEigenSolver<Eigen::Matrix4d> es(real_part_in_c_basis(chi));
  const Eigen::Vector4d v = es.eigenvectors().col(3);
  UnitaryFit fit;
  fit.eigenvalue = es.eigenvalues()[3];
  fit.gap = es.eigenvalues()[3] - es.eigenvalues()[2];
  fit.degenerate = fit.gap < 1e-9;
  double sign = 1.0;
  for (int k = 0; k < 4; ++k) {
    if (std::abs(v[k]) > 1e-12) {
      sign = v[k] < 0.0 ? -1.0 : 1.0;
      break;
    }
  }
  fit.c = {sign * v[0], sign * v[1], sign * v[2], sign * v[3]};
  return fit;
}

double fidelity_chi_at(const ChiMatrix& chi, double theta) {
  require_hermitian(chi, "fidelity_chi");
  const double purity = (chi * chi).trace().real();
  if (!(purity > 0.0)) throw NumericalError("fidelity_chi: process matrix has zero purity");
  const Eigen::Vector4d t(1.0, std::cos(theta), std::sin(theta), 0.0);
  return 0.5 * t.dot(real_part_in_c_basis(chi) * t) / std::sqrt(purity);
}

ChiFidelity fidelity_chi(const ChiMatrix& chi) {
  require_hermitian(chi, "fidelity_chi");
  const double purity = (chi * chi).trace().real();
  if (!(purity > 0.0)) throw NumericalError("fidelity_chi: process matrix has zero purity");
  const Eigen::Matrix4d R = real_part_in_c_basis(chi) / std::sqrt(purity);
  // F(T) = k0 + a1 cos T + b1 sin T + a2 cos 2T + b2 sin 2T
  const double k0 = 0.5 * (R(0, 0) + 0.5 * (R(1, 1) + R(2, 2)));
  const double a1 = R(0, 1), b1 = R(0, 2);
  const double a2 = 0.25 * (R(1, 1) - R(2, 2)), b2 = 0.5 * R(1, 2);
  auto F = [&](double t) { return k0 + a1 * std::cos(t) + b1 * std::sin(t) + a2 * std::cos(2 * t) + b2 * std::sin(2 * t); };
  auto dF = [&](double t) {
    return -a1 * std::sin(t) + b1 * std::cos(t) - 2 * a2 * std::sin(2 * t) + 2 * b2 * std::cos(2 * t);
  };
  auto d2F = [&](double t) {
    return -a1 * std::cos(t) - b1 * std::sin(t) - 4 * a2 * std::cos(2 * t) - 4 * b2 * std::sin(2 * t);
  };
  // Stationary points: z^2 F'(T) with z = e^{iT} is a quartic in z.
  std::array<Complex, 5> p{Complex(b2, -a2), Complex(0.5 * b1, -0.5 * a1), 0.0, Complex(0.5 * b1, 0.5 * a1),
                           Complex(b2, a2)};
  std::vector<double> candidates{0.0, 0.5 * kPi, kPi, -0.5 * kPi, std::atan2(b1, a1)};
  double scale = 0.0;
  for (const auto& q : p) scale = std::max(scale, std::abs(q));
  int degree = 4;
  while (degree > 0 && std::abs(p[static_cast<std::size_t>(degree)]) <= 1e-14 * scale) --degree;
  if (degree > 0) {
    Eigen::MatrixXcd companion = Eigen::MatrixXcd::Zero(degree, degree);
    for (int k = 0; k < degree; ++k) {
      companion(0, k) = -p[static_cast<std::size_t>(degree - 1 - k)] / p[static_cast<std::size_t>(degree)];
      if (k + 1 < degree) companion(k + 1, k) = 1.0;
    }
    const Eigen::ComplexEigenSolver<Eigen::MatrixXcd> ces(companion, false);
    for (int k = 0; k < degree; ++k) {
      const Complex z = ces.eigenvalues()[k];
      if (std::abs(z) > 0.0) candidates.push_back(std::arg(z));
    }
  }
  ChiFidelity best{-std::numeric_limits<double>::infinity(), 0.0};
  for (double t : candidates) {
    for (int it = 0; it < 4; ++it) {
      const double h = d2F(t);
      if (h == 0.0) break;
      const double next = t - dF(t) / h;
      if (!(F(next) >= F(t))) break;
      t = next;
    }
    const double f = F(t);
    if (f > best.fidelity + 1e-15) best = {f, wrap_angle(t)};
  }
  return best;
}

double ramsey_prob(const CVec4& c, double beta) {
  const double a = c.c0 * std::cos(0.5 * beta) + c.cz * std::sin(0.5 * beta);
  return 4.0 * (c.cx * c.cx + c.cy * c.cy) * a * a;
}

MaxP1 max_p1(const CVec4& c) {
  MaxP1 r;
  r.p = 4.0 * (c.cx * c.cx + c.cy * c.cy) * (c.c0 * c.c0 + c.cz * c.cz);
  if (c.c0 == 0.0) {
    r.beta0 = kPi;
    r.flagged = true;
  } else {
    r.beta0 = 2.0 * std::atan(c.cz / c.c0);
  }
  return r;
}

double if_hop_phase(double delta, const PulseMeta& meta, double t_pulse_s, double t_dead_s) {
  return kTwoPi * meta.detuning_hz(delta) * (t_pulse_s + t_dead_s);
}

CVec4 unwind_phase(const CVec4& c, double beta) {
  const Complex w = Complex(c.cx, c.cy) * std::polar(1.0, -beta);
  return {c.c0, w.real(), w.imag(), c.cz};
}

std::vector<SweepRow> detuning_sweep(const ControlField& field, std::span<const double> deltas,
                                     const SystemSpec& system, const PulseMeta& meta, const SweepOptions& opt) {
  meta.validate();
  opt.integrator.validate();
  if (system.is_qutrit()) system.model.validate();
  for (double d : deltas)
    if (!std::isfinite(d)) throw ConfigError("detuning_sweep: grid contains a non-finite detuning");
  std::vector<SweepRow> rows(deltas.size());
  parallel_for(deltas.size(), [&](std::size_t i) {
    SweepRow& row = rows[i];
    row.delta = deltas[i];
    try {
      const auto drive = detune(field, row.delta, opt.alpha);
      ChiMatrix chi;
      if (system.is_qutrit()) {
        const Unitary3 u = propagate_qutrit(drive, system.model, opt.integrator).final_state();
        chi = reconstruct_chi(qpt_from_unitary(u));
        row.c = fit_unitary(chi).c;
        row.leakage = leakage(u);
      } else {
        row.c = propagate_qubit(drive, opt.integrator).final_state();
        chi = chi_from_cvec(row.c);
        row.leakage = 0.0;
      }
      row.F_chi = fidelity_chi(chi).fidelity;
      if (opt.if_hop)
        row.c = unwind_phase(row.c, if_hop_phase(row.delta, meta, opt.t_pulse_s.value_or(meta.duration_s), opt.t_dead_s));
      const auto mp = max_p1(row.c);
      row.max_p1 = mp.p;
      row.beta0 = mp.beta0;
      row.theta_rot = 2.0 * std::acos(std::clamp(row.c.c0, -1.0, 1.0));
      row.phi_rot = std::atan2(row.c.cy, row.c.cx);
    } catch (const Error& e) {
      row.flagged = true;
      row.message = e.what();
      row.c = {kNaN, kNaN, kNaN, kNaN};
      row.F_chi = row.max_p1 = row.beta0 = row.leakage = row.theta_rot = row.phi_rot = kNaN;
    }
  });
  return rows;
}

double rmse_vs_theory(std::span<const SweepRow> rows_exp, std::span<const SweepRow> rows_theory) {
  if (rows_exp.size() != rows_theory.size() || rows_exp.empty())
    throw ConfigError("rmse_vs_theory: grids differ in length");
  double sum = 0.0;
  for (std::size_t i = 0; i < rows_exp.size(); ++i) {
    const double d = rows_exp[i].delta;
    if (std::abs(d - rows_theory[i].delta) > 1e-12 * std::max(1.0, std::abs(d)))
      throw ConfigError("rmse_vs_theory: grids differ at index " + std::to_string(i));
    const auto a = rows_exp[i].c.to_array();
    const auto b = rows_theory[i].c.to_array();
    for (std::size_t k = 0; k < 4; ++k) sum += (a[k] - b[k]) * (a[k] - b[k]);
  }
  return std::sqrt(sum / (4.0 * static_cast<double>(rows_exp.size())));
}

void NoiseModel::validate() const {
  if (!(T1 > 0.0) || !(T2 > 0.0) || !std::isfinite(T1) || !std::isfinite(T2))
    throw ConfigError("noise: T1 and T2 must be positive");
  if (!(T >= 0.0) || !std::isfinite(T)) throw ConfigError("noise: pulse duration must be >= 0");
  if (T2 > 2.0 * T1) throw ConfigError("noise: T2 > 2 T1 is unphysical");
}

double incoherent_bound(double T, double T1, double T2) {
  NoiseModel{T1, T2, T}.validate();
  const double inv_tphi = 1.0 / T2 - 0.5 / T1;
  return 1.0 - T / 3.0 * (1.0 / T1 + inv_tphi);
}

DecayTrace pseudo_identity_decay(const ControlField& field, const DecayConfig& cfg) {
  const auto c = propagate_qubit(detune(field, cfg.delta), cfg.integrator).final_state();
  return pseudo_identity_decay(cvec_to_unitary(c), cfg);
}

DecayTrace pseudo_identity_decay(const Unitary2& pulse, const DecayConfig& cfg) {
  if (cfg.n_max < 4) throw ConfigError("pseudo_identity_decay: n_max must be >= 4");
  if (cfg.shots < 0) throw ConfigError("pseudo_identity_decay: shots must be >= 0");
  double keep = 1.0, coherence = 1.0;
  if (cfg.noise) {
    cfg.noise->validate();
    keep = std::exp(-cfg.noise->T / cfg.noise->T1);
    const double inv_tphi = 1.0 / cfg.noise->T2 - 0.5 / cfg.noise->T1;
    coherence = std::sqrt(keep) * std::exp(-cfg.noise->T * inv_tphi);
  }
  Unitary2 rho = Unitary2::Zero();
  rho(cfg.start_excited ? 1 : 0, cfg.start_excited ? 1 : 0) = 1.0;
  std::mt19937_64 rng(cfg.seed);
  DecayTrace trace;
  auto record = [&](int n) {
    double z = (rho(0, 0) - rho(1, 1)).real();
    if (cfg.shots > 0) {
      std::binomial_distribution<int> draw(cfg.shots, std::clamp(rho(0, 0).real(), 0.0, 1.0));
      z = 2.0 * draw(rng) / cfg.shots - 1.0;
    }
    trace.n.push_back(n);
    trace.z.push_back(z);
  };
  record(0);
  for (int n = 1; n <= cfg.n_max; ++n) {
    for (int k = 0; k < 4; ++k) {
      rho = pulse * rho * pulse.adjoint();
      const Complex p1 = rho(1, 1);
      rho(0, 0) += (1.0 - keep) * p1;
      rho(1, 1) = keep * p1;
      rho(0, 1) *= coherence;
      rho(1, 0) *= coherence;
    }
    record(n);
  }

  // z(n) = A r^n + B: A and B are linear given r, r = exp(-u) is scanned on a
  // log grid and then polished with Brent.
  const auto N = trace.z.size();
  const auto [zmin, zmax] = std::minmax_element(trace.z.begin(), trace.z.end());
  if (*zmax - *zmin < 1e-12) {
    trace.offset = trace.z.front();
    return trace;
  }
  auto solve = [&](double u, double& A, double& B) {
    double s1 = 0, s2 = 0, sz = 0, s1z = 0;
    for (std::size_t i = 0; i < N; ++i) {
      const double e = std::exp(-u * trace.n[i]);
      s1 += e;
      s2 += e * e;
      sz += trace.z[i];
      s1z += e * trace.z[i];
    }
    const double n = static_cast<double>(N);
    const double det = s2 * n - s1 * s1;
    if (std::abs(det) < 1e-300) {
      A = 0.0;
      B = sz / n;
    } else {
      A = (s1z * n - s1 * sz) / det;
      B = (s2 * sz - s1 * s1z) / det;
    }
    double ssr = 0.0;
    for (std::size_t i = 0; i < N; ++i) {
      const double r = A * std::exp(-u * trace.n[i]) + B - trace.z[i];
      ssr += r * r;
    }
    return ssr;
  };
  auto ssr = [&](double log_u) {
    double A, B;
    return solve(std::exp(log_u), A, B);
  };
  const double lo = std::log(1e-9), hi = std::log(10.0);
  constexpr int scan = 121;
  int best = 0;
  double best_val = std::numeric_limits<double>::infinity();
  for (int i = 0; i < scan; ++i) {
    const double v = ssr(lo + (hi - lo) * i / (scan - 1));
    if (v < best_val) {
      best_val = v;
      best = i;
    }
  }
  const double a = lo + (hi - lo) * std::max(0, best - 1) / (scan - 1);
  const double b = lo + (hi - lo) * std::min(scan - 1, best + 1) / (scan - 1);
  boost::uintmax_t iters = 200;
  const auto [log_u, val] = boost::math::tools::brent_find_minima(ssr, a, b, 50, iters);
  const double u = std::exp(log_u);
  double A, B;
  const double res = solve(u, A, B);
  const double r = std::exp(-u);
  trace.block_decay = r;
  trace.amplitude = A;
  trace.offset = B;
  trace.fidelity = std::pow(r, 0.25);

  Eigen::MatrixXd J(static_cast<Eigen::Index>(N), 3);
  for (std::size_t i = 0; i < N; ++i) {
    const double n = trace.n[i];
    const auto row = static_cast<Eigen::Index>(i);
    J(row, 0) = std::pow(r, n);
    J(row, 1) = 1.0;
    J(row, 2) = n > 0 ? A * n * std::pow(r, n - 1) : 0.0;
  }
  const double sigma2 = res / std::max<double>(1.0, static_cast<double>(N) - 3.0);
  const Eigen::Matrix3d cov = sigma2 * (J.transpose() * J).inverse();
  trace.fidelity_err = 0.25 * std::pow(r, -0.75) * std::sqrt(std::max(0.0, cov(2, 2)));
  if (!std::isfinite(trace.fidelity_err)) trace.fidelity_err = 0.0;
  return trace;
}

}  // namespace npulse
