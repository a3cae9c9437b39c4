#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "npulse/controlnet.hpp"
#include "npulse/diffsim.hpp"
#include "npulse/field.hpp"
#include "npulse/types.hpp"

namespace npulse {

/// Process matrix in the basis {sigma0, sigmax, -i sigmay, sigmaz}.
using ChiMatrix = Eigen::Matrix4cd;

/// Expectation values <x>, <y>, <z> of the output for each prepared input
/// |0>, |+x>, |+y>, |1> (row order as in `kInputs`).
struct QPTDataset {
  static constexpr std::array<const char*, 4> kInputs{"0", "x", "y", "1"};
  static constexpr std::array<const char*, 3> kAxes{"x", "y", "z"};
  std::array<std::array<double, 3>, 4> values{};
};

/// Bloch vectors of the four prepared inputs.
std::array<std::array<double, 3>, 4> qpt_input_bloch();

/// Exact expectation values of the process on the qubit subspace (for the
/// qutrit, populations outside the subspace are simply lost). With
/// shots > 0 every value is replaced by a binomial estimate from that many
/// single-shot readouts.
QPTDataset qpt_from_unitary(const Eigen::Ref<const Eigen::MatrixXcd>& u, int shots = 0, std::uint64_t seed = 0);

/// Propagates `field` under the scenario's perturbation and tomographs it.
QPTDataset simulate_qpt(const ControlField& field, const Scenario& scenario, const SystemSpec& system,
                        int shots = 0, std::uint64_t seed = 0, const IntegratorConfig& cfg = {});

/// Linear inversion of a complete, trace-preserving dataset. Throws
/// FormatError for missing (non-finite) or out-of-range values.
ChiMatrix reconstruct_chi(const QPTDataset& data);

/// chi = b b^dagger with b = (c0, -i cx, cy, -i cz).
ChiMatrix chi_from_cvec(const CVec4& c);

struct UnitaryFit {
  CVec4 c;
  double eigenvalue = 0.0;  // leading eigenvalue of Re(D^dag chi D)
  double gap = 0.0;         // to the next eigenvalue
  bool degenerate = false;  // gap < 1e-9: the fit is not unique
};

/// Unit c minimizing |chi - chi_from_cvec(c)|_F, with c0 >= 0 (ties broken
/// by the first nonzero of cx, cy, cz being positive).
UnitaryFit fit_unitary(const ChiMatrix& chi);

struct ChiFidelity {
  double fidelity = 0.0;
  double theta = 0.0;  // azimuth of the best vertical-plane target, (-pi, pi]
};

/// tr(chi~ chi_target) maximized over targets (1, cos T, sin T, 0)/sqrt2,
/// with chi~ = chi / sqrt(tr chi^2).
ChiFidelity fidelity_chi(const ChiMatrix& chi);

/// Fidelity of the purified process at a fixed target azimuth.
double fidelity_chi_at(const ChiMatrix& chi, double theta);

/// |<1| U e^{i beta sz/2} U |0>|^2 = 4(cx^2+cy^2)(c0 cos(beta/2) + cz sin(beta/2))^2
double ramsey_prob(const CVec4& c, double beta);

struct MaxP1 {
  double p = 0.0;
  double beta0 = 0.0;
  bool flagged = false;  // c0 = 0: beta0 set to pi by continuity
};

/// Maximum of ramsey_prob over beta: 4(cx^2+cy^2)(c0^2+cz^2) at
/// beta0 = 2 atan(cz/c0).
MaxP1 max_p1(const CVec4& c);

struct SweepRow {
  double delta = 0.0;
  CVec4 c;
  double F_chi = 0.0;
  double max_p1 = 0.0;
  double beta0 = 0.0;
  double leakage = 0.0;
  double theta_rot = 0.0;  // 2 acos(c0)
  double phi_rot = 0.0;    // atan2(cy, cx)
  bool flagged = false;
  std::string message;
};

struct SweepOptions {
  /// Emulate the intermediate-frequency hop: rotate (cx, cy) back by
  /// beta = 2 pi delta_hz (t_pulse + t_dead).
  bool if_hop = false;
  double t_dead_s = 10e-9;
  /// Defaults to the pulse duration.
  std::optional<double> t_pulse_s;
  double alpha = 0.0;
  IntegratorConfig integrator;
};

/// Accumulated frame phase for the hop at dimensionless detuning delta.
double if_hop_phase(double delta, const PulseMeta& meta, double t_pulse_s, double t_dead_s);

/// (cx + i cy) -> (cx + i cy) e^{-i beta}
CVec4 unwind_phase(const CVec4& c, double beta);

/// One row per detuning. The qubit c comes from the propagator directly,
/// the qutrit c from simulated tomography of its qubit block. Rows whose
/// propagation fails are flagged with NaN entries.
std::vector<SweepRow> detuning_sweep(const ControlField& field, std::span<const double> deltas,
                                     const SystemSpec& system, const PulseMeta& meta, const SweepOptions& opt = {});

/// Root-mean-square over grid points and the four c-components.
double rmse_vs_theory(std::span<const SweepRow> rows_exp, std::span<const SweepRow> rows_theory);

struct NoiseModel {
  double T1 = 131e-6;
  double T2 = 64e-6;
  double T = 60e-9;  // pulse duration

  /// Throws ConfigError unless T1, T2 > 0, T >= 0 and T2 <= 2 T1.
  void validate() const;
};

/// 1 - T/3 (1/T1 + 1/T_phi) with 1/T_phi = 1/T2 - 1/(2 T1).
double incoherent_bound(double T, double T1, double T2);

struct DecayConfig {
  int n_max = 400;  // number of four-pulse blocks
  std::optional<NoiseModel> noise;
  int shots = 0;
  std::uint64_t seed = 0;
  bool start_excited = false;  // prepare |1> instead of |0>
  double delta = 0.0;
  IntegratorConfig integrator;
};

struct DecayTrace {
  std::vector<int> n;
  std::vector<double> z;
  double block_decay = 1.0;  // r in z(n) = A r^n + B
  double amplitude = 0.0;
  double offset = 0.0;
  double fidelity = 1.0;  // per pulse, r^(1/4)
  double fidelity_err = 0.0;
};

/// Density-matrix simulation of n_max repetitions of four pulses, each
/// followed by amplitude damping and pure dephasing over the pulse duration.
DecayTrace pseudo_identity_decay(const ControlField& field, const DecayConfig& cfg);

/// Same, starting from a given qubit propagator.
DecayTrace pseudo_identity_decay(const Unitary2& pulse, const DecayConfig& cfg);

}  // namespace npulse
