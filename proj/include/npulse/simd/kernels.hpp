#pragma once

// Batched RK4 propagation + discrete adjoint for blocks of four scenarios.
//
// All scenarios in a block share the network drive N(t_s) sampled at the RK4
// stage times; lane j sees Omega_j(t_s) = N(t_s) * w_j(t_s) with the
// per-lane weight w_j = (1+alpha_j) e^{i delta_j t_s}. One forward pass stores
// the state at every step; the backward pass recomputes the stages and
// accumulates dL/dN per lane.
//
// The scalar kernels are the reference. The AVX2 kernels evaluate the same
// expression trees lane-parallel and must match them bit for bit (no FMA
// contraction on either side).

#include <array>
#include <optional>
#include <string_view>
#include <vector>

namespace npulse::simd {

inline constexpr int kLanes = 4;
inline constexpr int kQubitDim = 4;
inline constexpr int kQutritDim = 12;  // columns |0>, |1> of a 3x3 propagator, re/im interleaved

enum class Isa { Scalar, Avx2 };

/// Best ISA supported by both the build and the running CPU.
Isa detected_isa();
/// Detected ISA unless overridden by set_isa_override or NPULSE_SIMD=scalar.
Isa active_isa();
void set_isa_override(std::optional<Isa> isa);
std::string_view isa_name(Isa isa);
bool avx2_compiled();

/// Uniform RK4 grid; stage s sits at t0 + s*h/2, s = 0 .. 2*n_steps.
struct StageGrid {
  int n_steps = 0;
  double t0 = 0.0;
  double h = 0.0;

  [[nodiscard]] int stages() const { return 2 * n_steps + 1; }
  [[nodiscard]] double time(int s) const { return t0 + 0.5 * h * s; }
};

struct BlockProblem {
  StageGrid grid;
  const double* drive_re = nullptr;     // [stage]
  const double* drive_im = nullptr;
  const double* coupling_re = nullptr;  // qutrit only: lambda e^{i Delta (t_s + pi)}, [stage]
  const double* coupling_im = nullptr;
  const double* weight_re = nullptr;    // [stage][lane]
  const double* weight_im = nullptr;
  std::array<double, kLanes> loss_scale{};  // dTotal/dLoss_j, 0 for padding lanes
  double leak_weight = 1.0;
  bool want_gradient = true;
};

struct BlockResult {
  std::array<double, kLanes> loss{};
  /// Final state, [component][lane]. Qutrit states are in the frame rotating
  /// with Delta|2><2| (row 2 differs from the lab frame by a phase).
  std::array<double, kQutritDim * kLanes> final_state{};
  /// Caller-provided, stages*kLanes each, [stage][lane]; overwritten with
  /// loss_scale_j * dLoss_j/dRe N and dLoss_j/dIm N.
  double* grad_re = nullptr;
  double* grad_im = nullptr;
};

/// Scratch storage reused across calls.
struct Workspace {
  std::vector<double> states;
};

void qubit_block(Isa isa, const BlockProblem& problem, BlockResult& result, Workspace& ws);
void qutrit_block(Isa isa, const BlockProblem& problem, BlockResult& result, Workspace& ws);

namespace scalar {
void qubit_block(const BlockProblem& problem, BlockResult& result, Workspace& ws);
void qutrit_block(const BlockProblem& problem, BlockResult& result, Workspace& ws);
}  // namespace scalar

namespace avx2 {
void qubit_block(const BlockProblem& problem, BlockResult& result, Workspace& ws);
void qutrit_block(const BlockProblem& problem, BlockResult& result, Workspace& ws);
}  // namespace avx2

}  // namespace npulse::simd
