#pragma once

#include <span>
#include <vector>

#include "npulse/controlnet.hpp"
#include "npulse/field.hpp"
#include "npulse/types.hpp"

namespace npulse {

/// Fixed-step classical RK4 on t in [-pi, pi].
struct IntegratorConfig {
  int n_steps = 512;
  /// Qutrit runs resolve the |2> phase: at most this many radians of
  /// Delta*h per step (see qutrit_step_count).
  double max_phase_step = 0.0625;

  void validate() const;
};

/// Steps used for a qutrit run: n_steps, raised until |Delta| h <= max_phase_step.
int qutrit_step_count(const QutritModel& model, const IntegratorConfig& cfg);

struct QubitTrajectory {
  std::vector<double> times;
  std::vector<CVec4> states;

  [[nodiscard]] const CVec4& final_state() const { return states.back(); }
};

/// Lab-frame propagators U(t).
struct QutritTrajectory {
  std::vector<double> times;
  std::vector<Unitary3> states;

  [[nodiscard]] const Unitary3& final_state() const { return states.back(); }
};

/// Integrates dc/dt = M(Omega(t)) c from c(-pi) = (1,0,0,0). Steps are split
/// at the field's breakpoints so piecewise fields keep full order.
/// Throws NumericalError naming the time of any non-finite field value.
QubitTrajectory propagate_qubit(const ControlField& field, const IntegratorConfig& cfg = {});

/// i dU/dt = H U on three levels from U(-pi) = I. Integrated in the frame
/// rotating with Delta|2><2| and returned in the lab frame.
QutritTrajectory propagate_qutrit(const ControlField& field, const QutritModel& model,
                                  const IntegratorConfig& cfg = {});

struct SystemSpec {
  enum class Kind { Qubit, Qutrit };
  Kind kind = Kind::Qubit;
  QutritModel model;
  double leak_weight = 1.0;

  static SystemSpec qubit() { return {}; }
  static SystemSpec qutrit(const QutritModel& model, double leak_weight = 1.0) {
    return {Kind::Qutrit, model, leak_weight};
  }
  [[nodiscard]] bool is_qutrit() const { return kind == Kind::Qutrit; }
};

struct LossGradient {
  double loss = 0.0;
  std::vector<double> grad;  // NetworkParams::flatten() order
};

/// Loss of one scenario and its gradient through the discrete RK4 map.
LossGradient loss_and_gradient(const NetworkParams& params, const Scenario& scenario, const SystemSpec& system,
                               const IntegratorConfig& cfg = {});

/// Per-scenario results of a batched evaluation.
struct BatchEvaluation {
  std::vector<double> losses;
  std::vector<CVec4> cvecs;       // qubit block, unnormalized for the qutrit
  std::vector<double> leakages;   // |u20|^2 + |u21|^2, zero for the qubit
  double mean_loss = 0.0;
  std::vector<double> grad;       // gradient of mean_loss, empty unless requested
};

/// Evaluates all scenarios against the same network. Scenarios are processed
/// in blocks of four on the active SIMD kernel; the gradient of the mean loss
/// is reduced in a fixed order, independent of the thread count.
BatchEvaluation evaluate_batch(const NetworkParams& params, std::span<const Scenario> scenarios,
                               const SystemSpec& system, const IntegratorConfig& cfg = {},
                               bool want_gradient = true);

}  // namespace npulse
