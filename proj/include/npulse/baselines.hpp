#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "npulse/diffsim.hpp"
#include "npulse/field.hpp"
#include "npulse/types.hpp"

namespace npulse {

/// Amplitude cap shared by every pulse family.
inline constexpr double kFieldCap = 3.0;

/// Constant real drive theta/(2 pi) over the whole pulse.
ControlField rectangular_pulse(double theta);

/// Cosine envelope I(t) = (theta/pi)(1 - cos(t+pi))/2 with quadrature
/// Q(t) = drag_coeff * I'(t) / Delta. Throws ConfigError for Delta = 0.
ControlField drag_pulse(double theta, double Delta, double drag_coeff);

struct DragCalibration {
  double coeff = 0.0;
  double loss = 0.0;  // qutrit loss at delta = 0
};

/// Coefficient minimizing the on-resonance qutrit loss: coarse scan over
/// [-range, range], then Brent refinement around the best scan point.
DragCalibration calibrate_drag(double theta, const QutritModel& model, const IntegratorConfig& cfg = {},
                               double range = 4.0);

struct CompositeSegment {
  double f = 1.0;    // fraction of the pulse duration
  double a = 0.0;    // amplitude, training units
  double phi = 0.0;  // phase, rad
};

struct CompositeSequence {
  std::vector<CompositeSegment> segments;

  /// Fractions in (0, 1] summing to 1 within 1e-12, finite entries.
  void validate() const;
  [[nodiscard]] std::string to_json() const;
  static CompositeSequence from_json(std::string_view text);
};

/// Piecewise constant field a_k e^{i phi_k} with breakpoints at the segment edges.
ControlField composite_field(const CompositeSequence& seq);

/// Exact propagator of a composite sequence under detuning delta (product of
/// closed-form SU(2) exponentials in the frame co-rotating with the drive).
CVec4 composite_cvec(const CompositeSequence& seq, double delta);

struct DetuningWindow {
  double low = -0.8;
  double high = 1.1;
  int points = 39;

  [[nodiscard]] std::vector<double> grid() const;
};

/// Mean qubit loss of the sequence over the window grid.
double composite_window_loss(const CompositeSequence& seq, const DetuningWindow& window);

struct GAConfig {
  int population = 64;
  int generations = 150;
  double mutation_scale = 0.3;
  double mutation_rate = 0.2;
  double crossover_rate = 0.9;
  int elite = 4;
  int tournament = 3;
  std::uint64_t seed = 1;
  int refine_iters = 300;
  /// Keep every segment amplitude at this value instead of optimizing it.
  std::optional<double> fixed_amplitude;

  void validate() const;
};

struct CompositeResult {
  CompositeSequence sequence;
  double ga_loss = 0.0;     // best after the genetic stage
  double window_loss = 0.0; // after gradient refinement
};

/// Genetic search over fractions, amplitudes and phases followed by BFGS on
/// the winner. `warm_start`, if given, is injected into the initial
/// population; a shorter sequence is first padded by splitting its longest
/// segment, which leaves its field unchanged.
CompositeResult optimize_composite(int n_pulses, const GAConfig& cfg, const DetuningWindow& window,
                                   const std::optional<CompositeSequence>& warm_start = std::nullopt);

}  // namespace npulse
