#pragma once

#include <functional>
#include <span>
#include <string>
#include <vector>

#include "npulse/types.hpp"

namespace npulse {

/// Which one-sided value to return when t sits exactly on a breakpoint.
/// Smooth fields ignore it.
enum class Side { Right, Center, Left };

/// Complex drive amplitude Omega(t) on the training time domain [-pi, pi].
///
/// The field is a value type wrapping a sampler. Piecewise fields publish
/// their breakpoints so integrators can split steps there and stay
/// high-order; `Side` selects the one-sided limit at a breakpoint.
class ControlField {
 public:
  using Sampler = std::function<Complex(double t, Side side)>;

  ControlField() = default;
  ControlField(std::string name, Sampler sampler, double cap, std::vector<double> breakpoints = {});

  Complex operator()(double t, Side side = Side::Center) const { return sampler_(t, side); }

  [[nodiscard]] const std::string& name() const { return name_; }
  /// Upper bound on |Omega(t)|.
  [[nodiscard]] double cap() const { return cap_; }
  /// Interior discontinuities, sorted, strictly inside (-pi, pi).
  [[nodiscard]] const std::vector<double>& breakpoints() const { return breakpoints_; }
  [[nodiscard]] bool valid() const { return static_cast<bool>(sampler_); }

  /// Samples on `times` (Side::Center).
  [[nodiscard]] std::vector<Complex> sample(std::span<const double> times) const;

 private:
  std::string name_;
  Sampler sampler_;
  double cap_ = 0.0;
  std::vector<double> breakpoints_;
};

ControlField constant_field(Complex value, std::string name = "constant");
ControlField zero_field();

/// (1+alpha) * e^{i delta t} * field(t)
ControlField detune(const ControlField& field, double delta, double alpha = 0.0);

/// factor * field(t)
ControlField scale_field(const ControlField& field, Complex factor);

/// Field interpolated from uniformly spaced samples (training time axis,
/// first sample at `t_first`, spacing `dt`). Catmull-Rom cubic in the
/// interior, linear extrapolation beyond the outermost samples.
ControlField interpolated_field(std::vector<Complex> samples, double t_first, double dt,
                                std::string name = "sampled");

/// `count` uniformly spaced grid points on [-pi, pi] (inclusive).
std::vector<double> time_grid(int count);

}  // namespace npulse
