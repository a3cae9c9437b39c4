#pragma once

#include <vector>

#include "npulse/diffsim.hpp"
#include "npulse/field.hpp"
#include "npulse/types.hpp"

namespace npulse {

/// Real samples at uniform spacing; `t0_s` is the time of the first sample
/// measured from the start of the pulse.
struct WaveformTrace {
  double sample_rate = 0.0;  // Hz
  double t0_s = 0.0;
  std::vector<double> samples;

  [[nodiscard]] double time(std::size_t k) const { return t0_s + static_cast<double>(k) / sample_rate; }
};

/// Complex baseband samples on the same kind of uniform grid.
struct Envelope {
  double sample_rate = 0.0;
  double t0_s = 0.0;
  std::vector<Complex> samples;

  [[nodiscard]] double time(std::size_t k) const { return t0_s + static_cast<double>(k) / sample_rate; }
};

/// Spectral construction: positive frequencies doubled, negative ones
/// removed, DC and Nyquist kept. Throws ConfigError below 16 samples.
std::vector<Complex> analytic_signal(const WaveformTrace& trace);

/// Multiplies sample k by exp(-i 2 pi f_center t_k). Throws ConfigError
/// unless |f_center| < sample_rate / 2.
Envelope demodulate(const std::vector<Complex>& analytic, double f_center, double sample_rate, double t0_s = 0.0);

/// Re[field(t) exp(i 2 pi f_carrier t)] sampled at `sample_rate`, in training
/// amplitude units, with `pad_s` of silence before and after the pulse.
WaveformTrace synthesize_waveform(const ControlField& field, const PulseMeta& meta, double f_carrier,
                                  double sample_rate, double pad_s = 0.0);

/// Samples whose time falls inside [0, duration).
Envelope crop_to_pulse(const Envelope& env, const PulseMeta& meta);

/// Least-squares scale s minimizing sum (s|e_k| - |reference(t_k)|)^2.
double calibrate_amplitude(const Envelope& env, const ControlField& reference, const PulseMeta& meta);

/// Envelope as a field in training units (Catmull-Rom between samples).
ControlField envelope_field(const Envelope& env, const PulseMeta& meta, double scale = 1.0);

struct TrajectoryFidelity {
  std::vector<double> times;  // training units
  std::vector<double> F;      // |tr(U_exp U_theory^dag)| / 2
  double min_F = 1.0;
};

/// Propagates the envelope and the reference on the same grid. Throws
/// ConfigError when the envelope duration differs from the pulse duration
/// by more than one sample.
TrajectoryFidelity trajectory_fidelity(const Envelope& env, const ControlField& reference, const PulseMeta& meta,
                                       double scale = 1.0, const IntegratorConfig& cfg = {});

}  // namespace npulse
