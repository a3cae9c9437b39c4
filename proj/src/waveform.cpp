#include "npulse/waveform.hpp"

#include <cmath>
#include <mutex>
#include <sstream>

#include <fftw3.h>

#include "npulse/error.hpp"

namespace npulse {

namespace {

// FFTW planning is not thread safe; execution is.
std::mutex& planner_mutex() {
  static std::mutex m;
  return m;
}

void dft(std::vector<Complex>& data, int sign) {
  auto* p = reinterpret_cast<fftw_complex*>(data.data());
  fftw_plan plan;
  {
    std::lock_guard lock(planner_mutex());
    plan = fftw_plan_dft_1d(static_cast<int>(data.size()), p, p, sign, FFTW_ESTIMATE);
  }
  if (plan == nullptr) throw NumericalError("analytic_signal: FFT planning failed");
  fftw_execute(plan);
  std::lock_guard lock(planner_mutex());
  fftw_destroy_plan(plan);
}

void require_rate(double rate) {
  if (!(rate > 0.0) || !std::isfinite(rate)) throw ConfigError("waveform: sample rate must be positive");
}

}  // namespace

std::vector<Complex> analytic_signal(const WaveformTrace& trace) {
  const std::size_t n = trace.samples.size();
  if (n == 0) throw ConfigError("analytic_signal: empty trace");
  if (n < 16) throw ConfigError("analytic_signal: need at least 16 samples");
  std::vector<Complex> z(trace.samples.begin(), trace.samples.end());
  for (const auto& v : z)
    if (!std::isfinite(v.real())) throw NumericalError("analytic_signal: non-finite sample");
  dft(z, FFTW_FORWARD);
  const std::size_t half = n / 2;
  for (std::size_t k = 1; k < n; ++k) {
    if (n % 2 == 0 && k == half) continue;
    z[k] *= k <= (n - 1) / 2 ? 2.0 : 0.0;
  }
  dft(z, FFTW_BACKWARD);
  const double inv = 1.0 / static_cast<double>(n);
  for (auto& v : z) v *= inv;
  return z;
}

Envelope demodulate(const std::vector<Complex>& analytic, double f_center, double sample_rate, double t0_s) {
  require_rate(sample_rate);
  if (!(std::abs(f_center) < 0.5 * sample_rate)) {
    std::ostringstream os;
    os << "demodulate: center frequency " << f_center << " Hz is not below Nyquist (" << 0.5 * sample_rate << " Hz)";
    throw ConfigError(os.str());
  }
  Envelope env{sample_rate, t0_s, std::vector<Complex>(analytic.size())};
  for (std::size_t k = 0; k < analytic.size(); ++k)
    env.samples[k] = analytic[k] * std::polar(1.0, -kTwoPi * f_center * env.time(k));
  return env;
}

WaveformTrace synthesize_waveform(const ControlField& field, const PulseMeta& meta, double f_carrier,
                                  double sample_rate, double pad_s) {
  meta.validate();
  require_rate(sample_rate);
  if (!(pad_s >= 0.0)) throw ConfigError("synthesize_waveform: padding must be >= 0");
  const auto pad = static_cast<long>(std::llround(pad_s * sample_rate));
  const auto body = static_cast<long>(std::llround(meta.duration_s * sample_rate));
  WaveformTrace trace{sample_rate, -static_cast<double>(pad) / sample_rate, {}};
  trace.samples.resize(static_cast<std::size_t>(body + 2 * pad));
  for (std::size_t k = 0; k < trace.samples.size(); ++k) {
    const double t = trace.time(k);
    if (t < 0.0 || t >= meta.duration_s) continue;
    trace.samples[k] = (field(meta.training_time(t)) * std::polar(1.0, kTwoPi * f_carrier * t)).real();
  }
  return trace;
}

Envelope crop_to_pulse(const Envelope& env, const PulseMeta& meta) {
  require_rate(env.sample_rate);
  Envelope out{env.sample_rate, 0.0, {}};
  bool first = true;
  const double eps = 1e-6 / env.sample_rate;
  for (std::size_t k = 0; k < env.samples.size(); ++k) {
    const double t = env.time(k);
    if (t < -eps || t >= meta.duration_s - eps) continue;
    if (first) out.t0_s = t;
    first = false;
    out.samples.push_back(env.samples[k]);
  }
  return out;
}

double calibrate_amplitude(const Envelope& env, const ControlField& reference, const PulseMeta& meta) {
  double num = 0.0, den = 0.0;
  for (std::size_t k = 0; k < env.samples.size(); ++k) {
    const double a = std::abs(env.samples[k]);
    num += a * std::abs(reference(meta.training_time(env.time(k))));
    den += a * a;
  }
  if (!(den > 0.0)) throw NumericalError("calibrate_amplitude: envelope is identically zero");
  return num / den;
}

ControlField envelope_field(const Envelope& env, const PulseMeta& meta, double scale) {
  require_rate(env.sample_rate);
  std::vector<Complex> s(env.samples);
  for (auto& v : s) v *= scale;
  return interpolated_field(std::move(s), meta.training_time(env.t0_s), kTwoPi / (env.sample_rate * meta.duration_s),
                            "envelope");
}

TrajectoryFidelity trajectory_fidelity(const Envelope& env, const ControlField& reference, const PulseMeta& meta,
                                       double scale, const IntegratorConfig& cfg) {
  meta.validate();
  require_rate(env.sample_rate);
  const double dt = 1.0 / env.sample_rate;
  const double covered = static_cast<double>(env.samples.size()) * dt;
  if (std::abs(covered - meta.duration_s) > dt * (1.0 + 1e-9) || std::abs(env.t0_s) > dt) {
    std::ostringstream os;
    os << "trajectory_fidelity: envelope covers " << covered << " s from " << env.t0_s << " s, pulse lasts "
       << meta.duration_s << " s";
    throw ConfigError(os.str());
  }
  // Share the reference breakpoints so both trajectories land on one grid.
  const ControlField measured = envelope_field(env, meta, scale);
  const ControlField aligned("envelope", [measured](double t, Side s) { return measured(t, s); }, measured.cap(),
                             reference.breakpoints());
  const auto a = propagate_qubit(aligned, cfg);
  const auto b = propagate_qubit(reference, cfg);
  TrajectoryFidelity out;
  out.times = a.times;
  out.F.resize(a.states.size());
  for (std::size_t k = 0; k < a.states.size(); ++k) {
    const CVec4& x = a.states[k];
    const CVec4& y = b.states[k];
    out.F[k] = std::min(1.0, std::abs(x.c0 * y.c0 + x.cx * y.cx + x.cy * y.cy + x.cz * y.cz));
    out.min_F = std::min(out.min_F, out.F[k]);
  }
  return out;
}

}  // namespace npulse
