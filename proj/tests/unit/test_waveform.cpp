#include <catch_amalgamated.hpp>

#include <cmath>
#include <random>

#include "npulse/baselines.hpp"
#include "npulse/error.hpp"
#include "npulse/waveform.hpp"

using namespace npulse;
using Catch::Matchers::WithinAbs;

namespace {

WaveformTrace tone(double f, double fs, std::size_t n, double phase = 0.0, double amp = 1.0) {
  WaveformTrace t{fs, 0.0, std::vector<double>(n)};
  for (std::size_t k = 0; k < n; ++k) t.samples[k] = amp * std::cos(kTwoPi * f * t.time(k) + phase);
  return t;
}

bool interior(std::size_t k, std::size_t n) { return k >= n / 20 && k < n - n / 20; }

// Smooth, band-limited drive: cosine window times a slow phase ramp.
ControlField smooth_pulse() {
  return {"smooth", [](double t, Side) { return 0.25 * (1.0 + std::cos(t)) * std::polar(1.0, 0.7 * t); }, 0.5};
}

}  // namespace

TEST_CASE("analytic signal of textbook tones", "[waveform]") {
  const std::size_t n = 1000;
  const double fs = 1e9, f = 50e6;
  const auto c = analytic_signal(tone(f, fs, n));
  const auto s = analytic_signal(tone(f, fs, n, -kPi / 2));
  for (std::size_t k = 0; k < n; ++k) {
    if (!interior(k, n)) continue;
    const Complex e = std::polar(1.0, kTwoPi * f * k / fs);
    CHECK(std::abs(c[k] - e) < 1e-6);
    CHECK(std::abs(s[k] - Complex(0.0, -1.0) * e) < 1e-6);
  }
  const auto dc = analytic_signal({fs, 0.0, std::vector<double>(64, 0.7)});
  for (const auto& v : dc) CHECK(std::abs(v - Complex(0.7, 0.0)) < 1e-14);
}

TEST_CASE("analytic signal keeps the input and doubles AC energy", "[waveform]") {
  std::mt19937_64 rng(2);
  std::normal_distribution<double> g;
  for (std::size_t n : {64u, 101u, 1024u}) {
    WaveformTrace t{1e9, 0.0, std::vector<double>(n)};
    for (auto& v : t.samples) v = g(rng);
    const auto z = analytic_signal(t);
    double ex = 0.0, ez = 0.0, mean = 0.0, alt = 0.0;
    for (std::size_t k = 0; k < n; ++k) {
      CHECK(std::abs(z[k].real() - t.samples[k]) < 1e-10 * (1.0 + std::abs(t.samples[k])));
      ex += t.samples[k] * t.samples[k];
      ez += std::norm(z[k]);
      mean += t.samples[k];
      alt += (k % 2 ? -1.0 : 1.0) * t.samples[k];
    }
    // DC and (for even n) Nyquist bins are kept, not doubled.
    double correction = mean * mean / static_cast<double>(n);
    if (n % 2 == 0) correction += alt * alt / static_cast<double>(n);
    CHECK_THAT(ez, WithinAbs(2.0 * ex - correction, 1e-9 * ex));
  }
}

TEST_CASE("analytic signal input checks", "[waveform]") {
  CHECK_THROWS_AS(analytic_signal({1e9, 0.0, {}}), ConfigError);
  CHECK_THROWS_AS(analytic_signal({1e9, 0.0, std::vector<double>(15, 1.0)}), ConfigError);
}

TEST_CASE("demodulation of tones", "[waveform]") {
  const std::size_t n = 2000;
  const double fs = 10e9, fc = 100e6;
  const auto env = demodulate(analytic_signal(tone(fc, fs, n, 0.0, 0.8)), fc, fs);
  for (std::size_t k = 0; k < n; ++k)
    if (interior(k, n)) CHECK(std::abs(env.samples[k] - Complex(0.8, 0.0)) < 0.008);
  const double df = 5e6;
  const auto off = demodulate(analytic_signal(tone(fc + df, fs, n)), fc, fs);
  for (std::size_t k = 0; k < n; ++k)
    if (interior(k, n)) CHECK(std::abs(off.samples[k] - std::polar(1.0, kTwoPi * df * k / fs)) < 0.01);
  CHECK_THROWS_AS(demodulate({}, 6e9, 10e9), ConfigError);
}

TEST_CASE("synthesis and demodulation recover a band-limited envelope", "[waveform]") {
  const PulseMeta meta{60e-9};
  const auto field = smooth_pulse();
  const auto trace = synthesize_waveform(field, meta, 100e6, 10e9, 20e-9);
  CHECK(trace.samples.size() == 1000);
  const auto env = crop_to_pulse(demodulate(analytic_signal(trace), 100e6, 10e9, trace.t0_s), meta);
  REQUIRE(env.samples.size() == 600);
  CHECK(env.t0_s == 0.0);
  double err = 0.0, ref = 0.0;
  for (std::size_t k = 0; k < env.samples.size(); ++k) {
    if (!interior(k, env.samples.size())) continue;
    const Complex want = field(meta.training_time(env.time(k)));
    err += std::norm(env.samples[k] - want);
    ref += std::norm(want);
  }
  CHECK(std::sqrt(err / ref) < 0.01);
  CHECK_THAT(calibrate_amplitude(env, field, meta), WithinAbs(1.0, 0.01));
  CHECK(trajectory_fidelity(env, field, meta).min_F > 0.999);
}

TEST_CASE("trajectory fidelity of an exactly sampled envelope is one", "[waveform]") {
  const PulseMeta meta{60e-9};
  const auto field = smooth_pulse();
  Envelope env{10e9, 0.0, std::vector<Complex>(600)};
  for (std::size_t k = 0; k < 600; ++k) env.samples[k] = field(meta.training_time(env.time(k)));
  const auto r = trajectory_fidelity(env, field, meta);
  CHECK(r.min_F > 1.0 - 1e-9);
  CHECK(r.F.size() == r.times.size());

  // Global phase on both the envelope and the reference leaves F unchanged.
  const Complex ph = std::polar(1.0, 0.9);
  Envelope rotated = env;
  for (auto& v : rotated.samples) v *= ph;
  const auto r2 = trajectory_fidelity(rotated, scale_field(field, ph), meta);
  for (std::size_t k = 0; k < r.F.size(); ++k) CHECK_THAT(r2.F[k], WithinAbs(r.F[k], 1e-12));
}

TEST_CASE("five percent over-rotation matches the analytic fidelity", "[waveform]") {
  const PulseMeta meta{20e-9};
  const auto rect = rectangular_pulse(kPi / 2);
  Envelope env{10e9, 0.0, std::vector<Complex>(200, rect(0.0))};
  const auto r = trajectory_fidelity(env, rect, meta, 1.05);
  // tr(R(1.05 a) R(a)^dag)/2 = cos(0.05 a / 2) with a = pi/2
  CHECK_THAT(r.F.back(), WithinAbs(std::cos(0.05 * kPi / 4), 1e-9));
  CHECK(r.F.back() < 1.0);
}

TEST_CASE("envelope duration must match the pulse", "[waveform]") {
  const PulseMeta meta{60e-9};
  Envelope env{10e9, 0.0, std::vector<Complex>(590)};
  CHECK_THROWS_AS(trajectory_fidelity(env, smooth_pulse(), meta), ConfigError);
  env.samples.resize(601);
  CHECK_NOTHROW(trajectory_fidelity(env, smooth_pulse(), meta));
}
