#include <catch_amalgamated.hpp>

#include <cmath>

#include "npulse/baselines.hpp"
#include "npulse/diffsim.hpp"
#include "npulse/error.hpp"
#include "npulse/quantum.hpp"

using namespace npulse;
using Catch::Matchers::WithinAbs;

namespace {

double cdist(const CVec4& a, const CVec4& b) {
  return std::max({std::abs(a.c0 - b.c0), std::abs(a.cx - b.cx), std::abs(a.cy - b.cy), std::abs(a.cz - b.cz)});
}

CompositeSequence three_segment() {
  return {{{0.25, 1.1, 0.3}, {0.5, -0.7, 2.0}, {0.25, 0.9, -1.2}}};
}

}  // namespace

TEST_CASE("rectangular pulse rotates by theta about x", "[baselines]") {
  const auto c = propagate_qubit(rectangular_pulse(kPi / 2)).final_state();
  CHECK_THAT(c.c0, WithinAbs(kInvSqrt2, 1e-9));
  CHECK_THAT(c.cx, WithinAbs(kInvSqrt2, 1e-9));
  const auto full = propagate_qubit(rectangular_pulse(kTwoPi)).final_state();
  CHECK_THAT(full.c0, WithinAbs(-1.0, 1e-9));
  CHECK_THROWS_AS(rectangular_pulse(0.0), ConfigError);
}

TEST_CASE("drag pulse has the requested area and quadrature", "[baselines]") {
  const auto plain = drag_pulse(kPi / 2, -27.9, 0.0);
  double area = 0.0;
  const int n = 4000;
  for (int k = 0; k < n; ++k) {
    const double t = kTimeStart + kTwoPi * (k + 0.5) / n;
    area += plain(t).real() * kTwoPi / n;
    CHECK(plain(t).imag() == 0.0);
  }
  CHECK_THAT(area, WithinAbs(kPi / 2, 1e-9));
  const auto d = drag_pulse(kPi / 2, -20.0, 2.0);
  // Q = coeff * I' / Delta with I' = (theta/2pi) sin(t + pi)
  CHECK_THAT(d(-kPi / 2).imag(), WithinAbs(2.0 * 0.25 * std::sin(kPi / 2) / -20.0, 1e-15));
  CHECK(std::abs(d(0.3)) <= d.cap());
  CHECK_THROWS_AS(drag_pulse(kPi / 2, 0.0, 1.0), ConfigError);
}

TEST_CASE("drag calibration lowers the on-resonance qutrit loss", "[baselines]") {
  const auto model = QutritModel::transmon(-222.34e6, 20e-9);
  const double plain = qutrit_loss(propagate_qutrit(drag_pulse(kPi / 2, model.Delta, 0.0), model).final_state());
  const auto cal = calibrate_drag(kPi / 2, model);
  CHECK(cal.loss < plain);
  CHECK(std::abs(cal.coeff) <= 4.0);
}

TEST_CASE("single-segment composite equals the rectangular pulse", "[baselines]") {
  const CompositeSequence one{{{1.0, 0.25, 0.0}}};
  CHECK(cdist(composite_cvec(one, 0.0), propagate_qubit(rectangular_pulse(kPi / 2)).final_state()) < 1e-9);
  const double area = 2.0 * std::acos(composite_cvec(one, 0.0).c0);
  CHECK_THAT(area, WithinAbs(kPi / 2, 1e-12));
}

TEST_CASE("exact composite propagator matches RK4 under detuning", "[baselines]") {
  const auto seq = three_segment();
  IntegratorConfig cfg;
  cfg.n_steps = 4096;
  for (double delta : {-0.8, 0.0, 0.37, 1.1}) {
    const auto rk = propagate_qubit(detune(composite_field(seq), delta), cfg).final_state();
    CHECK(cdist(composite_cvec(seq, delta), rk) < 1e-7);
  }
}

TEST_CASE("composite field respects breakpoint sides", "[baselines]") {
  const auto f = composite_field(three_segment());
  REQUIRE(f.breakpoints().size() == 2);
  const double e = f.breakpoints()[0];
  CHECK_THAT(e, WithinAbs(-kPi / 2, 1e-15));
  CHECK(f(e, Side::Left) == std::polar(1.1, 0.3));
  CHECK(f(e, Side::Right) == std::polar(-0.7, 2.0));
  CHECK(f.cap() == 1.1);
}

TEST_CASE("composite JSON round trip and validation", "[baselines]") {
  const auto seq = three_segment();
  const auto back = CompositeSequence::from_json(seq.to_json());
  REQUIRE(back.segments.size() == 3);
  for (std::size_t k = 0; k < 3; ++k) {
    CHECK(back.segments[k].f == seq.segments[k].f);
    CHECK(back.segments[k].a == seq.segments[k].a);
    CHECK(back.segments[k].phi == seq.segments[k].phi);
  }
  CHECK_THROWS_AS(CompositeSequence::from_json(R"({"segments":[{"f":0.5,"a":1,"phi":0}]})"), ConfigError);
  CHECK_THROWS_AS(CompositeSequence::from_json("{"), FormatError);
}

TEST_CASE("single-pulse optimization on a narrow window finds the pi/2 area", "[baselines]") {
  GAConfig cfg;
  cfg.population = 24;
  cfg.generations = 30;
  cfg.refine_iters = 100;
  const DetuningWindow narrow{-0.01, 0.01, 5};
  const auto r = optimize_composite(1, cfg, narrow);
  const double ideal = composite_window_loss({{{1.0, 0.25, 0.0}}}, narrow);
  CHECK(r.window_loss <= ideal + 1e-9);
  CHECK(r.window_loss <= r.ga_loss);
  CHECK_THAT(std::abs(r.sequence.segments[0].a), WithinAbs(0.25, 1e-3));
}

TEST_CASE("warm-started optimization never loses to its seed", "[baselines]") {
  GAConfig cfg;
  cfg.population = 16;
  cfg.generations = 5;
  cfg.refine_iters = 20;
  const DetuningWindow w;
  const auto r2 = optimize_composite(2, cfg, w);
  const auto r3 = optimize_composite(3, cfg, w, r2.sequence);
  CHECK(r3.sequence.segments.size() == 3);
  CHECK(r3.window_loss <= r2.window_loss + 1e-15);
  CHECK_THROWS_AS(optimize_composite(1, cfg, w, r2.sequence), ConfigError);
}

TEST_CASE("optimization is deterministic for a fixed seed", "[baselines]") {
  GAConfig cfg;
  cfg.population = 12;
  cfg.generations = 4;
  cfg.refine_iters = 5;
  const auto a = optimize_composite(2, cfg, {});
  const auto b = optimize_composite(2, cfg, {});
  CHECK(a.window_loss == b.window_loss);
  CHECK(a.sequence.to_json() == b.sequence.to_json());
}

TEST_CASE("shifting every phase rotates the propagator about z", "[baselines]") {
  auto seq = three_segment();
  const double phi0 = 0.83;
  for (auto& s : seq.segments) s.phi += phi0;
  for (double delta : {0.0, 0.6}) {
    const auto a = composite_cvec(three_segment(), delta);
    const auto b = composite_cvec(seq, delta);
    CHECK_THAT(b.c0, WithinAbs(a.c0, 1e-14));
    CHECK_THAT(b.cz, WithinAbs(a.cz, 1e-14));
    CHECK_THAT(b.cx, WithinAbs(std::cos(phi0) * a.cx - std::sin(phi0) * a.cy, 1e-14));
    CHECK_THAT(b.cy, WithinAbs(std::sin(phi0) * a.cx + std::cos(phi0) * a.cy, 1e-14));
  }
}

TEST_CASE("optimized three-segment sequence beats the rectangular pulse", "[baselines]") {
  GAConfig cfg;
  cfg.population = 32;
  cfg.generations = 40;
  cfg.refine_iters = 100;
  const DetuningWindow w;
  const auto r = optimize_composite(3, cfg, w);
  CHECK(r.window_loss < composite_window_loss({{{1.0, 0.25, 0.0}}}, w));
  double cap = 0.0;
  for (const auto& s : r.sequence.segments) cap = std::max(cap, std::abs(s.a));
  CHECK(cap <= kFieldCap);
}

TEST_CASE("fixed-amplitude optimization keeps the amplitude", "[baselines]") {
  GAConfig cfg;
  cfg.population = 8;
  cfg.generations = 2;
  cfg.refine_iters = 3;
  cfg.fixed_amplitude = 0.75;
  const auto r = optimize_composite(3, cfg, {});
  for (const auto& s : r.sequence.segments) CHECK(s.a == 0.75);
}

TEST_CASE("drag spectrum is asymmetric only with a nonzero coefficient", "[baselines]") {
  auto asymmetry = [](const ControlField& f) {
    const int n = 256;
    std::vector<Complex> x(n);
    for (int k = 0; k < n; ++k) x[static_cast<std::size_t>(k)] = f(kTimeStart + kTwoPi * (k + 0.5) / n);
    double diff = 0.0;
    for (int m = 1; m < 16; ++m) {
      Complex pos{}, neg{};
      for (int k = 0; k < n; ++k) {
        const double ph = kTwoPi * m * k / n;
        pos += x[static_cast<std::size_t>(k)] * std::polar(1.0, -ph);
        neg += x[static_cast<std::size_t>(k)] * std::polar(1.0, ph);
      }
      diff += std::abs(std::abs(pos) - std::abs(neg));
    }
    return diff;
  };
  CHECK(asymmetry(drag_pulse(kPi / 2, -27.9, 0.0)) < 1e-9);
  CHECK(asymmetry(drag_pulse(kPi / 2, -27.9, 1.5)) > 1e-3);
}
