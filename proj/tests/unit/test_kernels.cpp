#include <catch_amalgamated.hpp>

#include <cstring>
#include <random>
#include <vector>

#include "npulse/simd/kernels.hpp"
#include "npulse/types.hpp"

using namespace npulse;
using namespace npulse::simd;

namespace {

struct RandomProblem {
  std::vector<double> dre, dim, cre, cim, wre, wim;
  BlockProblem p;

  RandomProblem(std::uint64_t seed, int n_steps, bool qutrit) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> g;
    p.grid = {n_steps, -kPi, kTwoPi / n_steps};
    const auto S = static_cast<std::size_t>(p.grid.stages());
    dre.resize(S);
    dim.resize(S);
    wre.resize(S * kLanes);
    wim.resize(S * kLanes);
    for (auto& v : dre) v = g(rng);
    for (auto& v : dim) v = g(rng);
    for (auto& v : wre) v = g(rng);
    for (auto& v : wim) v = g(rng);
    p.drive_re = dre.data();
    p.drive_im = dim.data();
    p.weight_re = wre.data();
    p.weight_im = wim.data();
    if (qutrit) {
      cre.resize(S);
      cim.resize(S);
      for (std::size_t s = 0; s < S; ++s) {
        const Complex c = 1.37 * std::polar(1.0, -5.0 * (p.grid.time(static_cast<int>(s)) + kPi));
        cre[s] = c.real();
        cim[s] = c.imag();
      }
      p.coupling_re = cre.data();
      p.coupling_im = cim.data();
    }
    p.loss_scale = {0.25, 0.5, 1.0, 0.0};
    p.leak_weight = 1.5;
  }
};

struct Outputs {
  BlockResult r;
  std::vector<double> gre, gim;
};

Outputs run(void (*fn)(const BlockProblem&, BlockResult&, Workspace&), const BlockProblem& p) {
  Outputs o;
  const auto S = static_cast<std::size_t>(p.grid.stages());
  o.gre.assign(S * kLanes, 123.0);  // garbage; kernels must overwrite
  o.gim.assign(S * kLanes, -7.0);
  o.r.grad_re = o.gre.data();
  o.r.grad_im = o.gim.data();
  Workspace ws;
  fn(p, o.r, ws);
  return o;
}

bool bit_equal(const std::vector<double>& a, const std::vector<double>& b) {
  return a.size() == b.size() && std::memcmp(a.data(), b.data(), a.size() * sizeof(double)) == 0;
}

template <std::size_t N>
bool bit_equal(const std::array<double, N>& a, const std::array<double, N>& b) {
  return std::memcmp(a.data(), b.data(), N * sizeof(double)) == 0;
}

}  // namespace

TEST_CASE("dispatch reports a usable ISA") {
  const Isa d = detected_isa();
  CHECK((d == Isa::Scalar || avx2_compiled()));
  set_isa_override(Isa::Scalar);
  CHECK(active_isa() == Isa::Scalar);
  set_isa_override(std::nullopt);
  CHECK(isa_name(Isa::Scalar) == "scalar");
  CHECK(isa_name(Isa::Avx2) == "avx2");
}

TEST_CASE("scalar kernels are deterministic and overwrite gradients") {
  RandomProblem rp(1, 32, false);
  const auto a = run(scalar::qubit_block, rp.p);
  const auto b = run(scalar::qubit_block, rp.p);
  CHECK(bit_equal(a.gre, b.gre));
  CHECK(bit_equal(a.r.loss, b.r.loss));
  // Lane 3 has zero loss scale, so its gradient is exactly zero.
  for (int s = 0; s < rp.p.grid.stages(); ++s) CHECK(a.gre[static_cast<std::size_t>(s * kLanes + 3)] == 0.0);
}

TEST_CASE("AVX2 kernels match scalar bit for bit") {
  if (detected_isa() != Isa::Avx2) SKIP("AVX2 not available on this CPU");
  for (std::uint64_t seed : {1u, 2u, 3u}) {
    for (bool qutrit : {false, true}) {
      RandomProblem rp(seed, 64, qutrit);
      auto* sfn = qutrit ? scalar::qutrit_block : scalar::qubit_block;
      auto* vfn = qutrit ? avx2::qutrit_block : avx2::qubit_block;
      for (bool grad : {true, false}) {
        rp.p.want_gradient = grad;
        const auto s = run(sfn, rp.p);
        const auto v = run(vfn, rp.p);
        CHECK(bit_equal(s.r.loss, v.r.loss));
        CHECK(bit_equal(s.r.final_state, v.r.final_state));
        if (grad) {
          CHECK(bit_equal(s.gre, v.gre));
          CHECK(bit_equal(s.gim, v.gim));
        }
      }
    }
  }
}

TEST_CASE("kernel adjoint matches finite differences on the drive") {
  for (bool qutrit : {false, true}) {
    RandomProblem rp(9, 40, qutrit);
    for (auto& v : rp.dre) v *= 0.3;
    for (auto& v : rp.dim) v *= 0.3;
    const auto base = run(qutrit ? scalar::qutrit_block : scalar::qubit_block, rp.p);
    auto total = [&](const BlockProblem& p) {
      const auto o = run(qutrit ? scalar::qutrit_block : scalar::qubit_block, p);
      double acc = 0.0;
      for (int l = 0; l < kLanes; ++l) acc += p.loss_scale[static_cast<std::size_t>(l)] * o.r.loss[static_cast<std::size_t>(l)];
      return acc;
    };
    for (int s : {0, 1, 17, 40, 80}) {
      for (int part = 0; part < 2; ++part) {
        auto& vec = part == 0 ? rp.dre : rp.dim;
        const double keep = vec[static_cast<std::size_t>(s)];
        vec[static_cast<std::size_t>(s)] = keep + 1e-6;
        const double up = total(rp.p);
        vec[static_cast<std::size_t>(s)] = keep - 1e-6;
        const double dn = total(rp.p);
        vec[static_cast<std::size_t>(s)] = keep;
        const double fd = (up - dn) / 2e-6;
        const auto& g = part == 0 ? base.gre : base.gim;
        double an = 0.0;
        for (int l = 0; l < kLanes; ++l) an += g[static_cast<std::size_t>(s * kLanes + l)];
        CHECK(std::abs(an - fd) < 1e-7 * (1.0 + std::abs(fd)));
      }
    }
  }
}
