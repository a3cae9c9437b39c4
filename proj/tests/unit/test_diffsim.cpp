#include <catch_amalgamated.hpp>

#include <cmath>
#include <cstring>
#include <limits>
#include <random>

#include "npulse/diffsim.hpp"
#include "npulse/error.hpp"
#include "npulse/parallel.hpp"
#include "npulse/quantum.hpp"
#include "npulse/simd/kernels.hpp"
#include "oracles.hpp"

using namespace npulse;
using Catch::Matchers::ContainsSubstring;
using Catch::Matchers::WithinAbs;

namespace {

double cdist(const CVec4& a, const CVec4& b) {
  return std::max({std::abs(a.c0 - b.c0), std::abs(a.cx - b.cx), std::abs(a.cy - b.cy), std::abs(a.cz - b.cz)});
}

const QutritModel kTransmon60 = QutritModel::transmon(-222.34e6, 60e-9);

double max_rel_fd_error(const NetworkParams& p, const Scenario& sc, const SystemSpec& sys, int samples,
                        std::uint64_t seed) {
  IntegratorConfig cfg;
  const auto lg = loss_and_gradient(p, sc, sys, cfg);
  auto flat = p.flatten();
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<std::size_t> pick(0, flat.size() - 1);
  double worst = 0.0;
  for (int k = 0; k < samples; ++k) {
    const std::size_t i = pick(rng);
    auto fa = flat, fb = flat;
    fa[i] += 1e-5;
    fb[i] -= 1e-5;
    NetworkParams a = p, b = p;
    a.assign(fa);
    b.assign(fb);
    const std::span<const Scenario> one(&sc, 1);
    const double la = evaluate_batch(a, one, sys, cfg, false).losses[0];
    const double lb = evaluate_batch(b, one, sys, cfg, false).losses[0];
    const double fd = (la - lb) / 2e-5;
    const double scale = std::max({std::abs(fd), std::abs(lg.grad[i]), 1e-6});
    worst = std::max(worst, std::abs(fd - lg.grad[i]) / scale);
  }
  return worst;
}

}  // namespace

TEST_CASE("integrator config validation") {
  IntegratorConfig cfg;
  CHECK_NOTHROW(cfg.validate());
  cfg.n_steps = 15;
  CHECK_THROWS_AS(cfg.validate(), ConfigError);
  CHECK(qutrit_step_count({0.0, 1.37}, {}) == 512);
  CHECK(qutrit_step_count(kTransmon60, {}) > 512);
}

TEST_CASE("resonant Rabi rotation") {
  const auto traj = propagate_qubit(constant_field(0.25));
  CHECK(traj.states.size() == 513);
  CHECK(traj.times.front() == -kPi);
  CHECK(traj.times.back() == kPi);
  CHECK(cdist(traj.final_state(), {std::cos(kPi / 4), std::sin(kPi / 4), 0, 0}) < 1e-8);
}

TEST_CASE("zero field leaves the state at rest") {
  const auto traj = propagate_qubit(zero_field());
  for (const auto& c : traj.states) CHECK(c == CVec4{1, 0, 0, 0});
}

TEST_CASE("detuned drive matches exponential oracle") {
  const auto f = detune(constant_field(0.25), 0.3);
  const CVec4 rk = propagate_qubit(f).final_state();
  const CVec4 ex = unitary_to_cvec(oracle::qubit_exp_product(f, 100000));
  CHECK(cdist(rk, ex) < 1e-7);
}

TEST_CASE("norm is conserved") {
  const auto p = init_params(21);
  for (double d : {-1.0, 0.0, 0.8}) {
    const auto traj = propagate_qubit(network_field(p, {kPi / 2, d, 0.0}));
    for (const auto& c : traj.states) CHECK(std::abs(c.norm() - 1.0) < 1e-9);
  }
}

TEST_CASE("fourth order convergence") {
  const auto p = init_params(13);
  const auto f = network_field(p, {kPi / 2, 0.4, 0.0});
  const CVec4 ref = propagate_qubit(f, {8192}).final_state();
  const double e1 = cdist(propagate_qubit(f, {32}).final_state(), ref);
  const double e2 = cdist(propagate_qubit(f, {64}).final_state(), ref);
  const double ratio = e1 / e2;
  INFO("ratio " << ratio);
  CHECK(ratio > 12.0);
  CHECK(ratio < 20.0);
}

TEST_CASE("non-finite field names the time point") {
  const ControlField bad("bad", [](double t, Side) {
    return t > 0.5 ? Complex(std::numeric_limits<double>::quiet_NaN(), 0.0) : Complex(0.1, 0.0);
  }, 1.0);
  CHECK_THROWS_WITH(propagate_qubit(bad), ContainsSubstring("t = 0.5"));
  CHECK_THROWS_AS(propagate_qutrit(bad, QutritModel{1.0, 1.37}), NumericalError);
}

TEST_CASE("piecewise fields are split at breakpoints") {
  // Two halves with different phases; RK4 must be exact-to-order across the jump.
  const ControlField f("two", [](double t, Side side) {
    const bool right = t > 0.3 || (t == 0.3 && side == Side::Right);
    return right ? Complex(0.0, 0.2) : Complex(0.3, 0.0);
  }, 0.3, {0.3});
  const CVec4 rk = propagate_qubit(f).final_state();
  const Unitary2 u1 = rotation(0.3 * (0.3 + kPi), 1, 0, 0);
  const Unitary2 u2 = rotation(0.2 * (kPi - 0.3), 0, 1, 0);
  CHECK(cdist(rk, unitary_to_cvec(u2 * u1)) < 1e-12);
}

TEST_CASE("qutrit free evolution") {
  const QutritModel m{1.0, 1.37};
  const auto traj = propagate_qutrit(zero_field(), m);
  for (std::size_t i = 0; i < traj.states.size(); i += 37) {
    const double t = traj.times[i];
    Unitary3 expect = Unitary3::Identity();
    expect(2, 2) = std::polar(1.0, -m.Delta * (t + kPi));
    CHECK((traj.states[i] - expect).cwiseAbs().maxCoeff() < 1e-12);
  }
}

TEST_CASE("qutrit with lambda = 0 reduces to the qubit") {
  const auto p = init_params(17);
  const auto f = network_field(p, {kPi / 2, 0.3, 0.0});
  const auto q3 = propagate_qutrit(f, QutritModel{3.0, 0.0});
  const auto q2 = propagate_qubit(f);
  REQUIRE(q3.states.size() == q2.states.size());
  for (std::size_t i = 0; i < q2.states.size(); i += 16) {
    CHECK(cdist(block_cvec(q3.states[i]), q2.states[i]) < 1e-8);
    CHECK(std::abs(q3.states[i](2, 0)) == 0.0);
    CHECK(std::abs(q3.states[i](2, 1)) == 0.0);
  }
}

TEST_CASE("transmon qutrit: unitarity and fine-step oracle") {
  const auto p = init_params(3);
  const auto f = network_field(p, {kPi / 2, 0.2, 0.0});
  const auto traj = propagate_qutrit(f, kTransmon60);
  double worst = 0.0;
  for (const auto& u : traj.states)
    worst = std::max(worst, (u.adjoint() * u - Unitary3::Identity()).cwiseAbs().maxCoeff());
  INFO("unitarity " << worst);
  CHECK(worst < 5e-8);
  const Unitary3 ex = oracle::qutrit_exp_product(f, kTransmon60, 200000);
  const double err = (traj.final_state() - ex).cwiseAbs().maxCoeff();
  INFO("oracle error " << err);
  CHECK(err < 1e-6);
}

TEST_CASE("batched losses agree with generic propagation") {
  const auto p = init_params(23);
  std::vector<Scenario> sc;
  for (double d : {-0.8, -0.1, 0.35, 0.9, 1.1}) sc.push_back({kPi / 2, d, 0.0});
  sc.push_back({kPi / 2, 0.2, 0.1});
  const auto q = evaluate_batch(p, sc, SystemSpec::qubit(), {}, false);
  const auto sys3 = SystemSpec::qutrit(kTransmon60);
  const auto r = evaluate_batch(p, sc, sys3, {}, false);
  for (std::size_t j = 0; j < sc.size(); ++j) {
    const CVec4 c = propagate_qubit(network_field(p, sc[j])).final_state();
    CHECK(cdist(q.cvecs[j], c) < 1e-12);
    CHECK_THAT(q.losses[j], WithinAbs(qubit_loss(c), 1e-12));
    const Unitary3 u = propagate_qutrit(network_field(p, sc[j]), kTransmon60).final_state();
    CHECK_THAT(r.losses[j], WithinAbs(qutrit_loss(u), 1e-10));
    CHECK_THAT(r.leakages[j], WithinAbs(leakage(u), 1e-10));
    CHECK(cdist(r.cvecs[j], block_cvec(u)) < 1e-10);
  }
}

TEST_CASE("zero drive gives the identity loss") {
  auto p = init_params(1);
  for (auto& w : p.layers.back().weights) w = 0.0;
  const auto lg = loss_and_gradient(p, {kPi / 2, 0.4, 0.0}, SystemSpec::qubit());
  CHECK_THAT(lg.loss, WithinAbs(0.085786, 1e-6));
  CHECK(lg.grad.size() == p.parameter_count());
}

TEST_CASE("duplicating a hidden unit leaves the loss unchanged") {
  auto p = init_params(31);
  auto& out = p.layers[3];
  auto& mid = p.layers[2];
  const int j = 4, k = 11;
  // Silence unit k, then make it a copy of j sharing j's outgoing weight.
  for (int r = 0; r < out.rows; ++r) out.weights[static_cast<std::size_t>(r * out.cols + k)] = 0.0;
  const Scenario sc{kPi / 2, 0.3, 0.0};
  const double before = loss_and_gradient(p, sc, SystemSpec::qubit()).loss;
  for (int c = 0; c < mid.cols; ++c)
    mid.weights[static_cast<std::size_t>(k * mid.cols + c)] = mid.weights[static_cast<std::size_t>(j * mid.cols + c)];
  mid.bias[static_cast<std::size_t>(k)] = mid.bias[static_cast<std::size_t>(j)];
  for (int r = 0; r < out.rows; ++r) {
    const double w = out.weights[static_cast<std::size_t>(r * out.cols + j)];
    out.weights[static_cast<std::size_t>(r * out.cols + j)] = 0.5 * w;
    out.weights[static_cast<std::size_t>(r * out.cols + k)] = 0.5 * w;
  }
  const double after = loss_and_gradient(p, sc, SystemSpec::qubit()).loss;
  CHECK_THAT(after, WithinAbs(before, 1e-13));
}

TEST_CASE("gradient matches finite differences (qubit)") {
  for (std::uint64_t s : {5u, 6u}) {
    const auto p = init_params(s);
    const double err = max_rel_fd_error(p, {kPi / 2, 0.37 * static_cast<double>(s) - 1.5, 0.0}, SystemSpec::qubit(), 20, s);
    INFO("max relative error " << err);
    CHECK(err < 1e-4);
  }
}

TEST_CASE("gradient matches finite differences (qutrit)") {
  const auto p = init_params(8);
  const double err = max_rel_fd_error(p, {kPi / 2, 0.25, 0.05}, SystemSpec::qutrit(kTransmon60, 2.0), 20, 8);
  INFO("max relative error " << err);
  CHECK(err < 1e-4);
}

TEST_CASE("batch gradient is the mean of single gradients") {
  const auto p = init_params(12);
  std::vector<Scenario> sc = {{kPi / 2, -0.5, 0}, {kPi / 2, 0.1, 0}, {kPi / 2, 0.6, 0},
                              {kPi / 2, 0.9, 0},  {kPi / 2, 1.0, 0}, {kPi / 3, 0.2, 0}};
  const auto b = evaluate_batch(p, sc, SystemSpec::qubit());
  std::vector<double> mean(p.parameter_count(), 0.0);
  double ml = 0.0;
  for (const auto& s : sc) {
    const auto lg = loss_and_gradient(p, s, SystemSpec::qubit());
    ml += lg.loss / sc.size();
    for (std::size_t i = 0; i < mean.size(); ++i) mean[i] += lg.grad[i] / sc.size();
  }
  CHECK_THAT(b.mean_loss, WithinAbs(ml, 1e-14));
  for (std::size_t i = 0; i < mean.size(); ++i) CHECK_THAT(b.grad[i], WithinAbs(mean[i], 1e-12));

  // Identical scenarios: batch mean equals the single loss.
  std::vector<Scenario> same(7, Scenario{kPi / 2, 0.3, 0.0});
  CHECK_THAT(evaluate_batch(p, same, SystemSpec::qubit(), {}, false).mean_loss,
             WithinAbs(loss_and_gradient(p, same[0], SystemSpec::qubit()).loss, 1e-15));
}

TEST_CASE("results do not depend on thread count or ISA") {
  const auto p = init_params(14);
  std::vector<Scenario> sc;
  for (int i = 0; i < 37; ++i) sc.push_back({kPi / 2, -0.8 + 0.05 * i, 0.0});
  set_thread_count(1);
  const auto a = evaluate_batch(p, sc, SystemSpec::qubit());
  set_thread_count(5);
  const auto b = evaluate_batch(p, sc, SystemSpec::qubit());
  simd::set_isa_override(simd::Isa::Scalar);
  const auto c = evaluate_batch(p, sc, SystemSpec::qubit());
  simd::set_isa_override(std::nullopt);
  set_thread_count(0);
  CHECK(std::memcmp(a.grad.data(), b.grad.data(), a.grad.size() * sizeof(double)) == 0);
  CHECK(std::memcmp(a.grad.data(), c.grad.data(), a.grad.size() * sizeof(double)) == 0);
  CHECK(a.mean_loss == b.mean_loss);
  CHECK(a.mean_loss == c.mean_loss);
}
