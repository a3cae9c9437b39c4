#include "npulse/diffsim.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "npulse/error.hpp"
#include "npulse/parallel.hpp"
#include "npulse/simd/kernels.hpp"

namespace npulse {

namespace {

struct Segment {
  double a, b;
  int steps;
};

// Splits [-pi, pi] at the field breakpoints and shares `total` steps out in
// proportion to segment length (at least one each).
std::vector<Segment> segments_for(const ControlField& field, int total) {
  std::vector<double> edges{kTimeStart};
  for (double b : field.breakpoints()) edges.push_back(b);
  edges.push_back(kTimeEnd);
  std::vector<Segment> segs;
  for (std::size_t i = 0; i + 1 < edges.size(); ++i) {
    const double len = edges[i + 1] - edges[i];
    const int steps = std::max(1, static_cast<int>(std::lround(total * len / kTwoPi)));
    segs.push_back({edges[i], edges[i + 1], steps});
  }
  return segs;
}

Complex sample_checked(const ControlField& field, double t, Side side) {
  const Complex v = field(t, side);
  if (!std::isfinite(v.real()) || !std::isfinite(v.imag())) {
    std::ostringstream os;
    os.precision(17);
    os << "non-finite field value at t = " << t << " (field '" << field.name() << "')";
    throw NumericalError(os.str());
  }
  return v;
}

// Generic RK4 over the segments. `rhs(t, side, y)` returns dy/dt; `record`
// gets every step point.
template <class State, class Rhs, class Record>
void integrate(const std::vector<Segment>& segs, State y, Rhs rhs, Record record) {
  record(kTimeStart, y);
  for (const auto& seg : segs) {
    const double h = (seg.b - seg.a) / seg.steps;
    for (int k = 0; k < seg.steps; ++k) {
      const double t = seg.a + h * k;
      const double t_end = k + 1 == seg.steps ? seg.b : seg.a + h * (k + 1);
      const Side left = k == 0 ? Side::Right : Side::Center;
      const Side right = k + 1 == seg.steps ? Side::Left : Side::Center;
      const State k1 = rhs(t, left, y);
      const State k2 = rhs(t + 0.5 * h, Side::Center, State(y + (0.5 * h) * k1));
      const State k3 = rhs(t + 0.5 * h, Side::Center, State(y + (0.5 * h) * k2));
      const State k4 = rhs(t_end, right, State(y + h * k3));
      y = y + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
      record(t_end, y);
    }
  }
}

simd::StageGrid stage_grid(int n_steps) { return {n_steps, kTimeStart, kTwoPi / n_steps}; }

}  // namespace

void IntegratorConfig::validate() const {
  if (n_steps < 16) throw ConfigError("integrator: n_steps must be >= 16");
  if (!(max_phase_step > 0.0) || !std::isfinite(max_phase_step))
    throw ConfigError("integrator: max_phase_step must be > 0");
}

int qutrit_step_count(const QutritModel& model, const IntegratorConfig& cfg) {
  const double needed = std::ceil(std::abs(model.Delta) * kTwoPi / cfg.max_phase_step);
  return std::max(cfg.n_steps, static_cast<int>(needed));
}

QubitTrajectory propagate_qubit(const ControlField& field, const IntegratorConfig& cfg) {
  cfg.validate();
  if (!field.valid()) throw ConfigError("propagate_qubit: empty field");
  using V4 = Eigen::Vector4d;
  QubitTrajectory traj;
  traj.times.reserve(static_cast<std::size_t>(cfg.n_steps) + 8);
  traj.states.reserve(static_cast<std::size_t>(cfg.n_steps) + 8);
  auto rhs = [&](double t, Side side, const V4& c) -> V4 {
    const Complex w = sample_checked(field, t, side);
    const double a = 0.5 * w.real();
    const double b = 0.5 * w.imag();
    return {-(a * c[1] + b * c[2]), a * c[0] + b * c[3], b * c[0] - a * c[3], a * c[2] - b * c[1]};
  };
  integrate(segments_for(field, cfg.n_steps), V4(1.0, 0.0, 0.0, 0.0), rhs, [&](double t, const V4& c) {
    traj.times.push_back(t);
    traj.states.push_back({c[0], c[1], c[2], c[3]});
  });
  return traj;
}

QutritTrajectory propagate_qutrit(const ControlField& field, const QutritModel& model, const IntegratorConfig& cfg) {
  cfg.validate();
  if (!field.valid()) throw ConfigError("propagate_qutrit: empty field");
  if (!std::isfinite(model.Delta) || !(model.lambda >= 0.0))
    throw ConfigError("propagate_qutrit: invalid qutrit model");
  const Complex i(0.0, 1.0);
  const double Delta = model.Delta;
  const double lambda = model.lambda;
  QutritTrajectory traj;
  auto rhs = [&](double t, Side side, const Unitary3& u) -> Unitary3 {
    const Complex w = sample_checked(field, t, side);
    const Complex q = lambda * w * std::polar(1.0, Delta * (t - kTimeStart));
    Unitary3 out;
    for (int c = 0; c < 3; ++c) {
      const Complex x0 = u(0, c), x1 = u(1, c), x2 = u(2, c);
      out(0, c) = -i * (0.5 * (std::conj(w) * x1));
      out(1, c) = -i * (0.5 * (w * x0 + std::conj(q) * x2));
      out(2, c) = -i * (0.5 * (q * x1));
    }
    return out;
  };
  const int steps = qutrit_step_count(model, cfg);
  integrate(segments_for(field, steps), Unitary3(Unitary3::Identity()), rhs, [&](double t, const Unitary3& u) {
    Unitary3 lab = u;
    lab.row(2) *= std::polar(1.0, -Delta * (t - kTimeStart));
    traj.times.push_back(t);
    traj.states.push_back(lab);
  });
  return traj;
}

BatchEvaluation evaluate_batch(const NetworkParams& params, std::span<const Scenario> scenarios,
                               const SystemSpec& system, const IntegratorConfig& cfg, bool want_gradient) {
  cfg.validate();
  params.validate();
  if (scenarios.empty()) throw ConfigError("evaluate_batch: empty scenario list");
  const bool qutrit = system.is_qutrit();
  const auto grid = stage_grid(qutrit ? qutrit_step_count(system.model, cfg) : cfg.n_steps);
  const auto S = static_cast<std::size_t>(grid.stages());
  const std::size_t N = scenarios.size();
  const double inv_n = 1.0 / static_cast<double>(N);

  std::vector<double> times(S);
  for (std::size_t s = 0; s < S; ++s) times[s] = grid.time(static_cast<int>(s));
  std::vector<double> coup_re, coup_im;
  if (qutrit) {
    coup_re.resize(S);
    coup_im.resize(S);
    for (std::size_t s = 0; s < S; ++s) {
      const Complex p = system.model.lambda * std::polar(1.0, system.model.Delta * (times[s] - kTimeStart));
      coup_re[s] = p.real();
      coup_im[s] = p.imag();
    }
  }

  BatchEvaluation out;
  out.losses.assign(N, 0.0);
  out.cvecs.assign(N, CVec4{});
  out.leakages.assign(N, 0.0);
  if (want_gradient) out.grad.assign(params.parameter_count(), 0.0);

  // Scenarios sharing theta share one network evaluation.
  std::vector<double> thetas;
  for (const auto& sc : scenarios) {
    if (!std::isfinite(sc.theta) || !std::isfinite(sc.delta) || !std::isfinite(sc.alpha))
      throw ConfigError("evaluate_batch: non-finite scenario");
    if (std::find(thetas.begin(), thetas.end(), sc.theta) == thetas.end()) thetas.push_back(sc.theta);
  }

  const auto isa = simd::active_isa();
  for (double theta : thetas) {
    std::vector<std::size_t> members;
    for (std::size_t j = 0; j < N; ++j)
      if (scenarios[j].theta == theta) members.push_back(j);

    const SampledDrive drive(params, times, theta);
    for (std::size_t s = 0; s < S; ++s) {
      if (!std::isfinite(drive.re()[s]) || !std::isfinite(drive.im()[s])) {
        std::ostringstream os;
        os << "non-finite network output at t = " << times[s];
        throw NumericalError(os.str());
      }
    }

    const std::size_t blocks = (members.size() + simd::kLanes - 1) / simd::kLanes;
    // Lane-reduced gradient per block, [block][stage].
    std::vector<double> block_re(want_gradient ? blocks * S : 0), block_im(want_gradient ? blocks * S : 0);

    parallel_for(blocks, [&](std::size_t b) {
      thread_local simd::Workspace ws;
      thread_local std::vector<double> wre, wim, gre, gim;
      wre.assign(S * simd::kLanes, 0.0);
      wim.assign(S * simd::kLanes, 0.0);
      simd::BlockProblem prob;
      prob.grid = grid;
      prob.drive_re = drive.re().data();
      prob.drive_im = drive.im().data();
      if (qutrit) {
        prob.coupling_re = coup_re.data();
        prob.coupling_im = coup_im.data();
      }
      prob.leak_weight = system.leak_weight;
      prob.want_gradient = want_gradient;
      int used = 0;
      for (int lane = 0; lane < simd::kLanes; ++lane) {
        const std::size_t m = b * simd::kLanes + static_cast<std::size_t>(lane);
        if (m >= members.size()) break;
        const Scenario& sc = scenarios[members[m]];
        const double gain = 1.0 + sc.alpha;
        for (std::size_t s = 0; s < S; ++s) {
          const Complex w = gain * std::polar(1.0, sc.delta * times[s]);
          wre[s * simd::kLanes + static_cast<std::size_t>(lane)] = w.real();
          wim[s * simd::kLanes + static_cast<std::size_t>(lane)] = w.imag();
        }
        prob.loss_scale[static_cast<std::size_t>(lane)] = inv_n;
        ++used;
      }
      prob.weight_re = wre.data();
      prob.weight_im = wim.data();

      simd::BlockResult res;
      if (want_gradient) {
        gre.resize(S * simd::kLanes);
        gim.resize(S * simd::kLanes);
        res.grad_re = gre.data();
        res.grad_im = gim.data();
      }
      if (qutrit) {
        simd::qutrit_block(isa, prob, res, ws);
      } else {
        simd::qubit_block(isa, prob, res, ws);
      }

      for (int lane = 0; lane < used; ++lane) {
        const std::size_t j = members[b * simd::kLanes + static_cast<std::size_t>(lane)];
        const auto L = static_cast<std::size_t>(lane);
        auto f = [&](int comp) { return res.final_state[static_cast<std::size_t>(comp) * simd::kLanes + L]; };
        out.losses[j] = res.loss[L];
        if (qutrit) {
          out.cvecs[j] = {0.5 * (f(0) + f(8)), -(0.5 * (f(7) + f(3))), 0.5 * (f(2) - f(6)), 0.5 * (f(9) - f(1))};
          out.leakages[j] = f(4) * f(4) + f(5) * f(5) + f(10) * f(10) + f(11) * f(11);
        } else {
          out.cvecs[j] = {f(0), f(1), f(2), f(3)};
        }
      }
      if (want_gradient) {
        double* br = block_re.data() + b * S;
        double* bi = block_im.data() + b * S;
        for (std::size_t s = 0; s < S; ++s) {
          const double* r = gre.data() + s * simd::kLanes;
          const double* i = gim.data() + s * simd::kLanes;
          br[s] = (r[0] + r[2]) + (r[1] + r[3]);
          bi[s] = (i[0] + i[2]) + (i[1] + i[3]);
        }
      }
    });

    if (want_gradient) {
      std::vector<double> g_re(S, 0.0), g_im(S, 0.0);
      for (std::size_t b = 0; b < blocks; ++b) {
        for (std::size_t s = 0; s < S; ++s) {
          g_re[s] += block_re[b * S + s];
          g_im[s] += block_im[b * S + s];
        }
      }
      const auto g = drive.pullback(g_re, g_im);
      for (std::size_t k = 0; k < g.size(); ++k) out.grad[k] += g[k];
    }
  }

  double sum = 0.0;
  for (std::size_t j = 0; j < N; ++j) {
    if (!std::isfinite(out.losses[j])) {
      std::ostringstream os;
      os << "non-finite loss for scenario " << j << " (delta = " << scenarios[j].delta << ")";
      throw NumericalError(os.str());
    }
    sum += out.losses[j];
  }
  out.mean_loss = sum * inv_n;
  return out;
}

LossGradient loss_and_gradient(const NetworkParams& params, const Scenario& scenario, const SystemSpec& system,
                               const IntegratorConfig& cfg) {
  const auto eval = evaluate_batch(params, std::span<const Scenario>(&scenario, 1), system, cfg, true);
  for (double g : eval.grad) {
    if (!std::isfinite(g)) throw NumericalError("non-finite gradient entry");
  }
  return {eval.losses[0], eval.grad};
}

}  // namespace npulse
