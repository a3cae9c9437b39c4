#include "npulse/trainer.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <numeric>
#include <sstream>

#include <nlohmann/json.hpp>

#include "npulse/error.hpp"
#include "npulse/quantum.hpp"
#include "npulse/random.hpp"

namespace npulse {

void TrainConfig::validate() const {
  if (!std::isfinite(delta_low) || !std::isfinite(delta_high) || !(delta_low < delta_high))
    throw ConfigError("train: delta_low must be < delta_high");
  if (batch_size < 1) throw ConfigError("train: batch_size must be >= 1");
  if (max_iters < 0) throw ConfigError("train: max_iters must be >= 0");
  if (!(learning_rate > 0.0)) throw ConfigError("train: learning_rate must be > 0");
  if (!(beta1 >= 0.0 && beta1 < 1.0) || !(beta2 >= 0.0 && beta2 < 1.0))
    throw ConfigError("train: Adam betas must lie in [0, 1)");
  if (!(epsilon > 0.0)) throw ConfigError("train: epsilon must be > 0");
  if (validation_points < 2) throw ConfigError("train: validation_points must be >= 2");
  if (validate_every < 1) throw ConfigError("train: validate_every must be >= 1");
  if (convergence_window < 1) throw ConfigError("train: convergence_window must be >= 1");
  if (convergence_patience < 1) throw ConfigError("train: convergence_patience must be >= 1");
  if (!(convergence_tol >= 0.0)) throw ConfigError("train: convergence_tol must be >= 0");
  if (!(divergence_limit > 0.0)) throw ConfigError("train: divergence_limit must be > 0");
  if (checkpoint_every < 0) throw ConfigError("train: checkpoint_every must be >= 0");
  if (checkpoint_every > 0 && checkpoint_dir.empty())
    throw ConfigError("train: checkpoint_every needs a checkpoint directory");
  for (double d : fixed_deltas)
    if (!std::isfinite(d)) throw ConfigError("train: fixed detunings must be finite");
  if (!(system.leak_weight >= 0.0)) throw ConfigError("train: leak_weight must be >= 0");
  if (system.is_qutrit()) system.model.validate();
  integrator.validate();
}

void adam_update(std::span<double> x, std::span<const double> grad, AdamState& state, const TrainConfig& cfg) {
  if (grad.size() != x.size()) throw ConfigError("adam: gradient size mismatch");
  if (state.m.size() != x.size()) {
    state.m.assign(x.size(), 0.0);
    state.v.assign(x.size(), 0.0);
    state.step = 0;
  }
  ++state.step;
  const double c1 = 1.0 - std::pow(cfg.beta1, static_cast<double>(state.step));
  const double c2 = 1.0 - std::pow(cfg.beta2, static_cast<double>(state.step));
  for (std::size_t i = 0; i < x.size(); ++i) {
    state.m[i] = cfg.beta1 * state.m[i] + (1.0 - cfg.beta1) * grad[i];
    state.v[i] = cfg.beta2 * state.v[i] + (1.0 - cfg.beta2) * grad[i] * grad[i];
    const double mh = state.m[i] / c1;
    const double vh = state.v[i] / c2;
    x[i] -= cfg.learning_rate * mh / (std::sqrt(vh) + cfg.epsilon);
  }
}

std::vector<Scenario> sample_batch(const TrainConfig& cfg, std::mt19937_64& rng) {
  std::vector<Scenario> batch;
  if (!cfg.fixed_deltas.empty()) {
    for (double d : cfg.fixed_deltas) batch.push_back({kPi / 2, d, 0.0});
    return batch;
  }
  const int n = cfg.batch_size;
  batch.reserve(static_cast<std::size_t>(n));
  if (cfg.sampling == Sampling::Iid) {
    for (int i = 0; i < n; ++i) batch.push_back({kPi / 2, uniform(rng, cfg.delta_low, cfg.delta_high), 0.0});
    return batch;
  }
  const double width = (cfg.delta_high - cfg.delta_low) / n;
  for (int i = 0; i < n; ++i) {
    const double lo = cfg.delta_low + width * i;
    batch.push_back({kPi / 2, std::min(lo + width * uniform01(rng), cfg.delta_high), 0.0});
  }
  // Fisher-Yates with the portable generator so batch order is random too.
  for (int i = n - 1; i > 0; --i) {
    const auto j = static_cast<int>(uniform01(rng) * (i + 1));
    std::swap(batch[static_cast<std::size_t>(i)], batch[static_cast<std::size_t>(j)]);
  }
  return batch;
}

double train_step(NetworkParams& params, AdamState& state, std::span<const Scenario> batch, const TrainConfig& cfg,
                  long iteration) {
  const auto eval = evaluate_batch(params, batch, cfg.system, cfg.integrator, true);
  for (double g : eval.grad) {
    if (!std::isfinite(g)) {
      std::ostringstream os;
      os << "non-finite gradient at iteration " << iteration;
      throw NumericalError(os.str());
    }
  }
  auto flat = params.flatten();
  adam_update(flat, eval.grad, state, cfg);
  params.assign(flat);
  return eval.mean_loss;
}

std::vector<double> validation_grid(const TrainConfig& cfg) {
  std::vector<double> grid(static_cast<std::size_t>(cfg.validation_points));
  const double step = (cfg.delta_high - cfg.delta_low) / (cfg.validation_points - 1);
  for (int i = 0; i < cfg.validation_points; ++i) grid[static_cast<std::size_t>(i)] = cfg.delta_low + step * i;
  grid.back() = cfg.delta_high;
  return grid;
}

GridEvaluation evaluate_grid(const NetworkParams& params, const TrainConfig& cfg) {
  GridEvaluation g;
  g.deltas = validation_grid(cfg);
  std::vector<Scenario> sc;
  for (double d : g.deltas) sc.push_back({kPi / 2, d, 0.0});
  const auto eval = evaluate_batch(params, sc, cfg.system, cfg.integrator, false);
  g.loss = eval.losses;
  g.leakage = eval.leakages;
  g.mean_loss = eval.mean_loss;
  for (const auto& c : eval.cvecs) {
    g.qubit_loss.push_back(qubit_loss(c));
    g.fidelity.push_back(vertical_fidelity(c));
  }
  g.max_leakage = *std::max_element(g.leakage.begin(), g.leakage.end());
  g.min_fidelity = *std::min_element(g.fidelity.begin(), g.fidelity.end());
  return g;
}

BandwidthReport bandwidth_report(const NetworkParams& params, double theta) {
  constexpr int n = 512;
  const double dt = kTwoPi / n;
  std::vector<Complex> w(n);
  std::vector<double> t(n);
  for (int i = 0; i < n; ++i) {
    t[static_cast<std::size_t>(i)] = kTimeStart + (i + 0.5) * dt;
    w[static_cast<std::size_t>(i)] = field_at(params, t[static_cast<std::size_t>(i)], {theta, 0.0, 0.0});
  }
  BandwidthReport r;
  double e = 0.0, et = 0.0, ett = 0.0, central = 0.0;
  for (int i = 0; i < n; ++i) {
    const auto k = static_cast<std::size_t>(i);
    const double p = std::norm(w[k]);
    r.peak_amplitude = std::max(r.peak_amplitude, std::abs(w[k]));
    e += p;
    et += p * t[k];
    ett += p * t[k] * t[k];
    if (std::abs(t[k]) < kPi / 5) central += p;
  }
  if (e <= 0.0) return r;
  const double mean_t = et / e;
  r.rms_duration = std::sqrt(std::max(0.0, ett / e - mean_t * mean_t));
  r.central_energy_fraction = central / e;
  // Angular frequencies of the DFT over a window of length 2*pi are integers.
  double s = 0.0, sw = 0.0, sww = 0.0;
  for (int k = -n / 2; k < n / 2; ++k) {
    Complex acc = 0.0;
    for (int i = 0; i < n; ++i) acc += w[static_cast<std::size_t>(i)] * std::polar(1.0, -k * t[static_cast<std::size_t>(i)]);
    const double p = std::norm(acc);
    s += p;
    sw += p * k;
    sww += p * k * k;
  }
  const double mean_w = sw / s;
  r.rms_bandwidth = std::sqrt(std::max(0.0, sww / s - mean_w * mean_w));
  return r;
}

std::string TrainReport::to_json() const {
  nlohmann::json j;
  j["iterations"] = iterations;
  j["converged"] = converged;
  j["diverged"] = diverged;
  j["stop_reason"] = stop_reason;
  j["best_iteration"] = best_iteration;
  j["best_validation_loss"] = best_validation_loss;
  j["wall_seconds"] = wall_seconds;
  j["system"] = qutrit ? "qutrit" : "qubit";
  j["loss_history"] = loss_history;
  nlohmann::json vh = nlohmann::json::array();
  for (const auto& [it, v] : validation_history) vh.push_back({{"iteration", it}, {"loss", v}});
  j["validation_history"] = vh;
  j["validation_grid"] = {{"delta", final_grid.deltas},
                          {"loss", final_grid.loss},
                          {"qubit_loss", final_grid.qubit_loss},
                          {"fidelity", final_grid.fidelity},
                          {"leakage", final_grid.leakage},
                          {"mean_loss", final_grid.mean_loss},
                          {"min_fidelity", final_grid.min_fidelity},
                          {"max_leakage", final_grid.max_leakage}};
  j["bandwidth"] = {{"peak_amplitude", bandwidth.peak_amplitude},
                    {"rms_duration", bandwidth.rms_duration},
                    {"central_energy_fraction", bandwidth.central_energy_fraction},
                    {"rms_bandwidth", bandwidth.rms_bandwidth}};
  j["checkpoints"] = checkpoints;
  return j.dump(2);
}

std::pair<NetworkParams, TrainReport> train(const TrainConfig& cfg, const NetworkParams& init) {
  cfg.validate();
  init.validate();
  const auto start = std::chrono::steady_clock::now();
  TrainReport report;
  report.qutrit = cfg.system.is_qutrit();

  NetworkParams params = init;
  NetworkParams best = init;
  report.best_validation_loss = evaluate_grid(init, cfg).mean_loss;
  report.validation_history.emplace_back(0, report.best_validation_loss);

  std::mt19937_64 rng(cfg.seed);
  AdamState adam;
  const int W = cfg.convergence_window;
  double last_avg = 0.0;
  int calm = 0;

  auto validate_now = [&](int done) {
    const double v = evaluate_grid(params, cfg).mean_loss;
    report.validation_history.emplace_back(done, v);
    if (!std::isfinite(v)) return false;
    if (v < report.best_validation_loss) {
      report.best_validation_loss = v;
      report.best_iteration = done;
      best = params;
    }
    return true;
  };

  for (int it = 0; it < cfg.max_iters; ++it) {
    const auto batch = sample_batch(cfg, rng);
    double loss;
    try {
      loss = train_step(params, adam, batch, cfg, it);
    } catch (const NumericalError& e) {
      report.diverged = true;
      report.stop_reason = e.what();
      break;
    }
    if (!std::isfinite(loss) || loss > cfg.divergence_limit) {
      report.diverged = true;
      std::ostringstream os;
      os << "batch loss " << loss << " at iteration " << it;
      report.stop_reason = os.str();
      break;
    }
    report.loss_history.push_back(loss);
    const int done = it + 1;
    report.iterations = done;

    // Moving average sampled at window boundaries.
    bool converged = false;
    if (done % W == 0) {
      const double avg = std::accumulate(report.loss_history.end() - W, report.loss_history.end(), 0.0) / W;
      if (done >= 2 * W) {
        calm = std::abs(avg - last_avg) < cfg.convergence_tol ? calm + 1 : 0;
        converged = calm >= cfg.convergence_patience;
      }
      last_avg = avg;
    }

    const bool checkpoint_due = cfg.checkpoint_every > 0 && done % cfg.checkpoint_every == 0;
    if (done % cfg.validate_every == 0 || done == cfg.max_iters || checkpoint_due || converged) {
      if (!validate_now(done)) {
        report.diverged = true;
        report.stop_reason = "non-finite validation loss at iteration " + std::to_string(done);
        break;
      }
    }
    if (checkpoint_due) {
      std::filesystem::create_directories(cfg.checkpoint_dir);
      const auto path = cfg.checkpoint_dir / ("checkpoint_" + std::to_string(done) + ".json");
      save_checkpoint(params, path);
      report.checkpoints.push_back(path.string());
    }
    if (converged) {
      report.converged = true;
      report.stop_reason = "moving-average loss change below tolerance";
      break;
    }
  }
  if (report.stop_reason.empty()) report.stop_reason = "iteration limit";

  report.final_grid = evaluate_grid(best, cfg);
  report.bandwidth = bandwidth_report(best);
  report.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return {best, report};
}

std::pair<NetworkParams, TrainReport> refine(const NetworkParams& from_qubit, const TrainConfig& cfg) {
  if (!cfg.system.is_qutrit()) throw ConfigError("refine: the configured system must be a qutrit");
  return train(cfg, from_qubit);
}

}  // namespace npulse
