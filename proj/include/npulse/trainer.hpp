#pragma once

#include <cstdint>
#include <filesystem>
#include <random>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "npulse/controlnet.hpp"
#include "npulse/diffsim.hpp"

namespace npulse {

enum class Sampling {
  Iid,         // independent uniform draws over the window
  Stratified,  // one uniform draw per equal-width stratum, shuffled
};

struct TrainConfig {
  Sampling sampling = Sampling::Stratified;
  double delta_low = -0.8;
  double delta_high = 1.1;
  int batch_size = 128;
  int max_iters = 10000;
  double learning_rate = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
  std::uint64_t seed = 42;
  SystemSpec system;
  IntegratorConfig integrator;

  /// Validation on `validation_points` evenly spaced detunings spanning
  /// [delta_low, delta_high], every `validate_every` iterations.
  int validation_points = 101;
  int validate_every = 50;
  /// Stop when the moving average of the batch loss over
  /// `convergence_window` iterations moves by less than convergence_tol from
  /// one window boundary to the next, at `convergence_patience` consecutive
  /// boundaries. 0 tolerance disables the test.
  int convergence_window = 200;
  double convergence_tol = 1e-8;
  int convergence_patience = 3;
  double divergence_limit = 1e3;

  /// Write a checkpoint every K iterations into checkpoint_dir (0 disables).
  int checkpoint_every = 0;
  std::filesystem::path checkpoint_dir;

  /// When non-empty, every batch uses exactly these detunings instead of
  /// random draws from the window.
  std::vector<double> fixed_deltas;

  void validate() const;
};

struct AdamState {
  std::vector<double> m;
  std::vector<double> v;
  long step = 0;
};

/// One bias-corrected Adam update of x in place.
void adam_update(std::span<double> x, std::span<const double> grad, AdamState& state, const TrainConfig& cfg);

/// batch_size scenarios with alpha = 0, theta = pi/2 and delta uniform on
/// [delta_low, delta_high] (or the fixed detunings, if configured). With
/// stratified sampling every batch member is still marginally uniform on
/// the window and the batch mean stays an unbiased estimate of the window
/// average, at far lower variance.
std::vector<Scenario> sample_batch(const TrainConfig& cfg, std::mt19937_64& rng);

/// Evaluates the batch at the incoming params, then applies one Adam step.
/// Returns the batch mean loss. Throws NumericalError on a non-finite gradient.
double train_step(NetworkParams& params, AdamState& state, std::span<const Scenario> batch, const TrainConfig& cfg,
                  long iteration = 0);

/// Detuning grid used for model selection.
std::vector<double> validation_grid(const TrainConfig& cfg);

struct GridEvaluation {
  std::vector<double> deltas;
  std::vector<double> loss;
  std::vector<double> qubit_loss;  // qubit-block loss (unnormalized for the qutrit)
  std::vector<double> fidelity;    // closest vertical pi/2 fidelity of the qubit block
  std::vector<double> leakage;
  double mean_loss = 0.0;
  double max_leakage = 0.0;
  double min_fidelity = 1.0;
};

GridEvaluation evaluate_grid(const NetworkParams& params, const TrainConfig& cfg);

/// Shape of the trained drive, to spot pulses squeezed toward t = 0.
struct BandwidthReport {
  double peak_amplitude = 0.0;
  double rms_duration = 0.0;        // sqrt(<t^2> - <t>^2) under |Omega|^2, training units
  double central_energy_fraction = 0.0;  // share of energy in |t| < pi/5
  double rms_bandwidth = 0.0;       // spectral RMS width of Omega, in units of Omega_2pi
};

BandwidthReport bandwidth_report(const NetworkParams& params, double theta = kPi / 2);

struct TrainReport {
  std::vector<double> loss_history;  // batch mean loss per iteration
  std::vector<std::pair<int, double>> validation_history;
  int iterations = 0;
  bool converged = false;
  bool diverged = false;
  std::string stop_reason;
  int best_iteration = 0;
  double best_validation_loss = 0.0;
  double wall_seconds = 0.0;
  bool qutrit = false;
  GridEvaluation final_grid;  // at the returned params
  BandwidthReport bandwidth;
  std::vector<std::string> checkpoints;

  [[nodiscard]] std::string to_json() const;
};

/// Adam on batch-mean loss from `init`. Returns the params with the lowest
/// validation loss seen (init included). Divergence ends the run early with
/// report.diverged set.
std::pair<NetworkParams, TrainReport> train(const TrainConfig& cfg, const NetworkParams& init);

/// Resumes training on the qutrit model from a qubit-trained network.
/// Throws ConfigError unless cfg.system is a qutrit.
std::pair<NetworkParams, TrainReport> refine(const NetworkParams& from_qubit, const TrainConfig& cfg);

}  // namespace npulse
