#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "npulse/field.hpp"
#include "npulse/types.hpp"

namespace npulse {

inline constexpr int kNetworkInputs = 2;   // (t, theta)
inline constexpr int kNetworkWidth = 20;
inline constexpr int kNetworkDepth = 3;    // hidden layers
inline constexpr int kNetworkOutputs = 2;  // (o1 -> amplitude, o2 -> phase)
inline constexpr int kCheckpointVersion = 1;

/// Dense layer, y = W x + b with W stored row-major (rows = outputs).
struct Layer {
  int rows = 0;
  int cols = 0;
  std::vector<double> weights;
  std::vector<double> bias;

  friend bool operator==(const Layer&, const Layer&) = default;
};

/// Weights of the 2 -> 20 -> 20 -> 20 -> 2 tanh network plus the amplitude cap.
struct NetworkParams {
  std::vector<Layer> layers;
  double omega_max = 3.0;
  std::uint64_t seed = 0;

  [[nodiscard]] std::size_t parameter_count() const;
  /// Layer-major, weights then bias per layer. Gradients use the same order.
  [[nodiscard]] std::vector<double> flatten() const;
  void assign(std::span<const double> flat);
  /// Throws ConfigError on wrong shapes or non-finite entries.
  void validate() const;

  friend bool operator==(const NetworkParams&, const NetworkParams&) = default;
};

/// Target angle and field perturbation, Omega = (1+alpha) N(t) e^{i delta t}.
struct Scenario {
  double theta = kPi / 2;
  double delta = 0.0;
  double alpha = 0.0;
};

struct NetworkOutput {
  double o1 = 0.0;
  double o2 = 0.0;
};

NetworkOutput forward(const NetworkParams& params, double t, double theta);

/// (1+alpha) * omega_max * tanh(o1) * e^{i(o2 + delta t)}
Complex field_at(const NetworkParams& params, double t, const Scenario& scenario);

/// The network drive as a ControlField (perturbation included).
ControlField network_field(const NetworkParams& params, const Scenario& scenario = {});

/// Pointwise complex conjugate, A(t) e^{-i phi(t)}.
ControlField conjugate_field(const ControlField& field);

/// Glorot-uniform weights, zero biases, deterministic in `seed`.
NetworkParams init_params(std::uint64_t seed, double omega_max = 3.0);

/// Correct shapes, every entry zero (drive identically zero).
NetworkParams zero_params(double omega_max = 3.0);

std::string checkpoint_json(const NetworkParams& params);
NetworkParams parse_checkpoint(std::string_view text);
void save_checkpoint(const NetworkParams& params, const std::filesystem::path& path);
NetworkParams load_checkpoint(const std::filesystem::path& path);

/// The unperturbed network drive N(t) evaluated on a fixed set of times, with
/// the activations kept so that a gradient with respect to N can be pulled
/// back onto the parameters.
class SampledDrive {
 public:
  SampledDrive(const NetworkParams& params, std::span<const double> times, double theta);

  [[nodiscard]] std::size_t size() const { return times_.size(); }
  [[nodiscard]] std::span<const double> re() const { return re_; }
  [[nodiscard]] std::span<const double> im() const { return im_; }

  /// dL/dparams (flattened order) from dL/dRe N and dL/dIm N at each time.
  [[nodiscard]] std::vector<double> pullback(std::span<const double> g_re, std::span<const double> g_im) const;

 private:
  const NetworkParams* params_;
  std::vector<double> times_;
  double theta_;
  std::vector<double> re_, im_;
  // Hidden activations, [time][layer][unit].
  std::vector<double> hidden_;
  std::vector<double> o1_, o2_;
};

}  // namespace npulse
