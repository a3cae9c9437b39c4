#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "npulse/baselines.hpp"
#include "npulse/diffsim.hpp"
#include "npulse/field.hpp"
#include "npulse/metrics.hpp"
#include "npulse/trainer.hpp"

namespace npulse::cli {

/// Strict view of one JSON object: every key must be consumed before
/// finish(), and type mismatches name the offending path.
class Section {
 public:
  Section(const nlohmann::json& j, std::string path);

  [[nodiscard]] bool has(const std::string& key) const;
  double number(const std::string& key, std::optional<double> fallback = std::nullopt);
  long integer(const std::string& key, std::optional<long> fallback = std::nullopt);
  bool boolean(const std::string& key, std::optional<bool> fallback = std::nullopt);
  std::string string(const std::string& key, std::optional<std::string> fallback = std::nullopt);
  std::vector<double> numbers(const std::string& key);
  Section object(const std::string& key);
  const nlohmann::json& raw(const std::string& key);
  /// Throws ConfigError naming the first unknown key.
  void finish() const;
  [[nodiscard]] const std::string& path() const { return path_; }

 private:
  const nlohmann::json& lookup(const std::string& key);
  const nlohmann::json& j_;
  std::string path_;
  std::set<std::string> used_;
};

struct PulseSpec {
  std::string name;
  std::string kind;  // network | rectangular | drag | composite | samples
  std::filesystem::path file;
  double theta = kPi / 2;
  std::optional<double> drag_coeff;  // unset: calibrate on the qutrit model
  bool conjugate = false;
};

struct GridSpec {
  std::vector<double> values;
};

struct LoadedPulse {
  std::string name;
  ControlField field;
  std::optional<NetworkParams> params;
  std::optional<double> drag_coeff;
};

PulseSpec parse_pulse(Section s);
GridSpec parse_grid(Section s);
PulseMeta parse_meta(Section s);
/// `meta` supplies the default duration for the qutrit anharmonic offset.
SystemSpec parse_system(Section s, const PulseMeta& meta);
void parse_train(Section s, TrainConfig& cfg);
NoiseModel parse_noise(Section s, const PulseMeta& meta);
DetuningWindow parse_window(Section s);
GAConfig parse_ga(Section s);

/// Resolves relative file paths against `base`.
LoadedPulse load_pulse(const PulseSpec& spec, const SystemSpec& system, const PulseMeta& meta,
                       const std::filesystem::path& base);

}  // namespace npulse::cli
