#include "config.hpp"

#include <cmath>

#include "npulse/error.hpp"
#include "npulse/io.hpp"

namespace npulse::cli {

namespace fs = std::filesystem;
using nlohmann::json;

Section::Section(const json& j, std::string path) : j_(j), path_(std::move(path)) {
  if (!j_.is_object()) throw ConfigError(path_ + ": expected an object");
}

bool Section::has(const std::string& key) const { return j_.contains(key); }

const json& Section::lookup(const std::string& key) {
  used_.insert(key);
  return j_.at(key);
}

double Section::number(const std::string& key, std::optional<double> fallback) {
  if (!has(key)) {
    if (!fallback) throw ConfigError(path_ + "." + key + ": required");
    return *fallback;
  }
  const auto& v = lookup(key);
  if (!v.is_number()) throw ConfigError(path_ + "." + key + ": expected a number");
  const double x = v.get<double>();
  if (!std::isfinite(x)) throw ConfigError(path_ + "." + key + ": not finite");
  return x;
}

long Section::integer(const std::string& key, std::optional<long> fallback) {
  if (!has(key)) {
    if (!fallback) throw ConfigError(path_ + "." + key + ": required");
    return *fallback;
  }
  const auto& v = lookup(key);
  if (!v.is_number_integer()) throw ConfigError(path_ + "." + key + ": expected an integer");
  return v.get<long>();
}

bool Section::boolean(const std::string& key, std::optional<bool> fallback) {
  if (!has(key)) {
    if (!fallback) throw ConfigError(path_ + "." + key + ": required");
    return *fallback;
  }
  const auto& v = lookup(key);
  if (!v.is_boolean()) throw ConfigError(path_ + "." + key + ": expected true or false");
  return v.get<bool>();
}

std::string Section::string(const std::string& key, std::optional<std::string> fallback) {
  if (!has(key)) {
    if (!fallback) throw ConfigError(path_ + "." + key + ": required");
    return *fallback;
  }
  const auto& v = lookup(key);
  if (!v.is_string()) throw ConfigError(path_ + "." + key + ": expected a string");
  return v.get<std::string>();
}

std::vector<double> Section::numbers(const std::string& key) {
  const auto& v = lookup(key);
  if (!v.is_array()) throw ConfigError(path_ + "." + key + ": expected an array of numbers");
  std::vector<double> out;
  for (const auto& e : v) {
    if (!e.is_number() || !std::isfinite(e.get<double>()))
      throw ConfigError(path_ + "." + key + ": expected an array of finite numbers");
    out.push_back(e.get<double>());
  }
  return out;
}

Section Section::object(const std::string& key) { return {lookup(key), path_ + "." + key}; }

const json& Section::raw(const std::string& key) { return lookup(key); }

void Section::finish() const {
  for (const auto& [k, v] : j_.items())
    if (!used_.contains(k)) throw ConfigError(path_ + ": unknown key '" + k + "'");
}

PulseSpec parse_pulse(Section s) {
  PulseSpec p;
  p.kind = s.string("kind");
  p.name = s.string("name", p.kind);
  if (p.kind == "network") {
    p.file = s.string("checkpoint");
    p.theta = s.number("theta", kPi / 2);
    p.conjugate = s.boolean("conjugate", false);
  } else if (p.kind == "rectangular") {
    p.theta = s.number("theta", kPi / 2);
  } else if (p.kind == "drag") {
    p.theta = s.number("theta", kPi / 2);
    if (s.has("coeff")) {
      const auto& c = s.raw("coeff");
      if (c.is_string() && c.get<std::string>() == "calibrate") {
      } else if (c.is_number() && std::isfinite(c.get<double>())) {
        p.drag_coeff = c.get<double>();
      } else {
        throw ConfigError(s.path() + ".coeff: expected a number or \"calibrate\"");
      }
    }
  } else if (p.kind == "composite" || p.kind == "samples") {
    p.file = s.string("file");
  } else {
    throw ConfigError(s.path() + ".kind: unknown pulse kind '" + p.kind + "'");
  }
  s.finish();
  return p;
}

GridSpec parse_grid(Section s) {
  GridSpec g;
  if (s.has("values")) {
    g.values = s.numbers("values");
  } else {
    const double low = s.number("low"), high = s.number("high"), step = s.number("step");
    if (!(step > 0.0)) throw ConfigError(s.path() + ".step: must be positive");
    if (low > high) throw ConfigError(s.path() + ": low must not exceed high");
    const auto n = static_cast<long>(std::floor((high - low) / step + 1e-9)) + 1;
    if (n > 1000000) throw ConfigError(s.path() + ": too many grid points");
    for (long k = 0; k < n; ++k) g.values.push_back(low + static_cast<double>(k) * step);
  }
  if (g.values.empty()) throw ConfigError(s.path() + ": empty grid");
  s.finish();
  return g;
}

PulseMeta parse_meta(Section s) {
  PulseMeta m;
  m.duration_s = s.number("duration_s", m.duration_s);
  s.finish();
  try {
    m.validate();
  } catch (const Error& e) {
    throw ConfigError(s.path() + ": " + e.what());
  }
  return m;
}

SystemSpec parse_system(Section s, const PulseMeta& meta) {
  const auto kind = s.string("kind", "qubit");
  SystemSpec sys;
  if (kind == "qubit") {
    sys = SystemSpec::qubit();
  } else if (kind == "qutrit") {
    const double alpha = s.number("alpha_hz", -222.34e6);
    const double duration = s.number("duration_s", meta.duration_s);
    const double lambda = s.number("lambda", 1.37);
    const double w = s.number("leak_weight", 1.0);
    if (!(duration > 0.0)) throw ConfigError(s.path() + ".duration_s: must be positive");
    if (!(w >= 0.0)) throw ConfigError(s.path() + ".leak_weight: must be non-negative");
    sys = SystemSpec::qutrit(QutritModel::transmon(alpha, duration, lambda), w);
    try {
      sys.model.validate();
    } catch (const Error& e) {
      throw ConfigError(s.path() + ": " + e.what());
    }
  } else {
    throw ConfigError(s.path() + ".kind: expected \"qubit\" or \"qutrit\"");
  }
  s.finish();
  return sys;
}

void parse_train(Section s, TrainConfig& cfg) {
  const auto sampling = s.string("sampling", "stratified");
  if (sampling == "stratified") cfg.sampling = Sampling::Stratified;
  else if (sampling == "iid") cfg.sampling = Sampling::Iid;
  else throw ConfigError(s.path() + ".sampling: expected \"stratified\" or \"iid\"");
  cfg.delta_low = s.number("delta_low", cfg.delta_low);
  cfg.delta_high = s.number("delta_high", cfg.delta_high);
  cfg.batch_size = static_cast<int>(s.integer("batch_size", cfg.batch_size));
  cfg.max_iters = static_cast<int>(s.integer("max_iters", cfg.max_iters));
  cfg.learning_rate = s.number("learning_rate", cfg.learning_rate);
  cfg.beta1 = s.number("beta1", cfg.beta1);
  cfg.beta2 = s.number("beta2", cfg.beta2);
  cfg.epsilon = s.number("epsilon", cfg.epsilon);
  cfg.validation_points = static_cast<int>(s.integer("validation_points", cfg.validation_points));
  cfg.validate_every = static_cast<int>(s.integer("validate_every", cfg.validate_every));
  cfg.convergence_window = static_cast<int>(s.integer("convergence_window", cfg.convergence_window));
  cfg.convergence_tol = s.number("convergence_tol", cfg.convergence_tol);
  cfg.convergence_patience = static_cast<int>(s.integer("convergence_patience", cfg.convergence_patience));
  cfg.divergence_limit = s.number("divergence_limit", cfg.divergence_limit);
  cfg.checkpoint_every = static_cast<int>(s.integer("checkpoint_every", cfg.checkpoint_every));
  if (s.has("fixed_deltas")) cfg.fixed_deltas = s.numbers("fixed_deltas");
  s.finish();
}

NoiseModel parse_noise(Section s, const PulseMeta& meta) {
  NoiseModel n;
  n.T1 = s.number("T1", n.T1);
  n.T2 = s.number("T2", n.T2);
  n.T = s.number("T", meta.duration_s);
  s.finish();
  try {
    n.validate();
  } catch (const Error& e) {
    throw ConfigError(s.path() + ": " + e.what());
  }
  return n;
}

DetuningWindow parse_window(Section s) {
  DetuningWindow w;
  w.low = s.number("low", w.low);
  w.high = s.number("high", w.high);
  w.points = static_cast<int>(s.integer("points", w.points));
  s.finish();
  if (!(w.low < w.high)) throw ConfigError(s.path() + ": low must be below high");
  if (w.points < 2) throw ConfigError(s.path() + ".points: need at least 2");
  return w;
}

GAConfig parse_ga(Section s) {
  GAConfig g;
  g.population = static_cast<int>(s.integer("population", g.population));
  g.generations = static_cast<int>(s.integer("generations", g.generations));
  g.mutation_scale = s.number("mutation_scale", g.mutation_scale);
  g.mutation_rate = s.number("mutation_rate", g.mutation_rate);
  g.crossover_rate = s.number("crossover_rate", g.crossover_rate);
  g.elite = static_cast<int>(s.integer("elite", g.elite));
  g.tournament = static_cast<int>(s.integer("tournament", g.tournament));
  g.refine_iters = static_cast<int>(s.integer("refine_iters", g.refine_iters));
  if (s.has("fixed_amplitude")) g.fixed_amplitude = s.number("fixed_amplitude");
  s.finish();
  g.validate();
  return g;
}

namespace {

// Exported I/Q samples sit at (k + 1/2)/fs; rebuild the field between them.
ControlField samples_field(const fs::path& path, const PulseMeta& meta) {
  const auto table = read_csv(path);
  const auto ct = table.column("t_seconds"), ci = table.column("I"), cq = table.column("Q");
  if (table.rows.size() < 2) throw FormatError(path.string() + ": need at least two samples");
  std::vector<Complex> samples;
  samples.reserve(table.rows.size());
  for (const auto& r : table.rows) samples.emplace_back(r[ci], r[cq]);
  const double t0 = table.rows[0][ct], t1 = table.rows[1][ct];
  if (!(t1 > t0)) throw FormatError(path.string() + ": sample times must increase");
  const double dt = kTwoPi * (t1 - t0) / meta.duration_s;
  return interpolated_field(std::move(samples), meta.training_time(t0), dt, "samples");
}

}  // namespace

LoadedPulse load_pulse(const PulseSpec& spec, const SystemSpec& system, const PulseMeta& meta,
                       const fs::path& base) {
  const auto resolve = [&](const fs::path& p) { return p.is_absolute() ? p : base / p; };
  LoadedPulse out{spec.name, {}, std::nullopt, std::nullopt};
  if (spec.kind == "network") {
    auto params = load_checkpoint(resolve(spec.file));
    auto field = network_field(params, Scenario{spec.theta, 0.0, 0.0});
    out.field = spec.conjugate ? conjugate_field(field) : field;
    out.params = std::move(params);
  } else if (spec.kind == "rectangular") {
    out.field = rectangular_pulse(spec.theta);
  } else if (spec.kind == "drag") {
    if (!system.is_qutrit()) throw ConfigError("drag pulse '" + spec.name + "' needs a qutrit system");
    const double coeff = spec.drag_coeff ? *spec.drag_coeff : calibrate_drag(spec.theta, system.model).coeff;
    out.field = drag_pulse(spec.theta, system.model.Delta, coeff);
    out.drag_coeff = coeff;
  } else if (spec.kind == "composite") {
    out.field = composite_field(CompositeSequence::from_json(read_text(resolve(spec.file))));
  } else if (spec.kind == "samples") {
    out.field = samples_field(resolve(spec.file), meta);
  }
  return out;
}

}  // namespace npulse::cli
