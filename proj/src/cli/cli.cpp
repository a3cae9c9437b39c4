#include "npulse/cli.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <iomanip>
#include <sstream>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "config.hpp"
#include "npulse/error.hpp"
#include "npulse/io.hpp"
#include "npulse/parallel.hpp"
#include "npulse/waveform.hpp"

namespace npulse {

namespace {

namespace fs = std::filesystem;
using nlohmann::json;
using cli::Section;

const json kEmptyObject = json::object();

struct Options {
  std::string command;
  std::string config_path;
  std::string out_dir = ".";
  std::optional<std::uint64_t> seed;
  std::optional<int> threads;
  std::optional<int> max_iters;
};

// Parsed configuration plus everything needed to stamp outputs.
class Run {
 public:
  Run(const Options& opt) : command_(opt.command), out_(opt.out_dir) {
    if (!opt.config_path.empty()) {
      const fs::path path(opt.config_path);
      try {
        config_ = json::parse(read_text(path));
      } catch (const json::parse_error& e) {
        throw ConfigError("config: malformed JSON (" + std::string(e.what()) + ")");
      } catch (const FormatError& e) {
        throw ConfigError(std::string("config: ") + e.what());
      }
      base_ = path.parent_path();
    } else {
      config_ = json::object();
    }
    if (!config_.is_object()) throw ConfigError("config: top level must be an object");
    if (opt.seed) config_["seed"] = *opt.seed;
    if (opt.max_iters) {
      if (command_ != "train" && command_ != "refine") throw ConfigError("--max-iters applies to train and refine");
      config_["train"]["max_iters"] = *opt.max_iters;
    }
    if (config_.contains("seed") && !config_["seed"].is_number_unsigned())
      throw ConfigError("config.seed: expected a non-negative integer");
    seed_ = config_.value("seed", std::uint64_t{42});
    config_["seed"] = seed_;
    hash_ = hex64(fnv1a(config_.dump()));
  }

  [[nodiscard]] Section root() const {
    Section s(config_, "config");
    s.integer("seed");
    return s;
  }
  static Section optional(Section& parent, const std::string& key) {
    return parent.has(key) ? parent.object(key) : Section(kEmptyObject, parent.path() + "." + key);
  }

  [[nodiscard]] const fs::path& base() const { return base_; }
  [[nodiscard]] std::uint64_t seed() const { return seed_; }
  [[nodiscard]] const std::string& hash() const { return hash_; }

  [[nodiscard]] json metadata() const {
    return {{"tool", kToolName}, {"version", kToolVersion}, {"command", command_}, {"config_hash", hash_},
            {"seed", seed_}, {"config", config_}};
  }

  [[nodiscard]] std::vector<std::pair<std::string, std::string>> csv_meta() const {
    return {{"tool", kToolName},
            {"version", kToolVersion},
            {"command", command_},
            {"config_hash", hash_},
            {"seed", std::to_string(seed_)},
            {"config", config_.dump()}};
  }

  // Creates the output directory on first use, after validation is done.
  fs::path out(const std::string& name) {
    if (!out_ready_) {
      std::error_code ec;
      fs::create_directories(out_, ec);
      if (ec) throw FormatError("cannot create output directory " + out_.string() + ": " + ec.message());
      out_ready_ = true;
    }
    return out_ / name;
  }

  void write_json(const std::string& name, json body) {
    body["metadata"] = metadata();
    write_text(out(name), body.dump(2) + "\n");
  }

  void write_table(const std::string& name, CsvTable table) {
    auto m = csv_meta();
    m.insert(m.end(), table.meta.begin(), table.meta.end());
    table.meta = std::move(m);
    write_csv(out(name), table);
  }

 private:
  std::string command_;
  fs::path out_;
  fs::path base_;
  json config_;
  std::uint64_t seed_ = 42;
  std::string hash_;
  bool out_ready_ = false;
};

IntegratorConfig parse_integrator(Section s) {
  IntegratorConfig c;
  c.n_steps = static_cast<int>(s.integer("n_steps", c.n_steps));
  c.max_phase_step = s.number("max_phase_step", c.max_phase_step);
  s.finish();
  c.validate();
  return c;
}

struct Common {
  PulseMeta meta;
  SystemSpec system;
  IntegratorConfig integrator;
};

Common parse_common(Section& root) {
  Common c;
  c.meta = cli::parse_meta(Run::optional(root, "meta"));
  c.system = cli::parse_system(Run::optional(root, "system"), c.meta);
  c.integrator = parse_integrator(Run::optional(root, "integrator"));
  return c;
}

std::string system_name(const SystemSpec& s) { return s.is_qutrit() ? "qutrit" : "qubit"; }

json system_json(const SystemSpec& s) {
  if (!s.is_qutrit()) return {{"kind", "qubit"}};
  return {{"kind", "qutrit"}, {"Delta", s.model.Delta}, {"lambda", s.model.lambda}, {"leak_weight", s.leak_weight}};
}

json cvec_json(const CVec4& c) { return {{"c0", c.c0}, {"cx", c.cx}, {"cy", c.cy}, {"cz", c.cz}}; }

CsvTable pulse_table(const ControlField& field, int points) {
  CsvTable t;
  t.header = {"t", "A", "phase", "I", "Q"};
  for (double x : time_grid(points)) {
    const Complex v = field(x);
    t.rows.push_back({x, std::abs(v), std::arg(v), v.real(), v.imag()});
  }
  return t;
}

// ---- train / refine ---------------------------------------------------------

int cmd_train(Run& run, bool refine_mode, std::ostream& out) {
  auto root = run.root();
  const auto common = parse_common(root);
  TrainConfig cfg;
  cfg.seed = run.seed();
  cfg.system = common.system;
  cfg.integrator = common.integrator;
  cli::parse_train(Run::optional(root, "train"), cfg);
  const int pulse_points = static_cast<int>(root.integer("pulse_points", 257));
  if (pulse_points < 2) throw ConfigError("config.pulse_points: need at least 2");
  std::optional<fs::path> init_path;
  if (root.has("init")) {
    auto s = root.object("init");
    const fs::path p = s.string("checkpoint");
    s.finish();
    init_path = p.is_absolute() ? p : run.base() / p;
  }
  root.finish();
  if (refine_mode && !cfg.system.is_qutrit()) throw ConfigError("refine: config.system.kind must be \"qutrit\"");
  if (refine_mode && !init_path) throw ConfigError("refine: config.init.checkpoint is required");
  cfg.validate();
  const NetworkParams init = init_path ? load_checkpoint(*init_path) : init_params(run.seed());

  if (cfg.checkpoint_every > 0) {
    cfg.checkpoint_dir = run.out("checkpoints");
    fs::create_directories(cfg.checkpoint_dir);
  }
  auto [params, report] = refine_mode ? refine(init, cfg) : train(cfg, init);

  auto ck = json::parse(checkpoint_json(params));
  run.write_json("checkpoint.json", ck);
  run.write_json("report.json", json::parse(report.to_json()));
  run.write_table("pulse.csv", pulse_table(network_field(params), pulse_points));
  out << (refine_mode ? "refine" : "train") << ": " << report.iterations << " iterations, stop: "
      << report.stop_reason << "\n"
      << "grid mean loss " << format_double(report.final_grid.mean_loss) << ", min F "
      << format_double(report.final_grid.min_fidelity) << ", max leakage "
      << format_double(report.final_grid.max_leakage) << "\n";
  if (report.diverged) throw NumericalError("training diverged: " + report.stop_reason);
  return 0;
}

// ---- sweep ------------------------------------------------------------------

SweepOptions parse_sweep_options(Section s, const IntegratorConfig& integrator) {
  SweepOptions o;
  o.if_hop = s.boolean("if_hop", o.if_hop);
  o.t_dead_s = s.number("t_dead_s", o.t_dead_s);
  if (s.has("t_pulse_s")) o.t_pulse_s = s.number("t_pulse_s");
  o.alpha = s.number("alpha", o.alpha);
  s.finish();
  if (o.t_dead_s < 0.0 || (o.t_pulse_s && *o.t_pulse_s < 0.0))
    throw ConfigError("config.sweep: times must be non-negative");
  o.integrator = integrator;
  return o;
}

CsvTable sweep_table(const std::vector<SweepRow>& rows) {
  CsvTable t;
  t.header = {"delta", "c0", "cx", "cy", "cz", "F_chi", "max_p1", "beta0", "leakage", "theta_rot", "phi_rot"};
  for (const auto& r : rows)
    t.rows.push_back(
        {r.delta, r.c.c0, r.c.cx, r.c.cy, r.c.cz, r.F_chi, r.max_p1, r.beta0, r.leakage, r.theta_rot, r.phi_rot});
  return t;
}

int cmd_sweep(Run& run, std::ostream& out) {
  auto root = run.root();
  const auto common = parse_common(root);
  const auto spec = cli::parse_pulse(root.object("pulse"));
  const auto grid = cli::parse_grid(root.object("grid"));
  const auto opt = parse_sweep_options(Run::optional(root, "sweep"), common.integrator);
  root.finish();
  const auto pulse = cli::load_pulse(spec, common.system, common.meta, run.base());
  const auto rows = detuning_sweep(pulse.field, grid.values, common.system, common.meta, opt);

  run.write_table("sweep.csv", sweep_table(rows));
  json jr = json::array();
  int flagged = 0;
  for (const auto& r : rows) {
    json e = {{"delta", r.delta},     {"c", cvec_json(r.c)},     {"F_chi", r.F_chi},
              {"max_p1", r.max_p1},   {"beta0", r.beta0},        {"leakage", r.leakage},
              {"theta_rot", r.theta_rot}, {"phi_rot", r.phi_rot}, {"flagged", r.flagged}};
    if (!r.message.empty()) e["message"] = r.message;
    flagged += r.flagged ? 1 : 0;
    jr.push_back(std::move(e));
  }
  json body = {{"pulse", spec.name}, {"pulse_kind", spec.kind}, {"system", system_json(common.system)},
               {"duration_s", common.meta.duration_s}, {"rows", jr}};
  if (pulse.drag_coeff) body["drag_coeff"] = *pulse.drag_coeff;
  run.write_json("sweep.json", body);
  out << "sweep: " << rows.size() << " rows, " << flagged << " flagged\n";
  return 0;
}

// ---- compare ----------------------------------------------------------------

struct Window {
  bool empty = true;
  double low = 0.0;
  double high = 0.0;
};

// Contiguous region around the grid point nearest zero where p >= threshold;
// edges are linearly interpolated between grid points.
Window threshold_window(const std::vector<double>& d, const std::vector<double>& p, double threshold) {
  Window w;
  std::size_t c = 0;
  for (std::size_t k = 1; k < d.size(); ++k)
    if (std::abs(d[k]) < std::abs(d[c])) c = k;
  if (!(p[c] >= threshold)) return w;
  w.empty = false;
  std::size_t lo = c, hi = c;
  while (lo > 0 && p[lo - 1] >= threshold) --lo;
  while (hi + 1 < d.size() && p[hi + 1] >= threshold) ++hi;
  auto cross = [&](std::size_t in, std::size_t outside) {
    if (!std::isfinite(p[outside])) return d[in];
    return d[in] + (d[outside] - d[in]) * (p[in] - threshold) / (p[in] - p[outside]);
  };
  w.low = lo > 0 ? cross(lo, lo - 1) : d[lo];
  w.high = hi + 1 < d.size() ? cross(hi, hi + 1) : d[hi];
  return w;
}

int cmd_compare(Run& run, std::ostream& out) {
  auto root = run.root();
  const auto common = parse_common(root);
  const auto& jp = root.raw("pulses");
  if (!jp.is_array()) throw ConfigError("config.pulses: expected an array of pulse specs");
  if (jp.size() < 2) throw ConfigError("compare: at least 2 pulses are required, got " + std::to_string(jp.size()));
  std::vector<cli::PulseSpec> specs;
  for (std::size_t i = 0; i < jp.size(); ++i)
    specs.push_back(cli::parse_pulse(Section(jp[i], "config.pulses[" + std::to_string(i) + "]")));
  const auto grid = cli::parse_grid(root.object("grid"));
  const double threshold = root.number("threshold", 0.99);
  const auto opt = parse_sweep_options(Run::optional(root, "sweep"), common.integrator);
  root.finish();
  if (!(threshold > 0.0 && threshold <= 1.0)) throw ConfigError("config.threshold: must lie in (0, 1]");
  std::vector<cli::LoadedPulse> pulses;
  for (const auto& s : specs) pulses.push_back(cli::load_pulse(s, common.system, common.meta, run.base()));

  CsvTable table;
  table.header = {"delta"};
  for (const auto& p : pulses) table.header.push_back(p.name);
  table.rows.assign(grid.values.size(), {});
  for (std::size_t k = 0; k < grid.values.size(); ++k) table.rows[k].push_back(grid.values[k]);

  std::ostringstream md;
  md << "# Pulse comparison\n\n"
     << "System: " << system_name(common.system) << ", duration " << common.meta.duration_s * 1e9 << " ns, "
     << "threshold max_p1 >= " << threshold << ".\n\n"
     << "| pulse | delta low | delta high | low (MHz) | high (MHz) | width (MHz) |\n"
     << "|---|---|---|---|---|---|\n";
  json windows = json::array();
  for (const auto& p : pulses) {
    const auto rows = detuning_sweep(p.field, grid.values, common.system, common.meta, opt);
    std::vector<double> mp;
    for (std::size_t k = 0; k < rows.size(); ++k) {
      mp.push_back(rows[k].max_p1);
      table.rows[k].push_back(rows[k].max_p1);
    }
    const auto w = threshold_window(grid.values, mp, threshold);
    json e = {{"pulse", p.name}, {"empty", w.empty}};
    if (p.drag_coeff) e["drag_coeff"] = *p.drag_coeff;
    if (w.empty) {
      md << "| " << p.name << " | - | - | - | - | 0 |\n";
    } else {
      const double lo_mhz = common.meta.detuning_hz(w.low) * 1e-6, hi_mhz = common.meta.detuning_hz(w.high) * 1e-6;
      e.update({{"low", w.low}, {"high", w.high}, {"low_mhz", lo_mhz}, {"high_mhz", hi_mhz}});
      md << std::setprecision(6) << "| " << p.name << " | " << w.low << " | " << w.high << " | " << lo_mhz
         << " | " << hi_mhz << " | " << hi_mhz - lo_mhz << " |\n";
    }
    windows.push_back(std::move(e));
    out << "compare: " << p.name << (w.empty ? " window empty" : " window [" + format_double(w.low) + ", " +
                                                                   format_double(w.high) + "]")
        << "\n";
  }
  md << "\nconfig_hash " << run.hash() << ", seed " << run.seed() << ", " << kToolName << " " << kToolVersion
     << "\n";
  run.write_table("compare.csv", table);
  write_text(run.out("compare.md"), md.str());
  run.write_json("compare.json", {{"threshold", threshold}, {"windows", windows}});
  return 0;
}

// ---- export -----------------------------------------------------------------

int cmd_export(Run& run, std::ostream& out) {
  auto root = run.root();
  const auto common = parse_common(root);
  const auto spec = cli::parse_pulse(root.object("pulse"));
  auto s = Run::optional(root, "export");
  const double fs_hz = s.number("sample_rate", 1e9);
  std::optional<double> carrier;
  if (s.has("carrier_hz")) carrier = s.number("carrier_hz");
  const double pad = s.number("pad_s", 0.0);
  s.finish();
  root.finish();
  if (!(fs_hz > 0.0)) throw ConfigError("config.export.sample_rate: must be positive");
  if (pad < 0.0) throw ConfigError("config.export.pad_s: must be non-negative");
  const auto n = static_cast<std::size_t>(std::llround(common.meta.duration_s * fs_hz));
  if (n < 2) throw ConfigError("config.export: fewer than 2 samples per pulse");
  if (carrier && !(*carrier > 0.0 && *carrier < fs_hz / 2))
    throw ConfigError("config.export.carrier_hz: must lie in (0, sample_rate/2)");
  const auto pulse = cli::load_pulse(spec, common.system, common.meta, run.base());

  CsvTable t;
  t.meta = {{"duration_s", format_double(common.meta.duration_s)},
            {"cap", format_double(pulse.field.cap())},
            {"sample_rate", format_double(fs_hz)},
            {"amplitude_unit", "omega_2pi"}};
  if (carrier) {
    const auto trace = synthesize_waveform(pulse.field, common.meta, *carrier, fs_hz, pad);
    t.meta.emplace_back("carrier_hz", format_double(*carrier));
    t.header = {"t_seconds", "value"};
    for (std::size_t k = 0; k < trace.samples.size(); ++k) t.rows.push_back({trace.time(k), trace.samples[k]});
    run.write_table("waveform.csv", t);
    out << "export: " << t.rows.size() << " waveform samples\n";
    return 0;
  }
  t.header = {"t_seconds", "I", "Q"};
  for (std::size_t k = 0; k < n; ++k) {
    const double ts = (static_cast<double>(k) + 0.5) / fs_hz;
    const Complex v = pulse.field(common.meta.training_time(ts));
    t.rows.push_back({ts, v.real(), v.imag()});
  }
  run.write_table("export.csv", t);
  out << "export: " << n << " I/Q samples\n";
  return 0;
}

// ---- verify -----------------------------------------------------------------

WaveformTrace read_waveform(const fs::path& path) {
  const auto table = read_csv(path);
  const auto cv = table.column("value");
  WaveformTrace w;
  for (const auto& r : table.rows) w.samples.push_back(r[cv]);
  const auto rate = table.meta_value("sample_rate");
  if (std::find(table.header.begin(), table.header.end(), "t_seconds") != table.header.end()) {
    const auto ct = table.column("t_seconds");
    if (table.rows.size() < 2) throw FormatError(path.string() + ": need at least two samples");
    w.t0_s = table.rows[0][ct];
    const double span = table.rows.back()[ct] - w.t0_s;
    if (!(span > 0.0)) throw FormatError(path.string() + ": sample times must increase");
    w.sample_rate = static_cast<double>(table.rows.size() - 1) / span;
  } else if (!rate.empty()) {
    w.sample_rate = parse_double(rate);
  } else {
    throw FormatError(path.string() + ": needs a t_seconds column or a sample_rate metadata line");
  }
  if (!rate.empty()) w.sample_rate = parse_double(rate);
  if (!(w.sample_rate > 0.0)) throw FormatError(path.string() + ": invalid sample rate");
  return w;
}

int cmd_verify(Run& run, std::ostream& out) {
  auto root = run.root();
  const auto common = parse_common(root);
  const auto spec = cli::parse_pulse(root.object("pulse"));
  auto s = root.object("verify");
  fs::path wave = s.string("waveform");
  const double carrier = s.number("carrier_hz");
  std::optional<double> scale;
  if (s.has("scale")) {
    const auto& v = s.raw("scale");
    if (v.is_number()) scale = v.get<double>();
    else if (!(v.is_string() && v.get<std::string>() == "calibrate"))
      throw ConfigError("config.verify.scale: expected a number or \"calibrate\"");
  }
  s.finish();
  root.finish();
  if (!wave.is_absolute()) wave = run.base() / wave;
  const auto pulse = cli::load_pulse(spec, common.system, common.meta, run.base());
  const auto trace = read_waveform(wave);
  if (!(carrier > 0.0 && carrier < trace.sample_rate / 2))
    throw ConfigError("config.verify.carrier_hz: must lie in (0, sample_rate/2)");

  const auto env =
      crop_to_pulse(demodulate(analytic_signal(trace), carrier, trace.sample_rate, trace.t0_s), common.meta);
  const double k = scale ? *scale : calibrate_amplitude(env, pulse.field, common.meta);
  const auto fid = trajectory_fidelity(env, pulse.field, common.meta, k, common.integrator);

  CsvTable ft;
  ft.header = {"t_seconds", "F"};
  for (std::size_t i = 0; i < fid.times.size(); ++i)
    ft.rows.push_back({common.meta.physical_time(fid.times[i]), fid.F[i]});
  run.write_table("verify.csv", ft);
  CsvTable et;
  et.header = {"t_seconds", "I", "Q"};
  for (std::size_t i = 0; i < env.samples.size(); ++i)
    et.rows.push_back({env.time(i), k * env.samples[i].real(), k * env.samples[i].imag()});
  run.write_table("envelope.csv", et);
  run.write_json("verify.json", {{"pulse", spec.name},
                                 {"min_F", fid.min_F},
                                 {"final_F", fid.F.empty() ? 1.0 : fid.F.back()},
                                 {"scale", k},
                                 {"carrier_hz", carrier},
                                 {"sample_rate", trace.sample_rate},
                                 {"samples", trace.samples.size()}});
  out << "verify: min F " << format_double(fid.min_F) << ", scale " << format_double(k) << "\n";
  return 0;
}

// ---- decay ------------------------------------------------------------------

int cmd_decay(Run& run, std::ostream& out) {
  auto root = run.root();
  const auto common = parse_common(root);
  const auto spec = cli::parse_pulse(root.object("pulse"));
  auto s = Run::optional(root, "decay");
  DecayConfig cfg;
  cfg.n_max = static_cast<int>(s.integer("n_max", cfg.n_max));
  if (s.has("noise")) cfg.noise = cli::parse_noise(s.object("noise"), common.meta);
  cfg.shots = static_cast<int>(s.integer("shots", 0));
  cfg.start_excited = s.boolean("start_excited", false);
  cfg.delta = s.number("delta", 0.0);
  s.finish();
  root.finish();
  if (cfg.n_max < 2) throw ConfigError("config.decay.n_max: need at least 2 blocks");
  if (cfg.shots < 0) throw ConfigError("config.decay.shots: must be non-negative");
  if (common.system.is_qutrit()) throw ConfigError("decay: the benchmark runs on the qubit system");
  cfg.seed = run.seed();
  cfg.integrator = common.integrator;
  const auto pulse = cli::load_pulse(spec, common.system, common.meta, run.base());
  const auto tr = pseudo_identity_decay(pulse.field, cfg);

  CsvTable t;
  t.header = {"n", "z"};
  for (std::size_t i = 0; i < tr.n.size(); ++i) t.rows.push_back({static_cast<double>(tr.n[i]), tr.z[i]});
  run.write_table("decay.csv", t);
  json body = {{"pulse", spec.name},          {"fidelity", tr.fidelity},   {"fidelity_err", tr.fidelity_err},
               {"block_decay", tr.block_decay}, {"amplitude", tr.amplitude}, {"offset", tr.offset},
               {"n_max", cfg.n_max}};
  if (cfg.noise) {
    body["noise"] = {{"T1", cfg.noise->T1}, {"T2", cfg.noise->T2}, {"T", cfg.noise->T}};
    body["incoherent_bound"] = incoherent_bound(cfg.noise->T, cfg.noise->T1, cfg.noise->T2);
  }
  run.write_json("decay.json", body);
  out << "decay: per-pulse fidelity " << format_double(tr.fidelity) << " +- " << format_double(tr.fidelity_err)
      << "\n";
  return 0;
}

// ---- composite --------------------------------------------------------------

int cmd_composite(Run& run, std::ostream& out) {
  auto root = run.root();
  std::vector<int> counts{3, 4, 5};
  if (root.has("pulses")) {
    counts.clear();
    for (double v : root.numbers("pulses")) {
      if (v != std::floor(v) || v < 1 || v > 8) throw ConfigError("config.pulses: counts must be integers in [1, 8]");
      counts.push_back(static_cast<int>(v));
    }
    if (counts.empty()) throw ConfigError("config.pulses: empty");
  }
  auto ga = cli::parse_ga(Run::optional(root, "ga"));
  const auto window = cli::parse_window(Run::optional(root, "window"));
  const bool warm = root.boolean("warm_start", true);
  root.finish();
  ga.seed = run.seed();

  std::optional<CompositeSequence> prev;
  json summary = json::array();
  for (int n : counts) {
    const auto r = optimize_composite(n, ga, window, warm ? prev : std::nullopt);
    prev = r.sequence;
    auto j = json::parse(r.sequence.to_json());
    run.write_json("composite_" + std::to_string(n) + ".json", j);
    summary.push_back({{"pulses", n}, {"ga_loss", r.ga_loss}, {"window_loss", r.window_loss}});
    out << "composite: " << n << " pulses, window loss " << format_double(r.window_loss) << "\n";
  }
  run.write_json("composite.json",
                 {{"window", {{"low", window.low}, {"high", window.high}, {"points", window.points}}},
                  {"results", summary}});
  return 0;
}

int dispatch(const Options& opt, std::ostream& out) {
  Run run(opt);
  if (opt.command == "train") return cmd_train(run, false, out);
  if (opt.command == "refine") return cmd_train(run, true, out);
  if (opt.command == "sweep") return cmd_sweep(run, out);
  if (opt.command == "compare") return cmd_compare(run, out);
  if (opt.command == "export") return cmd_export(run, out);
  if (opt.command == "verify") return cmd_verify(run, out);
  if (opt.command == "decay") return cmd_decay(run, out);
  if (opt.command == "composite") return cmd_composite(run, out);
  throw ConfigError("unknown command '" + opt.command + "'");
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Robust single-qubit pulse design", kToolName};
  app.require_subcommand(1);
  Options opt;
  std::uint64_t seed = 0;
  int threads = 0, max_iters = 0;
  const std::vector<std::pair<std::string, std::string>> commands = {
      {"train", "train a network pulse on the qubit or qutrit model"},
      {"refine", "continue training a qubit checkpoint on the qutrit model"},
      {"sweep", "detuning sweep of one pulse"},
      {"compare", "max_p1 windows of several pulses"},
      {"export", "sampled I/Q (or carrier waveform) of a pulse"},
      {"verify", "demodulate a waveform and compare it with a reference pulse"},
      {"decay", "pseudo-identity decay benchmark"},
      {"composite", "optimize composite pulse sequences"}};
  for (const auto& [name, help] : commands) {
    auto* sub = app.add_subcommand(name, help);
    sub->add_option("--config", opt.config_path, "JSON configuration file");
    sub->add_option("--out", opt.out_dir, "output directory")->capture_default_str();
    sub->add_option("--seed", seed, "overrides the config seed");
    sub->add_option("--threads", threads, "worker threads (default: PULSE_THREADS, else all cores)")
        ->check(CLI::PositiveNumber);
    if (name == "train" || name == "refine")
      sub->add_option("--max-iters", max_iters, "overrides train.max_iters")->check(CLI::NonNegativeNumber);
    sub->callback([&opt, name = name] { opt.command = name; });
  }

  try {
    std::vector<std::string> rev(args.rbegin(), args.rend());
    app.parse(rev);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? 0 : 2;
  }
  auto* sub = app.get_subcommands().front();
  if (sub->count("--seed")) opt.seed = seed;
  if (sub->count("--threads")) opt.threads = threads;
  if (sub->get_option_no_throw("--max-iters") && sub->count("--max-iters")) opt.max_iters = max_iters;

  if (opt.threads) set_thread_count(*opt.threads);
  try {
    return dispatch(opt, out);
  } catch (const ConfigError& e) {
    err << "config error: " << e.what() << "\n";
    return 2;
  } catch (const FormatError& e) {
    err << "format error: " << e.what() << "\n";
    return 2;
  } catch (const NumericalError& e) {
    err << "numerical failure: " << e.what() << "\n";
    return 3;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return 1;
  }
}

}  // namespace npulse
