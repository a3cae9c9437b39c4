#include "npulse/baselines.hpp"

#include <algorithm>
#include <cmath>
#include <memory>
#include <numeric>
#include <random>

#include <boost/math/tools/minima.hpp>
#include <nlohmann/json.hpp>

#include "npulse/error.hpp"
#include "npulse/parallel.hpp"
#include "npulse/quantum.hpp"
#include "npulse/random.hpp"

namespace npulse {

namespace {

// Quaternion form of SU(2) composition: (a b) for U = c0 - i c.sigma.
CVec4 compose(const CVec4& a, const CVec4& b) {
  return {a.c0 * b.c0 - (a.cx * b.cx + a.cy * b.cy + a.cz * b.cz),
          a.c0 * b.cx + b.c0 * a.cx + (a.cy * b.cz - a.cz * b.cy),
          a.c0 * b.cy + b.c0 * a.cy + (a.cz * b.cx - a.cx * b.cz),
          a.c0 * b.cz + b.c0 * a.cz + (a.cx * b.cy - a.cy * b.cx)};
}

// exp(-i tau (hx sx + hy sy + hz sz))
CVec4 su2_exp(double tau, double hx, double hy, double hz) {
  const double n = std::sqrt(hx * hx + hy * hy + hz * hz);
  if (n == 0.0) return {};
  const double s = std::sin(n * tau) / n;
  return {std::cos(n * tau), s * hx, s * hy, s * hz};
}

constexpr double kAtanhClamp = 1.0 - 1e-12;

// Search-space encoding: per segment (fraction logit, amplitude pre-tanh, phase).
CompositeSequence decode(const std::vector<double>& x, const GAConfig& cfg) {
  const std::size_t n = x.size() / 3;
  CompositeSequence seq;
  seq.segments.resize(n);
  double mx = -INFINITY;
  for (std::size_t k = 0; k < n; ++k) mx = std::max(mx, x[3 * k]);
  double z = 0.0;
  for (std::size_t k = 0; k < n; ++k) z += std::exp(x[3 * k] - mx);
  double acc = 0.0;
  for (std::size_t k = 0; k < n; ++k) {
    auto& s = seq.segments[k];
    s.f = std::exp(x[3 * k] - mx) / z;
    s.a = cfg.fixed_amplitude ? *cfg.fixed_amplitude : kFieldCap * std::tanh(x[3 * k + 1]);
    s.phi = x[3 * k + 2];
    if (k + 1 < n) acc += s.f;
  }
  seq.segments.back().f = 1.0 - acc;
  return seq;
}

std::vector<double> encode(const CompositeSequence& seq) {
  std::vector<double> x;
  for (const auto& s : seq.segments) {
    x.push_back(std::log(std::max(s.f, 1e-300)));
    x.push_back(std::atanh(std::clamp(s.a / kFieldCap, -kAtanhClamp, kAtanhClamp)));
    x.push_back(s.phi);
  }
  return x;
}

CompositeSequence pad_to(CompositeSequence seq, int n) {
  while (static_cast<int>(seq.segments.size()) < n) {
    auto it = std::max_element(seq.segments.begin(), seq.segments.end(),
                               [](const auto& a, const auto& b) { return a.f < b.f; });
    it->f *= 0.5;
    seq.segments.insert(it, *it);
  }
  return seq;
}

// Dense BFGS with central-difference gradients and Armijo backtracking.
template <class F>
std::vector<double> bfgs(F f, std::vector<double> x, int iters) {
  const std::size_t n = x.size();
  auto grad = [&](const std::vector<double>& p) {
    std::vector<double> g(n);
    auto q = p;
    for (std::size_t i = 0; i < n; ++i) {
      const double h = 1e-6 * std::max(1.0, std::abs(p[i]));
      q[i] = p[i] + h;
      const double up = f(q);
      q[i] = p[i] - h;
      const double dn = f(q);
      q[i] = p[i];
      g[i] = (up - dn) / (2 * h);
    }
    return g;
  };
  Eigen::MatrixXd H = Eigen::MatrixXd::Identity(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n));
  double fx = f(x);
  auto g = grad(x);
  for (int it = 0; it < iters; ++it) {
    const Eigen::Map<const Eigen::VectorXd> gv(g.data(), static_cast<Eigen::Index>(n));
    if (gv.norm() < 1e-12) break;
    Eigen::VectorXd d = -H * gv;
    if (d.dot(gv) >= 0.0) {
      H.setIdentity();
      d = -gv;
    }
    double step = 1.0;
    std::vector<double> xn(n);
    double fn = fx;
    bool accepted = false;
    for (int ls = 0; ls < 40; ++ls) {
      for (std::size_t i = 0; i < n; ++i) xn[i] = x[i] + step * d[static_cast<Eigen::Index>(i)];
      fn = f(xn);
      if (fn <= fx + 1e-4 * step * d.dot(gv)) {
        accepted = true;
        break;
      }
      step *= 0.5;
    }
    if (!accepted || !(fn < fx)) break;
    const auto gn = grad(xn);
    Eigen::VectorXd s(static_cast<Eigen::Index>(n)), y(static_cast<Eigen::Index>(n));
    for (std::size_t i = 0; i < n; ++i) {
      s[static_cast<Eigen::Index>(i)] = xn[i] - x[i];
      y[static_cast<Eigen::Index>(i)] = gn[i] - g[i];
    }
    const double sy = s.dot(y);
    if (sy > 1e-16) {
      const double rho = 1.0 / sy;
      const Eigen::MatrixXd I = Eigen::MatrixXd::Identity(H.rows(), H.cols());
      H = (I - rho * s * y.transpose()) * H * (I - rho * y * s.transpose()) + rho * s * s.transpose();
    }
    x = xn;
    fx = fn;
    g = gn;
  }
  return x;
}

}  // namespace

ControlField rectangular_pulse(double theta) {
  if (!(theta > 0.0 && theta <= kTwoPi)) throw ConfigError("rectangular_pulse: theta must lie in (0, 2pi]");
  return constant_field(theta / kTwoPi, "rectangular");
}

ControlField drag_pulse(double theta, double Delta, double drag_coeff) {
  if (!(theta > 0.0 && theta <= kTwoPi)) throw ConfigError("drag_pulse: theta must lie in (0, 2pi]");
  if (Delta == 0.0 || !std::isfinite(Delta)) throw ConfigError("drag_pulse: anharmonicity Delta must be nonzero");
  if (!std::isfinite(drag_coeff)) throw ConfigError("drag_pulse: drag coefficient must be finite");
  const double a0 = theta / kPi;
  const double q = drag_coeff / Delta;
  auto sampler = [a0, q](double t, Side) {
    const double i = 0.5 * a0 * (1.0 - std::cos(t + kPi));
    const double di = 0.5 * a0 * std::sin(t + kPi);
    return Complex(i, q * di);
  };
  return {"drag", sampler, a0 * std::hypot(1.0, 0.5 * q)};
}

DragCalibration calibrate_drag(double theta, const QutritModel& model, const IntegratorConfig& cfg, double range) {
  auto loss = [&](double coeff) {
    return qutrit_loss(propagate_qutrit(drag_pulse(theta, model.Delta, coeff), model, cfg).final_state());
  };
  constexpr int scan = 33;
  const double step = 2.0 * range / (scan - 1);
  std::vector<double> values(scan);
  parallel_for(scan, [&](std::size_t i) { values[i] = loss(-range + step * static_cast<double>(i)); });
  const auto best = static_cast<int>(std::min_element(values.begin(), values.end()) - values.begin());
  const double lo = -range + step * std::max(0, best - 1);
  const double hi = -range + step * std::min(scan - 1, best + 1);
  boost::uintmax_t max_iter = 200;
  const auto [x, fx] = boost::math::tools::brent_find_minima(loss, lo, hi, 40, max_iter);
  if (fx <= values[static_cast<std::size_t>(best)]) return {x, fx};
  return {-range + step * best, values[static_cast<std::size_t>(best)]};
}

void CompositeSequence::validate() const {
  if (segments.empty()) throw ConfigError("composite: at least one segment required");
  double sum = 0.0;
  for (const auto& s : segments) {
    if (!(s.f > 0.0 && s.f <= 1.0)) throw ConfigError("composite: duration fractions must lie in (0, 1]");
    if (!std::isfinite(s.a) || !std::isfinite(s.phi)) throw ConfigError("composite: non-finite segment");
    sum += s.f;
  }
  if (std::abs(sum - 1.0) > 1e-12) throw ConfigError("composite: duration fractions must sum to 1");
}

std::string CompositeSequence::to_json() const {
  nlohmann::json j;
  j["segments"] = nlohmann::json::array();
  for (const auto& s : segments) j["segments"].push_back({{"f", s.f}, {"a", s.a}, {"phi", s.phi}});
  return j.dump(2);
}

CompositeSequence CompositeSequence::from_json(std::string_view text) {
  CompositeSequence seq;
  try {
    const auto j = nlohmann::json::parse(text);
    for (const auto& s : j.at("segments"))
      seq.segments.push_back({s.at("f").get<double>(), s.at("a").get<double>(), s.at("phi").get<double>()});
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(std::string("composite sequence: ") + e.what());
  }
  seq.validate();
  return seq;
}

ControlField composite_field(const CompositeSequence& seq) {
  seq.validate();
  auto edges = std::make_shared<std::vector<double>>();
  auto values = std::make_shared<std::vector<Complex>>();
  double acc = 0.0, cap = 0.0;
  edges->push_back(kTimeStart);
  for (std::size_t k = 0; k < seq.segments.size(); ++k) {
    const auto& s = seq.segments[k];
    acc += s.f;
    edges->push_back(k + 1 == seq.segments.size() ? kTimeEnd : kTimeStart + kTwoPi * acc);
    values->push_back(std::polar(s.a, s.phi));
    cap = std::max(cap, std::abs(s.a));
  }
  std::vector<double> breaks(edges->begin() + 1, edges->end() - 1);
  auto sampler = [edges, values](double t, Side side) {
    const auto& e = *edges;
    // First edge strictly greater than t; its predecessor opens the segment.
    auto k = static_cast<std::ptrdiff_t>(std::upper_bound(e.begin(), e.end(), t) - e.begin()) - 1;
    if (side == Side::Left && k > 0 && t == e[static_cast<std::size_t>(k)]) --k;
    k = std::clamp<std::ptrdiff_t>(k, 0, static_cast<std::ptrdiff_t>(values->size()) - 1);
    return (*values)[static_cast<std::size_t>(k)];
  };
  return {"composite", sampler, cap, breaks};
}

CVec4 composite_cvec(const CompositeSequence& seq, double delta) {
  // In the frame co-rotating with e^{i delta t} each segment has the constant
  // Hamiltonian (a cos phi sx + a sin phi sy - delta sz)/2; the frame change
  // contributes exp(-i delta pi sz / 2) on either side.
  const CVec4 frame = su2_exp(kPi, 0.0, 0.0, 0.5 * delta);
  CVec4 u = frame;
  for (const auto& s : seq.segments) {
    const CVec4 step = su2_exp(kTwoPi * s.f, 0.5 * s.a * std::cos(s.phi), 0.5 * s.a * std::sin(s.phi), -0.5 * delta);
    u = compose(step, u);
  }
  return compose(frame, u);
}

std::vector<double> DetuningWindow::grid() const {
  if (!(low < high) || points < 2) throw ConfigError("detuning window: need low < high and >= 2 points");
  std::vector<double> g(static_cast<std::size_t>(points));
  for (int i = 0; i < points; ++i) g[static_cast<std::size_t>(i)] = low + (high - low) * i / (points - 1);
  return g;
}

double composite_window_loss(const CompositeSequence& seq, const DetuningWindow& window) {
  double sum = 0.0;
  const auto grid = window.grid();
  for (double d : grid) sum += qubit_loss(composite_cvec(seq, d));
  return sum / static_cast<double>(grid.size());
}

void GAConfig::validate() const {
  if (population < 2) throw ConfigError("ga: population must be >= 2");
  if (generations < 0 || refine_iters < 0) throw ConfigError("ga: iteration counts must be >= 0");
  if (elite < 0 || elite > population) throw ConfigError("ga: elite count must lie in [0, population]");
  if (tournament < 1) throw ConfigError("ga: tournament size must be >= 1");
  if (!(mutation_scale >= 0.0) || !(mutation_rate >= 0.0 && mutation_rate <= 1.0) ||
      !(crossover_rate >= 0.0 && crossover_rate <= 1.0))
    throw ConfigError("ga: invalid mutation or crossover settings");
  if (fixed_amplitude && !(std::abs(*fixed_amplitude) <= kFieldCap))
    throw ConfigError("ga: fixed amplitude exceeds the field cap");
}

CompositeResult optimize_composite(int n_pulses, const GAConfig& cfg, const DetuningWindow& window,
                                   const std::optional<CompositeSequence>& warm_start) {
  if (n_pulses < 1 || n_pulses > 8) throw ConfigError("optimize_composite: n_pulses must lie in [1, 8]");
  cfg.validate();
  (void)window.grid();
  const auto dim = static_cast<std::size_t>(3 * n_pulses);
  auto objective = [&](const std::vector<double>& x) { return composite_window_loss(decode(x, cfg), window); };

  std::mt19937_64 rng(cfg.seed);
  const auto P = static_cast<std::size_t>(cfg.population);
  std::vector<std::vector<double>> pop(P, std::vector<double>(dim));
  for (auto& x : pop) {
    for (std::size_t k = 0; k < dim; k += 3) {
      x[k] = uniform(rng, -1.0, 1.0);
      x[k + 1] = uniform(rng, -0.6, 0.6);
      x[k + 2] = uniform(rng, 0.0, kTwoPi);
    }
  }
  std::optional<CompositeSequence> padded;
  if (warm_start) {
    if (static_cast<int>(warm_start->segments.size()) > n_pulses)
      throw ConfigError("optimize_composite: warm start has more segments than requested");
    padded = pad_to(*warm_start, n_pulses);
    pop[0] = encode(*padded);
  }

  std::vector<double> fit(P);
  auto evaluate = [&] { parallel_for(P, [&](std::size_t i) { fit[i] = objective(pop[i]); }); };
  evaluate();

  auto tournament = [&]() -> const std::vector<double>& {
    std::size_t best = static_cast<std::size_t>(uniform01(rng) * static_cast<double>(P));
    for (int t = 1; t < cfg.tournament; ++t) {
      const auto c = static_cast<std::size_t>(uniform01(rng) * static_cast<double>(P));
      if (fit[c] < fit[best]) best = c;
    }
    return pop[best];
  };

  for (int gen = 0; gen < cfg.generations; ++gen) {
    std::vector<std::size_t> order(P);
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](auto a, auto b) { return fit[a] < fit[b]; });
    std::vector<std::vector<double>> next;
    next.reserve(P);
    for (int e = 0; e < cfg.elite; ++e) next.push_back(pop[order[static_cast<std::size_t>(e)]]);
    while (next.size() < P) {
      const auto& pa = tournament();
      const auto& pb = tournament();
      std::vector<double> child = pa;
      if (uniform01(rng) < cfg.crossover_rate) {
        // Uniform crossover on whole segments keeps (fraction, amplitude, phase) together.
        for (std::size_t k = 0; k < dim; k += 3) {
          if (uniform01(rng) < 0.5) std::copy_n(pb.begin() + static_cast<std::ptrdiff_t>(k), 3, child.begin() + static_cast<std::ptrdiff_t>(k));
        }
      }
      for (auto& g : child)
        if (uniform01(rng) < cfg.mutation_rate) g += cfg.mutation_scale * standard_normal(rng);
      next.push_back(std::move(child));
    }
    pop = std::move(next);
    evaluate();
  }

  const auto best = static_cast<std::size_t>(std::min_element(fit.begin(), fit.end()) - fit.begin());
  CompositeResult result;
  result.ga_loss = fit[best];
  const auto refined = bfgs(objective, pop[best], cfg.refine_iters);
  result.sequence = decode(refined, cfg);
  result.window_loss = composite_window_loss(result.sequence, window);
  const auto ga_seq = decode(pop[best], cfg);
  if (result.ga_loss < result.window_loss) {
    result.sequence = ga_seq;
    result.window_loss = result.ga_loss;
  }
  if (padded) {
    const double w = composite_window_loss(*padded, window);
    if (w <= result.window_loss) {
      result.sequence = *padded;
      result.window_loss = w;
    }
  }
  return result;
}

}  // namespace npulse
