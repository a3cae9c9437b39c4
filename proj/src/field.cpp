#include "npulse/field.hpp"

#include <algorithm>
#include <cmath>
#include <memory>

#include "npulse/error.hpp"

namespace npulse {

ControlField::ControlField(std::string name, Sampler sampler, double cap, std::vector<double> breakpoints)
    : name_(std::move(name)), sampler_(std::move(sampler)), cap_(cap), breakpoints_(std::move(breakpoints)) {
  std::sort(breakpoints_.begin(), breakpoints_.end());
  std::erase_if(breakpoints_, [](double b) { return !(b > kTimeStart && b < kTimeEnd); });
  breakpoints_.erase(std::unique(breakpoints_.begin(), breakpoints_.end()), breakpoints_.end());
}

std::vector<Complex> ControlField::sample(std::span<const double> times) const {
  std::vector<Complex> out;
  out.reserve(times.size());
  for (double t : times) out.push_back(sampler_(t, Side::Center));
  return out;
}

ControlField constant_field(Complex value, std::string name) {
  return {std::move(name), [value](double, Side) { return value; }, std::abs(value)};
}

ControlField zero_field() { return constant_field(0.0, "zero"); }

ControlField detune(const ControlField& field, double delta, double alpha) {
  if (delta == 0.0 && alpha == 0.0) return field;
  auto inner = field;
  const double gain = 1.0 + alpha;
  return {field.name(),
          [inner, delta, gain](double t, Side side) { return gain * std::polar(1.0, delta * t) * inner(t, side); },
          std::abs(gain) * field.cap(), field.breakpoints()};
}

ControlField scale_field(const ControlField& field, Complex factor) {
  auto inner = field;
  return {field.name(), [inner, factor](double t, Side side) { return factor * inner(t, side); },
          std::abs(factor) * field.cap(), field.breakpoints()};
}

ControlField interpolated_field(std::vector<Complex> samples, double t_first, double dt, std::string name) {
  if (samples.size() < 2) throw ConfigError("interpolated_field: need at least two samples");
  if (!(dt > 0.0)) throw ConfigError("interpolated_field: spacing must be positive");
  double cap = 0.0;
  for (const auto& s : samples) {
    if (!std::isfinite(s.real()) || !std::isfinite(s.imag()))
      throw NumericalError("interpolated_field: non-finite sample");
    cap = std::max(cap, std::abs(s));
  }
  auto data = std::make_shared<const std::vector<Complex>>(std::move(samples));
  auto sampler = [data, t_first, dt](double t, Side) -> Complex {
    const auto& y = *data;
    const auto n = static_cast<std::ptrdiff_t>(y.size());
    const double x = (t - t_first) / dt;
    if (x <= 0.0) return y[0] + x * (y[1] - y[0]);
    if (x >= static_cast<double>(n - 1)) {
      return y[n - 1] + (x - static_cast<double>(n - 1)) * (y[n - 1] - y[n - 2]);
    }
    const auto i = static_cast<std::ptrdiff_t>(std::floor(x));
    const double u = x - static_cast<double>(i);
    const Complex p1 = y[i];
    const Complex p2 = y[i + 1];
    // End intervals reuse a linear ghost point.
    const Complex p0 = i > 0 ? y[i - 1] : 2.0 * p1 - p2;
    const Complex p3 = i + 2 < n ? y[i + 2] : 2.0 * p2 - p1;
    const double u2 = u * u;
    const double u3 = u2 * u;
    return 0.5 * ((2.0 * p1) + (-p0 + p2) * u + (2.0 * p0 - 5.0 * p1 + 4.0 * p2 - p3) * u2 +
                  (-p0 + 3.0 * p1 - 3.0 * p2 + p3) * u3);
  };
  // Catmull-Rom can overshoot the samples slightly.
  return {std::move(name), std::move(sampler), 1.25 * cap};
}

std::vector<double> time_grid(int count) {
  if (count < 2) throw ConfigError("time_grid: need at least two points");
  std::vector<double> t(static_cast<std::size_t>(count));
  const double h = kTwoPi / (count - 1);
  for (int i = 0; i < count; ++i) t[static_cast<std::size_t>(i)] = kTimeStart + h * i;
  t.back() = kTimeEnd;
  return t;
}

}  // namespace npulse
