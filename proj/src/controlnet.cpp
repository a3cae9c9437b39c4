#include "npulse/controlnet.hpp"

#include <array>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <random>
#include <sstream>

#include <nlohmann/json.hpp>

#include "npulse/error.hpp"
#include "npulse/random.hpp"

namespace npulse {

namespace {

constexpr std::array<int, kNetworkDepth + 2> kWidths = {kNetworkInputs, kNetworkWidth, kNetworkWidth,
                                                        kNetworkWidth, kNetworkOutputs};
constexpr int kLayerCount = kNetworkDepth + 1;

NetworkParams shaped(double omega_max) {
  NetworkParams p;
  p.omega_max = omega_max;
  for (int l = 0; l < kLayerCount; ++l) {
    Layer layer;
    layer.rows = kWidths[l + 1];
    layer.cols = kWidths[l];
    layer.weights.assign(static_cast<std::size_t>(layer.rows * layer.cols), 0.0);
    layer.bias.assign(static_cast<std::size_t>(layer.rows), 0.0);
    p.layers.push_back(std::move(layer));
  }
  return p;
}

// One dense layer, out = W in + b, fixed accumulation order.
void dense(const Layer& layer, const double* in, double* out) {
  for (int r = 0; r < layer.rows; ++r) {
    const double* w = layer.weights.data() + static_cast<std::ptrdiff_t>(r) * layer.cols;
    double acc = layer.bias[r];
    for (int c = 0; c < layer.cols; ++c) acc += w[c] * in[c];
    out[r] = acc;
  }
}

std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

}  // namespace

std::size_t NetworkParams::parameter_count() const {
  std::size_t n = 0;
  for (const auto& l : layers) n += l.weights.size() + l.bias.size();
  return n;
}

std::vector<double> NetworkParams::flatten() const {
  std::vector<double> flat;
  flat.reserve(parameter_count());
  for (const auto& l : layers) {
    flat.insert(flat.end(), l.weights.begin(), l.weights.end());
    flat.insert(flat.end(), l.bias.begin(), l.bias.end());
  }
  return flat;
}

void NetworkParams::assign(std::span<const double> flat) {
  if (flat.size() != parameter_count()) throw ConfigError("NetworkParams::assign: size mismatch");
  auto it = flat.begin();
  for (auto& l : layers) {
    std::copy_n(it, l.weights.size(), l.weights.begin());
    it += static_cast<std::ptrdiff_t>(l.weights.size());
    std::copy_n(it, l.bias.size(), l.bias.begin());
    it += static_cast<std::ptrdiff_t>(l.bias.size());
  }
}

void NetworkParams::validate() const {
  if (static_cast<int>(layers.size()) != kLayerCount) {
    std::ostringstream os;
    os << "network: expected " << kLayerCount << " layers, got " << layers.size();
    throw ConfigError(os.str());
  }
  for (int l = 0; l < kLayerCount; ++l) {
    const auto& layer = layers[static_cast<std::size_t>(l)];
    if (layer.rows != kWidths[l + 1] || layer.cols != kWidths[l] ||
        layer.weights.size() != static_cast<std::size_t>(layer.rows * layer.cols) ||
        layer.bias.size() != static_cast<std::size_t>(layer.rows)) {
      std::ostringstream os;
      os << "network: layer " << l << " has shape " << layer.rows << "x" << layer.cols << " ("
         << layer.weights.size() << " weights, " << layer.bias.size() << " biases), expected "
         << kWidths[l + 1] << "x" << kWidths[l];
      throw ConfigError(os.str());
    }
    for (double v : layer.weights)
      if (!std::isfinite(v)) throw ConfigError("network: non-finite weight in layer " + std::to_string(l));
    for (double v : layer.bias)
      if (!std::isfinite(v)) throw ConfigError("network: non-finite bias in layer " + std::to_string(l));
  }
  if (!(omega_max > 0.0) || !std::isfinite(omega_max)) throw ConfigError("network: omega_max must be > 0");
}

NetworkOutput forward(const NetworkParams& params, double t, double theta) {
  std::array<double, kNetworkWidth> a{};
  std::array<double, kNetworkWidth> b{};
  const std::array<double, 2> in = {t, theta};
  dense(params.layers[0], in.data(), a.data());
  for (auto& v : a) v = std::tanh(v);
  for (int l = 1; l < kNetworkDepth; ++l) {
    dense(params.layers[static_cast<std::size_t>(l)], a.data(), b.data());
    for (int i = 0; i < kNetworkWidth; ++i) a[static_cast<std::size_t>(i)] = std::tanh(b[static_cast<std::size_t>(i)]);
  }
  std::array<double, kNetworkOutputs> out{};
  dense(params.layers[kNetworkDepth], a.data(), out.data());
  return {out[0], out[1]};
}

Complex field_at(const NetworkParams& params, double t, const Scenario& scenario) {
  const auto o = forward(params, t, scenario.theta);
  const double amplitude = params.omega_max * std::tanh(o.o1);
  return (1.0 + scenario.alpha) * amplitude * std::polar(1.0, o.o2 + scenario.delta * t);
}

ControlField network_field(const NetworkParams& params, const Scenario& scenario) {
  return {"network", [params, scenario](double t, Side) { return field_at(params, t, scenario); },
          std::abs(1.0 + scenario.alpha) * params.omega_max};
}

ControlField conjugate_field(const ControlField& field) {
  auto inner = field;
  return {field.name() + "*", [inner](double t, Side side) { return std::conj(inner(t, side)); }, field.cap(),
          field.breakpoints()};
}

NetworkParams init_params(std::uint64_t seed, double omega_max) {
  NetworkParams p = shaped(omega_max);
  p.seed = seed;
  std::mt19937_64 rng(seed);
  for (auto& layer : p.layers) {
    const double limit = std::sqrt(6.0 / static_cast<double>(layer.rows + layer.cols));
    for (auto& w : layer.weights) w = limit * (2.0 * uniform01(rng) - 1.0);
  }
  return p;
}

NetworkParams zero_params(double omega_max) { return shaped(omega_max); }

std::string checkpoint_json(const NetworkParams& params) {
  params.validate();
  std::ostringstream os;
  os << "{\n  \"version\": " << kCheckpointVersion << ",\n  \"seed\": " << params.seed
     << ",\n  \"omega_max\": " << format_double(params.omega_max) << ",\n  \"layers\": [";
  for (std::size_t l = 0; l < params.layers.size(); ++l) {
    const auto& layer = params.layers[l];
    os << (l ? ",\n" : "\n") << "    {\"rows\": " << layer.rows << ", \"cols\": " << layer.cols << ",\n     \"weights\": [";
    for (std::size_t i = 0; i < layer.weights.size(); ++i) os << (i ? ", " : "") << format_double(layer.weights[i]);
    os << "],\n     \"bias\": [";
    for (std::size_t i = 0; i < layer.bias.size(); ++i) os << (i ? ", " : "") << format_double(layer.bias[i]);
    os << "]}";
  }
  os << "\n  ]\n}\n";
  return os.str();
}

NetworkParams parse_checkpoint(std::string_view text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw FormatError(std::string("checkpoint: malformed JSON (") + e.what() + ")");
  }
  try {
    if (!j.is_object()) throw FormatError("checkpoint: top level must be an object");
    for (const char* key : {"version", "seed", "omega_max", "layers"})
      if (!j.contains(key)) throw FormatError(std::string("checkpoint: missing field '") + key + "'");
    const int version = j.at("version").get<int>();
    if (version != kCheckpointVersion) {
      throw FormatError("checkpoint: version " + std::to_string(version) + " is not supported (expected " +
                        std::to_string(kCheckpointVersion) + ")");
    }
    NetworkParams p;
    p.seed = j.at("seed").get<std::uint64_t>();
    p.omega_max = j.at("omega_max").get<double>();
    for (const auto& jl : j.at("layers")) {
      Layer layer;
      layer.rows = jl.at("rows").get<int>();
      layer.cols = jl.at("cols").get<int>();
      layer.weights = jl.at("weights").get<std::vector<double>>();
      layer.bias = jl.at("bias").get<std::vector<double>>();
      p.layers.push_back(std::move(layer));
    }
    p.validate();
    return p;
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(std::string("checkpoint: ") + e.what());
  } catch (const ConfigError& e) {
    throw FormatError(std::string("checkpoint: ") + e.what());
  }
}

void save_checkpoint(const NetworkParams& params, const std::filesystem::path& path) {
  const std::string text = checkpoint_json(params);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw FormatError("cannot open checkpoint for writing: " + path.string());
  out << text;
  if (!out) throw FormatError("failed writing checkpoint: " + path.string());
}

NetworkParams load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FormatError("cannot open checkpoint: " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_checkpoint(ss.str());
}

SampledDrive::SampledDrive(const NetworkParams& params, std::span<const double> times, double theta)
    : params_(&params), times_(times.begin(), times.end()), theta_(theta) {
  const std::size_t n = times_.size();
  re_.resize(n);
  im_.resize(n);
  o1_.resize(n);
  o2_.resize(n);
  hidden_.resize(n * kNetworkDepth * kNetworkWidth);
  std::array<double, kNetworkWidth> z{};
  for (std::size_t s = 0; s < n; ++s) {
    double* h = hidden_.data() + s * kNetworkDepth * kNetworkWidth;
    const std::array<double, 2> in = {times_[s], theta_};
    dense(params.layers[0], in.data(), z.data());
    for (int i = 0; i < kNetworkWidth; ++i) h[i] = std::tanh(z[static_cast<std::size_t>(i)]);
    for (int l = 1; l < kNetworkDepth; ++l) {
      dense(params.layers[static_cast<std::size_t>(l)], h + (l - 1) * kNetworkWidth, z.data());
      for (int i = 0; i < kNetworkWidth; ++i) h[l * kNetworkWidth + i] = std::tanh(z[static_cast<std::size_t>(i)]);
    }
    std::array<double, kNetworkOutputs> out{};
    dense(params.layers[kNetworkDepth], h + (kNetworkDepth - 1) * kNetworkWidth, out.data());
    o1_[s] = out[0];
    o2_[s] = out[1];
    const Complex v = params.omega_max * std::tanh(out[0]) * std::polar(1.0, out[1]);
    re_[s] = v.real();
    im_[s] = v.imag();
  }
}

std::vector<double> SampledDrive::pullback(std::span<const double> g_re, std::span<const double> g_im) const {
  const auto& p = *params_;
  std::vector<double> grad(p.parameter_count(), 0.0);
  // Offsets of each layer's weights/bias in the flat vector.
  std::array<std::size_t, kLayerCount> w_off{};
  std::array<std::size_t, kLayerCount> b_off{};
  std::size_t off = 0;
  for (int l = 0; l < kLayerCount; ++l) {
    w_off[static_cast<std::size_t>(l)] = off;
    off += p.layers[static_cast<std::size_t>(l)].weights.size();
    b_off[static_cast<std::size_t>(l)] = off;
    off += p.layers[static_cast<std::size_t>(l)].bias.size();
  }

  std::array<double, kNetworkWidth> delta{};
  std::array<double, kNetworkWidth> prev{};
  for (std::size_t s = 0; s < times_.size(); ++s) {
    const double th = std::tanh(o1_[s]);
    const double amp = p.omega_max * th;
    const double cph = std::cos(o2_[s]);
    const double sph = std::sin(o2_[s]);
    // N = amp e^{i o2}; dN/do1 = omega_max (1 - th^2) e^{i o2}; dN/do2 = i N.
    const double damp = p.omega_max * (1.0 - th * th);
    std::array<double, kNetworkOutputs> g_out = {
        g_re[s] * damp * cph + g_im[s] * damp * sph,
        -g_re[s] * amp * sph + g_im[s] * amp * cph,
    };
    const double* h = hidden_.data() + s * kNetworkDepth * kNetworkWidth;

    // Output layer.
    {
      const auto& layer = p.layers[kNetworkDepth];
      const double* in = h + (kNetworkDepth - 1) * kNetworkWidth;
      double* gw = grad.data() + w_off[kNetworkDepth];
      double* gb = grad.data() + b_off[kNetworkDepth];
      for (int r = 0; r < layer.rows; ++r) {
        gb[r] += g_out[static_cast<std::size_t>(r)];
        for (int c = 0; c < layer.cols; ++c) gw[r * layer.cols + c] += g_out[static_cast<std::size_t>(r)] * in[c];
      }
      for (int c = 0; c < layer.cols; ++c) {
        double acc = 0.0;
        for (int r = 0; r < layer.rows; ++r) acc += layer.weights[static_cast<std::size_t>(r * layer.cols + c)] * g_out[static_cast<std::size_t>(r)];
        const double a = in[c];
        delta[static_cast<std::size_t>(c)] = acc * (1.0 - a * a);
      }
    }
    // Hidden layers, top down.
    for (int l = kNetworkDepth - 1; l >= 0; --l) {
      const auto& layer = p.layers[static_cast<std::size_t>(l)];
      std::array<double, 2> x0{};
      const double* in;
      if (l == 0) {
        x0 = {times_[s], theta_};
        in = x0.data();
      } else {
        in = h + (l - 1) * kNetworkWidth;
      }
      double* gw = grad.data() + w_off[static_cast<std::size_t>(l)];
      double* gb = grad.data() + b_off[static_cast<std::size_t>(l)];
      for (int r = 0; r < layer.rows; ++r) {
        const double d = delta[static_cast<std::size_t>(r)];
        gb[r] += d;
        for (int c = 0; c < layer.cols; ++c) gw[r * layer.cols + c] += d * in[c];
      }
      if (l == 0) break;
      for (int c = 0; c < layer.cols; ++c) {
        double acc = 0.0;
        for (int r = 0; r < layer.rows; ++r) acc += layer.weights[static_cast<std::size_t>(r * layer.cols + c)] * delta[static_cast<std::size_t>(r)];
        const double a = in[c];
        prev[static_cast<std::size_t>(c)] = acc * (1.0 - a * a);
      }
      delta = prev;
    }
  }
  return grad;
}

}  // namespace npulse
