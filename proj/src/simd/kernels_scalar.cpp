// Scalar reference kernels. Every expression here has a lane-parallel twin in
// kernels_avx2.cpp with the same association order.

#include <algorithm>
#include <array>

#include "npulse/simd/kernels.hpp"

namespace npulse::simd::scalar {

namespace {

constexpr double kHalf = 0.5;
constexpr double kTwo = 2.0;
constexpr double kFour = 4.0;
constexpr double kTarget = 0.70710678118654752440;

struct Stage {
  double a, b;    // Omega
  double pr, pi;  // coupling (qutrit)
};

Stage lane_stage(const BlockProblem& p, int s, int lane) {
  const double nr = p.drive_re[s];
  const double ni = p.drive_im[s];
  const double wr = p.weight_re[s * kLanes + lane];
  const double wi = p.weight_im[s * kLanes + lane];
  Stage st{nr * wr - ni * wi, nr * wi + ni * wr, 0.0, 0.0};
  if (p.coupling_re) {
    st.pr = p.coupling_re[s];
    st.pi = p.coupling_im[s];
  }
  return st;
}

// dL/dOmega -> dL/dN for lane weight w.
void chain_to_drive(const BlockProblem& p, int s, int lane, double ga, double gb, BlockResult& r) {
  const double wr = p.weight_re[s * kLanes + lane];
  const double wi = p.weight_im[s * kLanes + lane];
  r.grad_re[s * kLanes + lane] += ga * wr + gb * wi;
  r.grad_im[s * kLanes + lane] += gb * wr - ga * wi;
}

// ---------------------------------------------------------------- qubit

using Q4 = std::array<double, 4>;

Q4 qubit_apply(const Stage& st, const Q4& x) {
  const double a = st.a, b = st.b;
  return {-(kHalf * (a * x[1] + b * x[2])), kHalf * (a * x[0] + b * x[3]), kHalf * (b * x[0] - a * x[3]),
          kHalf * (a * x[2] - b * x[1])};
}

// <kb, dM/dRe(Omega) x>, <kb, dM/dIm(Omega) x>
void qubit_sens(const Q4& kb, const Q4& x, double& ga, double& gb) {
  ga = kHalf * (((kb[1] * x[0] - kb[0] * x[1]) + kb[3] * x[2]) - kb[2] * x[3]);
  gb = kHalf * (((kb[2] * x[0] - kb[0] * x[2]) + kb[1] * x[3]) - kb[3] * x[1]);
}

Q4 axpy(const Q4& c, double s, const Q4& k) {
  return {c[0] + s * k[0], c[1] + s * k[1], c[2] + s * k[2], c[3] + s * k[3]};
}

void qubit_lane(const BlockProblem& p, int lane, BlockResult& r, double* store) {
  const int n = p.grid.n_steps;
  const double h = p.grid.h;
  const double hh = kHalf * h;
  const double h6 = h / 6.0;
  const double h3 = h / 3.0;

  Q4 c = {1.0, 0.0, 0.0, 0.0};
  auto save = [&](int k, const Q4& v) {
    for (int i = 0; i < 4; ++i) store[(k * kQubitDim + i) * kLanes + lane] = v[static_cast<std::size_t>(i)];
  };
  auto load = [&](int k) {
    Q4 v;
    for (int i = 0; i < 4; ++i) v[static_cast<std::size_t>(i)] = store[(k * kQubitDim + i) * kLanes + lane];
    return v;
  };

  save(0, c);
  for (int k = 0; k < n; ++k) {
    const Stage s0 = lane_stage(p, 2 * k, lane);
    const Stage s1 = lane_stage(p, 2 * k + 1, lane);
    const Stage s2 = lane_stage(p, 2 * k + 2, lane);
    const Q4 k1 = qubit_apply(s0, c);
    const Q4 k2 = qubit_apply(s1, axpy(c, hh, k1));
    const Q4 k3 = qubit_apply(s1, axpy(c, hh, k2));
    const Q4 k4 = qubit_apply(s2, axpy(c, h, k3));
    for (int i = 0; i < 4; ++i) {
      const auto u = static_cast<std::size_t>(i);
      c[u] = c[u] + h6 * (((k1[u] + kTwo * k2[u]) + kTwo * k3[u]) + k4[u]);
    }
    save(k + 1, c);
  }

  const double d0 = c[0] - kTarget;
  r.loss[static_cast<std::size_t>(lane)] = c[3] * c[3] + d0 * d0;
  for (int i = 0; i < 4; ++i) r.final_state[static_cast<std::size_t>(i * kLanes + lane)] = c[static_cast<std::size_t>(i)];
  if (!p.want_gradient) return;

  const double scale = p.loss_scale[static_cast<std::size_t>(lane)];
  Q4 cb = {(kTwo * d0) * scale, 0.0, 0.0, (kTwo * c[3]) * scale};
  for (int k = n - 1; k >= 0; --k) {
    const Stage s0 = lane_stage(p, 2 * k, lane);
    const Stage s1 = lane_stage(p, 2 * k + 1, lane);
    const Stage s2 = lane_stage(p, 2 * k + 2, lane);
    const Q4 x1 = load(k);
    const Q4 k1 = qubit_apply(s0, x1);
    const Q4 x2 = axpy(x1, hh, k1);
    const Q4 k2 = qubit_apply(s1, x2);
    const Q4 x3 = axpy(x1, hh, k2);
    const Q4 k3 = qubit_apply(s1, x3);
    const Q4 x4 = axpy(x1, h, k3);

    Q4 kb1, kb2, kb3, kb4;
    for (int i = 0; i < 4; ++i) {
      const auto u = static_cast<std::size_t>(i);
      kb1[u] = h6 * cb[u];
      kb2[u] = h3 * cb[u];
      kb3[u] = h3 * cb[u];
      kb4[u] = h6 * cb[u];
    }
    Q4 cn = cb;
    double ga2, gb2, ga1, gb1, ta, tb, ga0, gb0;

    // k4 = M(s2) x4, x4 = c + h k3
    Q4 t = qubit_apply(s2, kb4);
    qubit_sens(kb4, x4, ga2, gb2);
    for (int i = 0; i < 4; ++i) {
      const auto u = static_cast<std::size_t>(i);
      cn[u] = cn[u] - t[u];
      kb3[u] = kb3[u] - h * t[u];
    }
    // k3 = M(s1) x3, x3 = c + h/2 k2
    t = qubit_apply(s1, kb3);
    qubit_sens(kb3, x3, ga1, gb1);
    for (int i = 0; i < 4; ++i) {
      const auto u = static_cast<std::size_t>(i);
      cn[u] = cn[u] - t[u];
      kb2[u] = kb2[u] - hh * t[u];
    }
    // k2 = M(s1) x2, x2 = c + h/2 k1
    t = qubit_apply(s1, kb2);
    qubit_sens(kb2, x2, ta, tb);
    ga1 = ga1 + ta;
    gb1 = gb1 + tb;
    for (int i = 0; i < 4; ++i) {
      const auto u = static_cast<std::size_t>(i);
      cn[u] = cn[u] - t[u];
      kb1[u] = kb1[u] - hh * t[u];
    }
    // k1 = M(s0) c
    t = qubit_apply(s0, kb1);
    qubit_sens(kb1, x1, ga0, gb0);
    for (int i = 0; i < 4; ++i) {
      const auto u = static_cast<std::size_t>(i);
      cn[u] = cn[u] - t[u];
    }
    cb = cn;

    chain_to_drive(p, 2 * k + 2, lane, ga2, gb2, r);
    chain_to_drive(p, 2 * k + 1, lane, ga1, gb1, r);
    chain_to_drive(p, 2 * k, lane, ga0, gb0, r);
  }
}

// ---------------------------------------------------------------- qutrit

using Q12 = std::array<double, kQutritDim>;  // index (col*3 + row)*2 + {re, im}

Q12 qutrit_apply(const Stage& st, const Q12& x) {
  const double a = st.a, b = st.b;
  const double qr = a * st.pr - b * st.pi;
  const double qi = a * st.pi + b * st.pr;
  Q12 k;
  for (int col = 0; col < 2; ++col) {
    const double* v = x.data() + col * 6;
    double* o = k.data() + col * 6;
    const double x0r = v[0], x0i = v[1], x1r = v[2], x1i = v[3], x2r = v[4], x2i = v[5];
    const double y0r = kHalf * (a * x1r + b * x1i);
    const double y0i = kHalf * (a * x1i - b * x1r);
    const double y1r = kHalf * ((a * x0r - b * x0i) + (qr * x2r + qi * x2i));
    const double y1i = kHalf * ((a * x0i + b * x0r) + (qr * x2i - qi * x2r));
    const double y2r = kHalf * (qr * x1r - qi * x1i);
    const double y2i = kHalf * (qr * x1i + qi * x1r);
    // k = -i y
    o[0] = y0i;
    o[1] = -y0r;
    o[2] = y1i;
    o[3] = -y1r;
    o[4] = y2i;
    o[5] = -y2r;
  }
  return k;
}

void qutrit_sens(const Stage& st, const Q12& kb, const Q12& x, double& ga, double& gb) {
  const double pr = st.pr, pi = st.pi;
  double sum_im = 0.0;  // Im(A + B + C + D)
  double sum_re = 0.0;  // Re(-A + B - C + D)
  for (int col = 0; col < 2; ++col) {
    const double* v = x.data() + col * 6;
    const double* w = kb.data() + col * 6;
    // z = conj(kb)
    const double z0r = w[0], z0i = -w[1], z1r = w[2], z1i = -w[3], z2r = w[4], z2i = -w[5];
    const double x0r = v[0], x0i = v[1], x1r = v[2], x1i = v[3], x2r = v[4], x2i = v[5];
    // A = z0 x1, B = z1 x0
    const double ar = z0r * x1r - z0i * x1i, ai = z0r * x1i + z0i * x1r;
    const double br = z1r * x0r - z1i * x0i, bi = z1r * x0i + z1i * x0r;
    // C = z1 conj(P) x2
    const double er = pr * x2r + pi * x2i, ei = pr * x2i - pi * x2r;
    const double cr = z1r * er - z1i * ei, ci = z1r * ei + z1i * er;
    // D = z2 P x1
    const double fr = pr * x1r - pi * x1i, fi = pr * x1i + pi * x1r;
    const double dr = z2r * fr - z2i * fi, di = z2r * fi + z2i * fr;
    sum_im = sum_im + (((ai + bi) + ci) + di);
    sum_re = sum_re + (((br - ar) - cr) + dr);
  }
  ga = kHalf * sum_im;
  gb = kHalf * sum_re;
}

Q12 axpy12(const Q12& c, double s, const Q12& k) {
  Q12 o;
  for (int i = 0; i < kQutritDim; ++i) o[static_cast<std::size_t>(i)] = c[static_cast<std::size_t>(i)] + s * k[static_cast<std::size_t>(i)];
  return o;
}

void qutrit_lane(const BlockProblem& p, int lane, BlockResult& r, double* store) {
  const int n = p.grid.n_steps;
  const double h = p.grid.h;
  const double hh = kHalf * h;
  const double h6 = h / 6.0;
  const double h3 = h / 3.0;

  Q12 c{};
  c[0] = 1.0;  // column 0 = |0>
  c[8] = 1.0;  // column 1 = |1>
  auto save = [&](int k, const Q12& v) {
    for (int i = 0; i < kQutritDim; ++i) store[(k * kQutritDim + i) * kLanes + lane] = v[static_cast<std::size_t>(i)];
  };
  auto load = [&](int k) {
    Q12 v;
    for (int i = 0; i < kQutritDim; ++i) v[static_cast<std::size_t>(i)] = store[(k * kQutritDim + i) * kLanes + lane];
    return v;
  };

  save(0, c);
  for (int k = 0; k < n; ++k) {
    const Stage s0 = lane_stage(p, 2 * k, lane);
    const Stage s1 = lane_stage(p, 2 * k + 1, lane);
    const Stage s2 = lane_stage(p, 2 * k + 2, lane);
    const Q12 k1 = qutrit_apply(s0, c);
    const Q12 k2 = qutrit_apply(s1, axpy12(c, hh, k1));
    const Q12 k3 = qutrit_apply(s1, axpy12(c, hh, k2));
    const Q12 k4 = qutrit_apply(s2, axpy12(c, h, k3));
    for (int i = 0; i < kQutritDim; ++i) {
      const auto u = static_cast<std::size_t>(i);
      c[u] = c[u] + h6 * (((k1[u] + kTwo * k2[u]) + kTwo * k3[u]) + k4[u]);
    }
    save(k + 1, c);
  }

  // u_rc: column c, row r -> index (c*3 + r)*2
  const double u00r = c[0], u00i = c[1], u10r = c[2], u10i = c[3], u20r = c[4], u20i = c[5];
  const double u01r = c[6], u01i = c[7], u11r = c[8], u11i = c[9], u21r = c[10], u21i = c[11];
  const double c0 = kHalf * (u00r + u11r);
  const double cz = kHalf * (u11i - u00i);
  const double cx = -(kHalf * (u01i + u10i));
  const double cy = kHalf * (u10r - u01r);
  const double d0 = c0 - kTarget;
  const double pl = (cx * cx + cy * cy) - kHalf;
  const double leak = ((u20r * u20r + u20i * u20i) + u21r * u21r) + u21i * u21i;
  r.loss[static_cast<std::size_t>(lane)] = ((d0 * d0 + cz * cz) + pl * pl) + p.leak_weight * leak;
  for (int i = 0; i < kQutritDim; ++i) r.final_state[static_cast<std::size_t>(i * kLanes + lane)] = c[static_cast<std::size_t>(i)];
  if (!p.want_gradient) return;

  const double scale = p.loss_scale[static_cast<std::size_t>(lane)];
  const double gc0 = (kTwo * d0) * scale;
  const double gcz = (kTwo * cz) * scale;
  const double gcx = ((kFour * pl) * cx) * scale;
  const double gcy = ((kFour * pl) * cy) * scale;
  const double lw = (kTwo * p.leak_weight) * scale;
  Q12 cb;
  cb[0] = kHalf * gc0;
  cb[1] = -(kHalf * gcz);
  cb[2] = kHalf * gcy;
  cb[3] = -(kHalf * gcx);
  cb[4] = lw * u20r;
  cb[5] = lw * u20i;
  cb[6] = -(kHalf * gcy);
  cb[7] = -(kHalf * gcx);
  cb[8] = kHalf * gc0;
  cb[9] = kHalf * gcz;
  cb[10] = lw * u21r;
  cb[11] = lw * u21i;

  for (int k = n - 1; k >= 0; --k) {
    const Stage s0 = lane_stage(p, 2 * k, lane);
    const Stage s1 = lane_stage(p, 2 * k + 1, lane);
    const Stage s2 = lane_stage(p, 2 * k + 2, lane);
    const Q12 x1 = load(k);
    const Q12 k1 = qutrit_apply(s0, x1);
    const Q12 x2 = axpy12(x1, hh, k1);
    const Q12 k2 = qutrit_apply(s1, x2);
    const Q12 x3 = axpy12(x1, hh, k2);
    const Q12 k3 = qutrit_apply(s1, x3);
    const Q12 x4 = axpy12(x1, h, k3);

    Q12 kb1, kb2, kb3, kb4;
    for (int i = 0; i < kQutritDim; ++i) {
      const auto u = static_cast<std::size_t>(i);
      kb1[u] = h6 * cb[u];
      kb2[u] = h3 * cb[u];
      kb3[u] = h3 * cb[u];
      kb4[u] = h6 * cb[u];
    }
    Q12 cn = cb;
    double ga2, gb2, ga1, gb1, ta, tb, ga0, gb0;

    Q12 t = qutrit_apply(s2, kb4);
    qutrit_sens(s2, kb4, x4, ga2, gb2);
    for (int i = 0; i < kQutritDim; ++i) {
      const auto u = static_cast<std::size_t>(i);
      cn[u] = cn[u] - t[u];
      kb3[u] = kb3[u] - h * t[u];
    }
    t = qutrit_apply(s1, kb3);
    qutrit_sens(s1, kb3, x3, ga1, gb1);
    for (int i = 0; i < kQutritDim; ++i) {
      const auto u = static_cast<std::size_t>(i);
      cn[u] = cn[u] - t[u];
      kb2[u] = kb2[u] - hh * t[u];
    }
    t = qutrit_apply(s1, kb2);
    qutrit_sens(s1, kb2, x2, ta, tb);
    ga1 = ga1 + ta;
    gb1 = gb1 + tb;
    for (int i = 0; i < kQutritDim; ++i) {
      const auto u = static_cast<std::size_t>(i);
      cn[u] = cn[u] - t[u];
      kb1[u] = kb1[u] - hh * t[u];
    }
    t = qutrit_apply(s0, kb1);
    qutrit_sens(s0, kb1, x1, ga0, gb0);
    for (int i = 0; i < kQutritDim; ++i) {
      const auto u = static_cast<std::size_t>(i);
      cn[u] = cn[u] - t[u];
    }
    cb = cn;

    chain_to_drive(p, 2 * k + 2, lane, ga2, gb2, r);
    chain_to_drive(p, 2 * k + 1, lane, ga1, gb1, r);
    chain_to_drive(p, 2 * k, lane, ga0, gb0, r);
  }
}

void prepare(const BlockProblem& p, BlockResult& r, Workspace& ws, int dim) {
  ws.states.resize(static_cast<std::size_t>((p.grid.n_steps + 1) * dim * kLanes));
  if (p.want_gradient) {
    const auto count = static_cast<std::size_t>(p.grid.stages() * kLanes);
    std::fill_n(r.grad_re, count, 0.0);
    std::fill_n(r.grad_im, count, 0.0);
  }
  r.final_state.fill(0.0);
}

}  // namespace

void qubit_block(const BlockProblem& problem, BlockResult& result, Workspace& ws) {
  prepare(problem, result, ws, kQubitDim);
  for (int lane = 0; lane < kLanes; ++lane) qubit_lane(problem, lane, result, ws.states.data());
}

void qutrit_block(const BlockProblem& problem, BlockResult& result, Workspace& ws) {
  prepare(problem, result, ws, kQutritDim);
  for (int lane = 0; lane < kLanes; ++lane) qutrit_lane(problem, lane, result, ws.states.data());
}

}  // namespace npulse::simd::scalar
