// AVX2 kernels: four scenarios per __m256d, one register per state component.
// Mirrors kernels_scalar.cpp operation for operation (mul/add only, no FMA).

#include <algorithm>
#include <array>

#include "npulse/simd/kernels.hpp"

#if defined(__x86_64__) || defined(_M_X64)
#define NPULSE_HAVE_AVX2_KERNELS 1
#include <immintrin.h>
#else
#define NPULSE_HAVE_AVX2_KERNELS 0
#endif

#if NPULSE_HAVE_AVX2_KERNELS

#define NPULSE_AVX2 __attribute__((target("avx2"), always_inline)) inline
#define NPULSE_AVX2_FN __attribute__((target("avx2")))

namespace npulse::simd::avx2 {

namespace {

struct V {
  __m256d v;
};

NPULSE_AVX2 V operator+(V a, V b) { return {_mm256_add_pd(a.v, b.v)}; }
NPULSE_AVX2 V operator-(V a, V b) { return {_mm256_sub_pd(a.v, b.v)}; }
NPULSE_AVX2 V operator*(V a, V b) { return {_mm256_mul_pd(a.v, b.v)}; }
NPULSE_AVX2 V operator-(V a) { return {_mm256_xor_pd(a.v, _mm256_set1_pd(-0.0))}; }
NPULSE_AVX2 V bcast(double x) { return {_mm256_set1_pd(x)}; }
NPULSE_AVX2 V load(const double* p) { return {_mm256_loadu_pd(p)}; }
NPULSE_AVX2 void store(double* p, V x) { _mm256_storeu_pd(p, x.v); }
NPULSE_AVX2 V zero() { return {_mm256_setzero_pd()}; }

constexpr double kTarget = 0.70710678118654752440;

struct Stage {
  V a, b;
  V pr, pi;
};

NPULSE_AVX2 Stage lane_stage(const BlockProblem& p, int s) {
  const V nr = bcast(p.drive_re[s]);
  const V ni = bcast(p.drive_im[s]);
  const V wr = load(p.weight_re + s * kLanes);
  const V wi = load(p.weight_im + s * kLanes);
  Stage st{nr * wr - ni * wi, nr * wi + ni * wr, zero(), zero()};
  if (p.coupling_re) {
    st.pr = bcast(p.coupling_re[s]);
    st.pi = bcast(p.coupling_im[s]);
  }
  return st;
}

NPULSE_AVX2 void chain_to_drive(const BlockProblem& p, int s, V ga, V gb, BlockResult& r) {
  const V wr = load(p.weight_re + s * kLanes);
  const V wi = load(p.weight_im + s * kLanes);
  double* gr = r.grad_re + s * kLanes;
  double* gi = r.grad_im + s * kLanes;
  store(gr, load(gr) + (ga * wr + gb * wi));
  store(gi, load(gi) + (gb * wr - ga * wi));
}

// ---------------------------------------------------------------- qubit

using Q4 = std::array<V, 4>;

NPULSE_AVX2 Q4 qubit_apply(const Stage& st, const Q4& x) {
  const V half = bcast(0.5);
  const V a = st.a, b = st.b;
  return {-(half * (a * x[1] + b * x[2])), half * (a * x[0] + b * x[3]), half * (b * x[0] - a * x[3]),
          half * (a * x[2] - b * x[1])};
}

NPULSE_AVX2 void qubit_sens(const Q4& kb, const Q4& x, V& ga, V& gb) {
  const V half = bcast(0.5);
  ga = half * (((kb[1] * x[0] - kb[0] * x[1]) + kb[3] * x[2]) - kb[2] * x[3]);
  gb = half * (((kb[2] * x[0] - kb[0] * x[2]) + kb[1] * x[3]) - kb[3] * x[1]);
}

NPULSE_AVX2 Q4 axpy(const Q4& c, V s, const Q4& k) {
  return {c[0] + s * k[0], c[1] + s * k[1], c[2] + s * k[2], c[3] + s * k[3]};
}

NPULSE_AVX2_FN void qubit_impl(const BlockProblem& p, BlockResult& r, double* store_base) {
  const int n = p.grid.n_steps;
  const V h = bcast(p.grid.h);
  const V hh = bcast(0.5 * p.grid.h);
  const V h6 = bcast(p.grid.h / 6.0);
  const V h3 = bcast(p.grid.h / 3.0);
  const V two = bcast(2.0);

  Q4 c = {bcast(1.0), zero(), zero(), zero()};
  for (int i = 0; i < 4; ++i) store(store_base + i * kLanes, c[static_cast<std::size_t>(i)]);
  for (int k = 0; k < n; ++k) {
    const Stage s0 = lane_stage(p, 2 * k);
    const Stage s1 = lane_stage(p, 2 * k + 1);
    const Stage s2 = lane_stage(p, 2 * k + 2);
    const Q4 k1 = qubit_apply(s0, c);
    const Q4 k2 = qubit_apply(s1, axpy(c, hh, k1));
    const Q4 k3 = qubit_apply(s1, axpy(c, hh, k2));
    const Q4 k4 = qubit_apply(s2, axpy(c, h, k3));
    double* dst = store_base + (k + 1) * kQubitDim * kLanes;
    for (int i = 0; i < 4; ++i) {
      const auto u = static_cast<std::size_t>(i);
      c[u] = c[u] + h6 * (((k1[u] + two * k2[u]) + two * k3[u]) + k4[u]);
      store(dst + i * kLanes, c[u]);
    }
  }

  const V d0 = c[0] - bcast(kTarget);
  store(r.loss.data(), c[3] * c[3] + d0 * d0);
  for (int i = 0; i < 4; ++i) store(r.final_state.data() + i * kLanes, c[static_cast<std::size_t>(i)]);
  if (!p.want_gradient) return;

  const V scale = load(p.loss_scale.data());
  Q4 cb = {(two * d0) * scale, zero(), zero(), (two * c[3]) * scale};
  for (int k = n - 1; k >= 0; --k) {
    const Stage s0 = lane_stage(p, 2 * k);
    const Stage s1 = lane_stage(p, 2 * k + 1);
    const Stage s2 = lane_stage(p, 2 * k + 2);
    const double* src = store_base + k * kQubitDim * kLanes;
    const Q4 x1 = {load(src), load(src + kLanes), load(src + 2 * kLanes), load(src + 3 * kLanes)};
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
    V ga2, gb2, ga1, gb1, ta, tb, ga0, gb0;

    Q4 t = qubit_apply(s2, kb4);
    qubit_sens(kb4, x4, ga2, gb2);
    for (int i = 0; i < 4; ++i) {
      const auto u = static_cast<std::size_t>(i);
      cn[u] = cn[u] - t[u];
      kb3[u] = kb3[u] - h * t[u];
    }
    t = qubit_apply(s1, kb3);
    qubit_sens(kb3, x3, ga1, gb1);
    for (int i = 0; i < 4; ++i) {
      const auto u = static_cast<std::size_t>(i);
      cn[u] = cn[u] - t[u];
      kb2[u] = kb2[u] - hh * t[u];
    }
    t = qubit_apply(s1, kb2);
    qubit_sens(kb2, x2, ta, tb);
    ga1 = ga1 + ta;
    gb1 = gb1 + tb;
    for (int i = 0; i < 4; ++i) {
      const auto u = static_cast<std::size_t>(i);
      cn[u] = cn[u] - t[u];
      kb1[u] = kb1[u] - hh * t[u];
    }
    t = qubit_apply(s0, kb1);
    qubit_sens(kb1, x1, ga0, gb0);
    for (int i = 0; i < 4; ++i) {
      const auto u = static_cast<std::size_t>(i);
      cn[u] = cn[u] - t[u];
    }
    cb = cn;

    chain_to_drive(p, 2 * k + 2, ga2, gb2, r);
    chain_to_drive(p, 2 * k + 1, ga1, gb1, r);
    chain_to_drive(p, 2 * k, ga0, gb0, r);
  }
}

// ---------------------------------------------------------------- qutrit

using Q12 = std::array<V, kQutritDim>;

NPULSE_AVX2 Q12 qutrit_apply(const Stage& st, const Q12& x) {
  const V half = bcast(0.5);
  const V a = st.a, b = st.b;
  const V qr = a * st.pr - b * st.pi;
  const V qi = a * st.pi + b * st.pr;
  Q12 k;
  for (int col = 0; col < 2; ++col) {
    const V* v = x.data() + col * 6;
    V* o = k.data() + col * 6;
    const V x0r = v[0], x0i = v[1], x1r = v[2], x1i = v[3], x2r = v[4], x2i = v[5];
    const V y0r = half * (a * x1r + b * x1i);
    const V y0i = half * (a * x1i - b * x1r);
    const V y1r = half * ((a * x0r - b * x0i) + (qr * x2r + qi * x2i));
    const V y1i = half * ((a * x0i + b * x0r) + (qr * x2i - qi * x2r));
    const V y2r = half * (qr * x1r - qi * x1i);
    const V y2i = half * (qr * x1i + qi * x1r);
    o[0] = y0i;
    o[1] = -y0r;
    o[2] = y1i;
    o[3] = -y1r;
    o[4] = y2i;
    o[5] = -y2r;
  }
  return k;
}

NPULSE_AVX2 void qutrit_sens(const Stage& st, const Q12& kb, const Q12& x, V& ga, V& gb) {
  const V pr = st.pr, pi = st.pi;
  V sum_im = zero();
  V sum_re = zero();
  for (int col = 0; col < 2; ++col) {
    const V* v = x.data() + col * 6;
    const V* w = kb.data() + col * 6;
    const V z0r = w[0], z0i = -w[1], z1r = w[2], z1i = -w[3], z2r = w[4], z2i = -w[5];
    const V x0r = v[0], x0i = v[1], x1r = v[2], x1i = v[3], x2r = v[4], x2i = v[5];
    const V ar = z0r * x1r - z0i * x1i, ai = z0r * x1i + z0i * x1r;
    const V br = z1r * x0r - z1i * x0i, bi = z1r * x0i + z1i * x0r;
    const V er = pr * x2r + pi * x2i, ei = pr * x2i - pi * x2r;
    const V cr = z1r * er - z1i * ei, ci = z1r * ei + z1i * er;
    const V fr = pr * x1r - pi * x1i, fi = pr * x1i + pi * x1r;
    const V dr = z2r * fr - z2i * fi, di = z2r * fi + z2i * fr;
    sum_im = sum_im + (((ai + bi) + ci) + di);
    sum_re = sum_re + (((br - ar) - cr) + dr);
  }
  const V half = bcast(0.5);
  ga = half * sum_im;
  gb = half * sum_re;
}

NPULSE_AVX2 Q12 axpy12(const Q12& c, V s, const Q12& k) {
  Q12 o;
  for (int i = 0; i < kQutritDim; ++i) o[static_cast<std::size_t>(i)] = c[static_cast<std::size_t>(i)] + s * k[static_cast<std::size_t>(i)];
  return o;
}

NPULSE_AVX2_FN void qutrit_impl(const BlockProblem& p, BlockResult& r, double* store_base) {
  const int n = p.grid.n_steps;
  const V h = bcast(p.grid.h);
  const V hh = bcast(0.5 * p.grid.h);
  const V h6 = bcast(p.grid.h / 6.0);
  const V h3 = bcast(p.grid.h / 3.0);
  const V two = bcast(2.0);
  const V half = bcast(0.5);

  Q12 c;
  for (auto& v : c) v = zero();
  c[0] = bcast(1.0);
  c[8] = bcast(1.0);
  for (int i = 0; i < kQutritDim; ++i) store(store_base + i * kLanes, c[static_cast<std::size_t>(i)]);
  for (int k = 0; k < n; ++k) {
    const Stage s0 = lane_stage(p, 2 * k);
    const Stage s1 = lane_stage(p, 2 * k + 1);
    const Stage s2 = lane_stage(p, 2 * k + 2);
    const Q12 k1 = qutrit_apply(s0, c);
    const Q12 k2 = qutrit_apply(s1, axpy12(c, hh, k1));
    const Q12 k3 = qutrit_apply(s1, axpy12(c, hh, k2));
    const Q12 k4 = qutrit_apply(s2, axpy12(c, h, k3));
    double* dst = store_base + (k + 1) * kQutritDim * kLanes;
    for (int i = 0; i < kQutritDim; ++i) {
      const auto u = static_cast<std::size_t>(i);
      c[u] = c[u] + h6 * (((k1[u] + two * k2[u]) + two * k3[u]) + k4[u]);
      store(dst + i * kLanes, c[u]);
    }
  }

  const V u00r = c[0], u00i = c[1], u10r = c[2], u10i = c[3], u20r = c[4], u20i = c[5];
  const V u01r = c[6], u01i = c[7], u11r = c[8], u11i = c[9], u21r = c[10], u21i = c[11];
  const V c0 = half * (u00r + u11r);
  const V cz = half * (u11i - u00i);
  const V cx = -(half * (u01i + u10i));
  const V cy = half * (u10r - u01r);
  const V d0 = c0 - bcast(kTarget);
  const V pl = (cx * cx + cy * cy) - half;
  const V leak = ((u20r * u20r + u20i * u20i) + u21r * u21r) + u21i * u21i;
  const V lwt = bcast(p.leak_weight);
  store(r.loss.data(), ((d0 * d0 + cz * cz) + pl * pl) + lwt * leak);
  for (int i = 0; i < kQutritDim; ++i) store(r.final_state.data() + i * kLanes, c[static_cast<std::size_t>(i)]);
  if (!p.want_gradient) return;

  const V scale = load(p.loss_scale.data());
  const V four = bcast(4.0);
  const V gc0 = (two * d0) * scale;
  const V gcz = (two * cz) * scale;
  const V gcx = ((four * pl) * cx) * scale;
  const V gcy = ((four * pl) * cy) * scale;
  const V lw = (two * lwt) * scale;
  Q12 cb;
  cb[0] = half * gc0;
  cb[1] = -(half * gcz);
  cb[2] = half * gcy;
  cb[3] = -(half * gcx);
  cb[4] = lw * u20r;
  cb[5] = lw * u20i;
  cb[6] = -(half * gcy);
  cb[7] = -(half * gcx);
  cb[8] = half * gc0;
  cb[9] = half * gcz;
  cb[10] = lw * u21r;
  cb[11] = lw * u21i;

  for (int k = n - 1; k >= 0; --k) {
    const Stage s0 = lane_stage(p, 2 * k);
    const Stage s1 = lane_stage(p, 2 * k + 1);
    const Stage s2 = lane_stage(p, 2 * k + 2);
    const double* src = store_base + k * kQutritDim * kLanes;
    Q12 x1;
    for (int i = 0; i < kQutritDim; ++i) x1[static_cast<std::size_t>(i)] = load(src + i * kLanes);
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
    V ga2, gb2, ga1, gb1, ta, tb, ga0, gb0;

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

    chain_to_drive(p, 2 * k + 2, ga2, gb2, r);
    chain_to_drive(p, 2 * k + 1, ga1, gb1, r);
    chain_to_drive(p, 2 * k, ga0, gb0, r);
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
  qubit_impl(problem, result, ws.states.data());
}

void qutrit_block(const BlockProblem& problem, BlockResult& result, Workspace& ws) {
  prepare(problem, result, ws, kQutritDim);
  qutrit_impl(problem, result, ws.states.data());
}

}  // namespace npulse::simd::avx2

#else

#include "npulse/error.hpp"

namespace npulse::simd::avx2 {

void qubit_block(const BlockProblem&, BlockResult&, Workspace&) {
  throw Error("AVX2 kernels are not available on this architecture");
}
void qutrit_block(const BlockProblem&, BlockResult&, Workspace&) {
  throw Error("AVX2 kernels are not available on this architecture");
}

}  // namespace npulse::simd::avx2

#endif

namespace npulse::simd {
bool avx2_compiled() { return NPULSE_HAVE_AVX2_KERNELS != 0; }
}  // namespace npulse::simd
