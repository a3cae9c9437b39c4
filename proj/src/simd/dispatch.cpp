#include <atomic>
#include <cstdlib>
#include <cstring>

#include "npulse/simd/kernels.hpp"

namespace npulse::simd {

namespace {

// -1: no override, otherwise static_cast<int>(Isa).
std::atomic<int> g_override{-1};

bool cpu_has_avx2() {
#if defined(__x86_64__) || defined(_M_X64)
  return __builtin_cpu_supports("avx2");
#else
  return false;
#endif
}

bool env_forces_scalar() {
  const char* v = std::getenv("NPULSE_SIMD");
  return v != nullptr && std::strcmp(v, "scalar") == 0;
}

}  // namespace

Isa detected_isa() {
  static const Isa isa = (avx2_compiled() && cpu_has_avx2()) ? Isa::Avx2 : Isa::Scalar;
  return isa;
}

Isa active_isa() {
  const int o = g_override.load(std::memory_order_relaxed);
  if (o >= 0) return static_cast<Isa>(o);
  static const bool forced = env_forces_scalar();
  return forced ? Isa::Scalar : detected_isa();
}

void set_isa_override(std::optional<Isa> isa) {
  if (isa && *isa == Isa::Avx2 && detected_isa() != Isa::Avx2) isa = Isa::Scalar;
  g_override.store(isa ? static_cast<int>(*isa) : -1, std::memory_order_relaxed);
}

std::string_view isa_name(Isa isa) { return isa == Isa::Avx2 ? "avx2" : "scalar"; }

void qubit_block(Isa isa, const BlockProblem& problem, BlockResult& result, Workspace& ws) {
  if (isa == Isa::Avx2) {
    avx2::qubit_block(problem, result, ws);
  } else {
    scalar::qubit_block(problem, result, ws);
  }
}

void qutrit_block(Isa isa, const BlockProblem& problem, BlockResult& result, Workspace& ws) {
  if (isa == Isa::Avx2) {
    avx2::qutrit_block(problem, result, ws);
  } else {
    scalar::qutrit_block(problem, result, ws);
  }
}

}  // namespace npulse::simd
