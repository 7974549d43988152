#include "rbmc/kernels.hpp"

#include <algorithm>
#include <bit>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace rbmc {

int max_threads() {
#ifdef _OPENMP
  return omp_get_max_threads();
#else
  return 1;
#endif
}

namespace kernels {

namespace {

constexpr std::size_t kBlockBits = 12;

double free_energy_from(const Rbm& rbm, std::span<const std::uint8_t> v,
                        std::span<const double> pre) {
  double f = 0.0;
  for (std::size_t i = 0; i < v.size(); ++i)
    if (v[i]) f -= rbm.visible_bias()[i];
  for (double x : pre) f -= softplus(x);
  return f;
}

}  // namespace

void decode_state(const ResolvedClamp& clamp, std::size_t s, Bits& out) {
  out = clamp.base;
  for (std::size_t k = 0; k < clamp.free.size(); ++k) out[clamp.free[k]] = (s >> k) & 1U;
}

std::vector<double> free_energy_table_serial(const Rbm& rbm, const ResolvedClamp& clamp) {
  const std::size_t n = std::size_t{1} << clamp.free.size();
  std::vector<double> table(n);
  Bits v;
  for (std::size_t s = 0; s < n; ++s) {
    decode_state(clamp, s, v);
    table[s] = free_energy(rbm, v);
  }
  return table;
}

std::vector<double> free_energy_table_parallel(const Rbm& rbm, const ResolvedClamp& clamp) {
  const std::size_t k = clamp.free.size();
  const std::size_t n = std::size_t{1} << k;
  const std::size_t block_bits = std::min(k, kBlockBits);
  const std::size_t block = std::size_t{1} << block_bits;
  const std::size_t n_blocks = n / block;
  const std::size_t nh = rbm.n_hidden();
  std::vector<double> table(n);

#pragma omp parallel for schedule(dynamic)
  for (std::ptrdiff_t b = 0; b < static_cast<std::ptrdiff_t>(n_blocks); ++b) {
    const std::size_t first = static_cast<std::size_t>(b) * block;
    // Gray codes of an aligned block stay inside the block.
    std::size_t state = first ^ (first >> 1);
    Bits v;
    decode_state(clamp, state, v);
    std::vector<double> pre = hidden_preactivation(rbm, v);
    table[state] = free_energy_from(rbm, v, pre);
    for (std::size_t t = first + 1; t < first + block; ++t) {
      const std::size_t unit = clamp.free[static_cast<std::size_t>(std::countr_zero(t))];
      const auto w = rbm.row(unit);
      v[unit] ^= 1U;
      if (v[unit])
        for (std::size_t j = 0; j < nh; ++j) pre[j] += w[j];
      else
        for (std::size_t j = 0; j < nh; ++j) pre[j] -= w[j];
      state = t ^ (t >> 1);
      table[state] = free_energy_from(rbm, v, pre);
    }
  }
  return table;
}

}  // namespace kernels
}  // namespace rbmc
