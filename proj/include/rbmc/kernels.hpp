#pragma once

#include <cstddef>
#include <vector>

#include "rbmc/clamp.hpp"
#include "rbmc/rbm.hpp"

namespace rbmc {

// Execution choice for the data-parallel kernels. The serial variants are
// straightforward reference implementations; the parallel ones split work
// into fixed-size blocks so results do not depend on the thread count.
enum class Exec { Serial, Parallel };

int max_threads();

namespace kernels {

// Free energy of every completion of `clamp`. Entry s corresponds to the
// visible vector with free unit clamp.free[k] set to bit k of s.
std::vector<double> free_energy_table_serial(const Rbm& rbm, const ResolvedClamp& clamp);
// Gray-code walk inside blocks of 2^12 states, OpenMP over blocks. Agrees with
// the serial table to rounding (incremental pre-activation updates).
std::vector<double> free_energy_table_parallel(const Rbm& rbm, const ResolvedClamp& clamp);

inline std::vector<double> free_energy_table(const Rbm& rbm, const ResolvedClamp& clamp,
                                             Exec exec) {
  return exec == Exec::Serial ? free_energy_table_serial(rbm, clamp)
                              : free_energy_table_parallel(rbm, clamp);
}

// Writes the visible vector for state index s into `out`.
void decode_state(const ResolvedClamp& clamp, std::size_t s, Bits& out);

}  // namespace kernels
}  // namespace rbmc
