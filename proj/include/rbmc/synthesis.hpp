#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "rbmc/merge.hpp"
#include "rbmc/rbm.hpp"

namespace rbmc {

inline constexpr double kDefaultSharpness = 12.0;

// The valid assignments of a boolean relation over named units.
struct TruthTable {
  std::vector<std::string> names;
  std::vector<Bits> rows;

  // Throws when rows are empty, duplicated or of the wrong length.
  void validate() const;
};

// One hidden unit per row x: weight column c * (2x - 1) and hidden bias
// c * (1/2 - |x|), visible biases zero. The hidden pre-activation at v is then
// c * (1/2 - hamming(v, x)), so unit j fires with margin c/2 exactly on row j.
Rbm rbm_from_truth_table(const TruthTable& table, double sharpness = kDefaultSharpness);

enum class GateKind { And, Or, Xor, Nand, Not, Copy };

// Terminals in1, in2, out (NOT and COPY have in1, out).
TruthTable gate_table(GateKind kind);
Rbm gate(GateKind kind, double sharpness = kDefaultSharpness);

std::string bit_name(const std::string& bus, std::size_t i);  // "A[3]"

// n-bit ripple adder relation over A[0..n), B[0..n), Cin, S[0..n), Cout with
// A + B + Cin = S + 2^n Cout. Little-endian buses.
TruthTable adder_table(std::size_t n_bits);
// n-bit unsigned multiplier relation over A[0..n), B[0..n), P[0..2n).
TruthTable multiplier_table(std::size_t n_bits);

// XOR(A,B)->t1, XOR(t1,Cin)->S, AND(A,B)->t2, AND(t1,Cin)->t3, OR(t2,t3)->Cout.
Netlist full_adder_netlist(double sharpness = kDefaultSharpness);

// Chains n_bits / w copies of a w-bit adder, Cout of slice i tied to Cin of
// slice i+1. Exports A, B, S buses of n_bits plus Cin and Cout.
MergedModel build_adder(std::size_t n_bits, const MergedModel& base);

// Width of an adder-shaped model (number of A[i] exports); throws if the
// interface is not A/B/S/Cin/Cout.
std::size_t adder_width(const MergedModel& model);
// Width of a multiplier-shaped model (A/B buses of w, P bus of 2w).
std::size_t multiplier_width(const MergedModel& model);

// Splits both operands into high and low halves, multiplies the four halves
// with copies of `base_mult` (width n/2), adds the cross products with an
// n-bit adder and folds the result into the concatenated HH:LL product with a
// 3n/2-bit adder. Constant zero inputs are clamped units. Exports A[0..n),
// B[0..n), P[0..2n).
MergedModel build_multiplier(std::size_t n_bits, const MergedModel& base_mult,
                             const MergedModel& base_adder);

// Resolves builtin component names: and, or, xor, nand, not, copy, fa1
// (gate-built full adder), fa<n> (n chained copies of fa1), adder<n> and
// mult<n> (directly calculated truth-table units). Throws InvalidArgument on
// unknown names.
MergedModel builtin_model(const std::string& name, double sharpness = kDefaultSharpness);
bool is_builtin(const std::string& name);

}  // namespace rbmc
