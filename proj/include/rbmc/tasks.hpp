#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "rbmc/kernels.hpp"
#include "rbmc/merge.hpp"
#include "rbmc/rng.hpp"
#include "rbmc/sampler.hpp"

namespace rbmc {

// Little-endian: bit 0 is the least significant.
Bits encode_int(std::uint64_t x, std::size_t n_bits);
std::uint64_t decode_int(std::span<const std::uint8_t> bits);

enum class Operation { Add, Subtract, ReverseCarry, Multiply, Divide, Factor, Sat };

std::string to_string(Operation op);
Operation parse_operation(const std::string& name);

// Which operands each operation clamps; the rest of the interface is sampled.
//   add            A, B, Cin           -> S, Cout
//   subtract       S, B, Cin           -> A (Cout sampled, or clamped 0 with no_borrow)
//   reverse_carry  S, Cout, Cin        -> A, B
//   multiply       A, B                -> P
//   divide         P, A                -> B
//   factor         P                   -> A, B
//   sat            user terminal bits  -> every other exported terminal
struct TaskSpec {
  Operation operation = Operation::Add;
  std::size_t bit_width = 0;
  std::map<std::string, std::uint64_t> operands;     // "A", "B", "Cin", "S", "Cout", "P"
  std::map<std::string, std::uint8_t> terminal_bits;  // sat clamps by terminal name
  std::optional<std::map<std::string, std::uint64_t>> expected;
  bool no_borrow = false;  // subtract: clamp Cout = 0
};

// Throws when required operands are missing or do not fit the width.
void validate(const TaskSpec& task);

// A random instance of an arithmetic operation with Cin = 0. Subtract and
// reverse_carry clamp the S (and Cout) of a random addition; divide uses a
// nonzero divisor; factor multiplies two factors drawn from [2, 2^w).
TaskSpec random_task(Operation op, std::size_t bit_width, Rng& rng);

// Arithmetic predicate for a decoded assignment of the sampled operands.
bool is_correct(const TaskSpec& task, const std::map<std::string, std::uint64_t>& values);

struct SolveSettings {
  std::size_t chains = 16;
  std::size_t samples = 10000;  // pooled recorded samples
  std::size_t burn_in = 0;
  std::vector<double> betas;  // replica-exchange ladder, see ChainSettings
  std::uint64_t seed = 1;
  Exec exec = Exec::Parallel;
  // Use the exact conditional instead of sampling (small models only).
  bool exact = false;
  std::size_t top_k = 5;
};

struct FactorPair {
  std::uint64_t a;
  std::uint64_t b;
  std::uint64_t count;
  bool valid;  // a * b == P
};

struct Solution {
  std::map<std::string, std::uint64_t> values;  // decoded sampled operands at the mode
  std::string key;
  double frequency = 0.0;  // mode count / total (or exact probability)
  Histogram histogram;     // empty for exact solves
  std::vector<FactorPair> factor_pairs;  // factor only, ranked by count
  bool correct = false;
  double correct_mass = 0.0;  // share of probability or samples on correct answers
};

// Clamp and read-back terminals for a task on a model with the adder or
// multiplier interface. Model constants are always clamped.
InferenceQuery make_query(const MergedModel& model, const TaskSpec& task);

// Decodes a read-back key of make_query into operand values.
std::map<std::string, std::uint64_t> decode_key(const MergedModel& model, const TaskSpec& task,
                                                const std::string& key);

Solution solve(const MergedModel& model, const TaskSpec& task, const SolveSettings& settings);

}  // namespace rbmc
