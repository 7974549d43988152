#include "doctest.h"
#include "rbmc/error.hpp"
#include "rbmc/synthesis.hpp"
#include "rbmc/tasks.hpp"
#include "unit/helpers.hpp"

using namespace rbmc;

TEST_CASE("integer encoding round trips") {
  CHECK(encode_int(6, 4) == Bits{0, 1, 1, 0});
  CHECK(decode_int(Bits{1, 0, 1}) == 5);
  CHECK_THROWS_AS(encode_int(16, 4), InvalidArgument);
  CHECK(encode_int(0, 0).empty());
  Rng rng(61);
  for (int i = 0; i < 10000; ++i) {
    const std::size_t n = 1 + rng.below(64);
    const std::uint64_t x = n == 64 ? rng.next() : rng.next() >> (64 - n);
    CHECK(decode_int(encode_int(x, n)) == x);
  }
}

TEST_CASE("operation names") {
  for (auto op : {Operation::Add, Operation::Subtract, Operation::ReverseCarry, Operation::Multiply,
                  Operation::Divide, Operation::Factor, Operation::Sat})
    CHECK(parse_operation(to_string(op)) == op);
  CHECK_THROWS_AS(parse_operation("modulo"), InvalidArgument);
}

TEST_CASE("task validation") {
  TaskSpec t;
  t.operation = Operation::Add;
  t.bit_width = 4;
  t.operands = {{"A", 3}};
  CHECK_THROWS_AS(validate(t), InvalidArgument);
  t.operands["B"] = 16;
  CHECK_THROWS_AS(validate(t), InvalidArgument);
  t.operands["B"] = 15;
  CHECK_NOTHROW(validate(t));
  t.bit_width = 0;
  CHECK_THROWS_AS(validate(t), InvalidArgument);
}

TEST_CASE("arithmetic predicates") {
  TaskSpec t;
  t.operation = Operation::Subtract;
  t.bit_width = 4;
  t.operands = {{"S", 3}, {"B", 9}, {"Cin", 0}};
  CHECK(is_correct(t, {{"A", 10}, {"Cout", 1}}));
  CHECK_FALSE(is_correct(t, {{"A", 10}, {"Cout", 0}}));
  t.operation = Operation::Factor;
  t.operands = {{"P", 35}};
  CHECK(is_correct(t, {{"A", 7}, {"B", 5}}));
  CHECK_FALSE(is_correct(t, {{"A", 35}, {"B", 1}}));
  t.expected = std::map<std::string, std::uint64_t>{{"A", 5}, {"B", 7}};
  CHECK(is_correct(t, {{"A", 7}, {"B", 5}}));
}

TEST_CASE("query layout for an adder") {
  const MergedModel a = build_adder(4, builtin_model("adder1"));
  TaskSpec t;
  t.operation = Operation::ReverseCarry;
  t.bit_width = 4;
  t.operands = {{"S", 5}, {"Cout", 1}, {"Cin", 0}};
  const auto q = make_query(a, t);
  CHECK(q.clamp.assignments.size() == 6);
  CHECK(q.observe.size() == 8);
  CHECK(decode_key(a, t, "10000100") == std::map<std::string, std::uint64_t>{{"A", 1}, {"B", 2}});
  CHECK_THROWS_AS(decode_key(a, t, "1"), DimensionError);
  t.bit_width = 8;
  CHECK_THROWS_AS(make_query(a, t), InvalidArgument);
}

TEST_CASE("subtraction on a 4-bit adder wraps modulo 16") {
  const MergedModel a = build_adder(4, builtin_model("adder1"));
  TaskSpec t;
  t.operation = Operation::Subtract;
  t.bit_width = 4;
  t.operands = {{"S", 3}, {"B", 9}, {"Cin", 0}};
  SolveSettings s;
  s.exact = true;
  const auto sol = solve(a, t, s);
  CHECK(sol.values.at("A") == 10);
  CHECK(sol.values.at("Cout") == 1);
  CHECK(sol.correct);
  t.no_borrow = true;
  t.operands = {{"S", 12}, {"B", 9}, {"Cin", 0}};
  const auto nb = solve(a, t, s);
  CHECK(nb.values.at("A") == 3);
  CHECK(nb.values.count("Cout") == 0);
}

TEST_CASE("sampled solve of a 4-bit addition and division") {
  const MergedModel a = build_adder(4, builtin_model("adder1"));
  TaskSpec t;
  t.operation = Operation::Add;
  t.bit_width = 4;
  t.operands = {{"A", 9}, {"B", 5}};
  SolveSettings s;
  s.chains = 4;
  s.samples = 4000;
  s.burn_in = 10000;
  const auto sol = solve(a, t, s);
  CHECK(sol.values.at("S") == 14);
  CHECK(sol.histogram.total == 4000);
  CHECK(sol.correct_mass > 0.5);
  s.exec = Exec::Serial;
  CHECK(solve(a, t, s).histogram.counts == sol.histogram.counts);

  const MergedModel m = builtin_model("mult2");
  TaskSpec d;
  d.operation = Operation::Divide;
  d.bit_width = 2;
  d.operands = {{"P", 6}, {"A", 2}};
  CHECK(solve(m, d, s).values.at("B") == 3);
}

TEST_CASE("factoring pools symmetric pairs and drops trivial ones") {
  const MergedModel m = builtin_model("mult4");
  TaskSpec t;
  t.operation = Operation::Factor;
  t.bit_width = 4;
  t.operands = {{"P", 35}};
  SolveSettings s;
  s.exact = true;
  const auto sol = solve(m, t, s);
  CHECK(sol.values.at("A") == 5);
  CHECK(sol.values.at("B") == 7);
  REQUIRE_FALSE(sol.factor_pairs.empty());
  CHECK(sol.factor_pairs.front().valid);
  CHECK(sol.correct_mass > 0.5);
}

TEST_CASE("sat task clamps terminals by name") {
  const MergedModel fa = compose(full_adder_netlist());
  TaskSpec t;
  t.operation = Operation::Sat;
  t.terminal_bits = {{"S[0]", 1}, {"Cout", 1}};
  SolveSettings s;
  s.exact = true;
  const auto sol = solve(fa, t, s);
  CHECK(sol.values.at("A[0]") == 1);
  CHECK(sol.values.at("B[0]") == 1);
  CHECK(sol.values.at("Cin") == 1);
  t.terminal_bits = {{"nope", 1}};
  CHECK_THROWS_AS(solve(fa, t, s), UnknownTerminal);
}

TEST_CASE("random tasks are valid and have a correct answer") {
  Rng rng(62);
  for (auto op : {Operation::Add, Operation::Subtract, Operation::ReverseCarry, Operation::Multiply,
                  Operation::Divide, Operation::Factor})
    for (int i = 0; i < 200; ++i) {
      const TaskSpec t = random_task(op, 5, rng);
      CHECK_NOTHROW(validate(t));
      std::map<std::string, std::uint64_t> answer;
      const auto& o = t.operands;
      switch (op) {
        case Operation::Add:
          answer = {{"S", (o.at("A") + o.at("B")) % 32}, {"Cout", (o.at("A") + o.at("B")) / 32}};
          break;
        case Operation::Subtract: {
          const std::uint64_t a = (o.at("S") + 32 - o.at("B")) % 32;
          answer = {{"A", a}, {"Cout", (a + o.at("B")) / 32}};
          break;
        }
        case Operation::ReverseCarry: {
          const std::uint64_t total = o.at("S") + 32 * o.at("Cout");
          answer = {{"A", total / 2}, {"B", total - total / 2}};
          break;
        }
        case Operation::Multiply:
          answer = {{"P", o.at("A") * o.at("B")}};
          break;
        case Operation::Divide:
          REQUIRE(o.at("A") > 0);
          answer = {{"B", o.at("P") / o.at("A")}};
          break;
        default: {
          std::uint64_t d = 2;
          while (d < 32 && (o.at("P") % d != 0 || o.at("P") / d >= 32)) ++d;
          REQUIRE(d < 32);
          answer = {{"A", d}, {"B", o.at("P") / d}};
        }
      }
      CHECK(is_correct(t, answer));
    }
  CHECK_THROWS_AS(random_task(Operation::Sat, 4, rng), InvalidArgument);
  CHECK_THROWS_AS(random_task(Operation::Factor, 1, rng), InvalidArgument);
}
