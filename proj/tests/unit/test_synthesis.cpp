#include <algorithm>
#include <cmath>

#include "doctest.h"
#include "rbmc/error.hpp"
#include "rbmc/exact.hpp"
#include "rbmc/synthesis.hpp"
#include "rbmc/tasks.hpp"
#include "unit/helpers.hpp"

using namespace rbmc;

namespace {

double mass_on_rows(const Rbm& rbm, const TruthTable& table) {
  return mass_on(exact_visible_distribution(rbm), table.rows);
}

Solution exact_solve(const MergedModel& m, Operation op, std::size_t width,
                     std::map<std::string, std::uint64_t> operands) {
  TaskSpec t;
  t.operation = op;
  t.bit_width = width;
  t.operands = std::move(operands);
  SolveSettings s;
  s.exact = true;
  return solve(m, t, s);
}

}  // namespace

TEST_CASE("direct construction parameters and margin property") {
  TruthTable t{{"x", "y", "z"}, {{1, 0, 1}, {0, 0, 0}}};
  const double c = 3.5;
  const Rbm r = rbm_from_truth_table(t, c);
  CHECK(r.n_hidden() == 2);
  CHECK(r.weight(0, 0) == c);
  CHECK(r.weight(1, 0) == -c);
  CHECK(r.hidden_bias()[0] == c * (0.5 - 2.0));
  CHECK(r.hidden_bias()[1] == c * 0.5);
  for (double b : r.visible_bias()) CHECK(b == 0.0);
  for (std::uint64_t v = 0; v < 8; ++v) {
    const Bits vb = testing::bits_of(v, 3);
    const auto pre = hidden_preactivation(r, vb);
    for (std::size_t j = 0; j < 2; ++j) {
      int dist = 0;
      for (std::size_t i = 0; i < 3; ++i) dist += vb[i] != t.rows[j][i];
      CHECK(pre[j] == c * (0.5 - dist));
    }
  }
  CHECK_THROWS_AS(rbm_from_truth_table(TruthTable{{"x"}, {}}, c), InvalidArgument);
  CHECK_THROWS_AS(rbm_from_truth_table(t, 0.0), InvalidArgument);
  CHECK_THROWS_AS(rbm_from_truth_table(TruthTable{{"x"}, {{1}, {1}}}, c), InvalidArgument);
}

TEST_CASE("single-row table concentrates mass") {
  // p(1,1) = (1 + e^{c/2}) / ((1 + e^{c/2}) + 2 (1 + e^{-c/2}) + (1 + e^{-3c/2})), evaluated independently.
  const TruthTable t{{"a", "b"}, {{1, 1}}};
  CHECK(exact_visible_distribution(rbm_from_truth_table(t, 10.0)).probabilities[3] ==
        doctest::Approx(0.9802299893721297).epsilon(1e-12));
  CHECK(exact_visible_distribution(rbm_from_truth_table(t, 12.0)).probabilities[3] ==
        doctest::Approx(0.9926246720795292).epsilon(1e-12));
  CHECK(exact_visible_distribution(rbm_from_truth_table(t, 12.0)).probabilities[3] >= 0.99);
}

TEST_CASE("full table gives the uniform marginal") {
  TruthTable t{{"a", "b"}, {{0, 0}, {0, 1}, {1, 0}, {1, 1}}};
  for (double c : {0.5, 3.0, 20.0}) {
    const auto d = exact_visible_distribution(rbm_from_truth_table(t, c));
    for (double p : d.probabilities) CHECK(p == doctest::Approx(0.25).epsilon(1e-12));
  }
}

TEST_CASE("gate truth tables") {
  CHECK(gate_table(GateKind::Xor).rows == std::vector<Bits>{{0, 0, 0}, {0, 1, 1}, {1, 0, 1}, {1, 1, 0}});
  CHECK(gate_table(GateKind::Not).rows == std::vector<Bits>{{0, 1}, {1, 0}});
  CHECK(gate_table(GateKind::And).rows == std::vector<Bits>{{0, 0, 0}, {0, 1, 0}, {1, 0, 0}, {1, 1, 1}});
  CHECK(gate_table(GateKind::Nand).rows.back() == Bits{1, 1, 0});
  CHECK(gate_table(GateKind::Copy).rows == std::vector<Bits>{{0, 0}, {1, 1}});
  for (auto k : {GateKind::And, GateKind::Or, GateKind::Xor, GateKind::Nand, GateKind::Not, GateKind::Copy})
    CHECK(gate(k).n_hidden() == gate_table(k).rows.size());
}

TEST_CASE("AND gate at c=12 is close to its ideal distribution") {
  const Rbm g = gate(GateKind::And);
  const auto d = exact_visible_distribution(g);
  const auto ideal = uniform_over(d, gate_table(GateKind::And).rows);
  // Closed-form values from the product of (1 + e^{c (1/2 - d_H)}) factors.
  CHECK(kl_divergence(ideal, d) == doctest::Approx(0.002477217372700548).epsilon(1e-10));
  CHECK(mass_on(d, gate_table(GateKind::And).rows) == doctest::Approx(0.9975273768433652).epsilon(1e-12));
  const auto d14 = exact_visible_distribution(gate(GateKind::And, 14.0));
  CHECK(kl_divergence(uniform_over(d14, gate_table(GateKind::And).rows), d14) <= 1e-3);

  ClampMask m;
  m.assignments = {{"in1", 1}, {"in2", 1}};
  const auto cond = exact_visible_distribution(g, m);
  REQUIRE(cond.size() == 2);
  CHECK(cond.probabilities[1] >= 0.99);
}

TEST_CASE("mass on valid rows grows with sharpness") {
  for (auto k : {GateKind::And, GateKind::Or, GateKind::Xor, GateKind::Nand}) {
    double prev = 0.0;
    for (double c : {2.0, 4.0, 8.0, 16.0}) {
      const double m = mass_on_rows(gate(k, c), gate_table(k));
      CHECK(m >= prev);
      prev = m;
    }
  }
}

TEST_CASE("gate-level full adder") {
  const MergedModel fa = compose(full_adder_netlist());
  CHECK(fa.exports == std::vector<std::string>{"A[0]", "B[0]", "Cin", "S[0]", "Cout"});

  auto add = exact_solve(fa, Operation::Add, 1, {{"A", 1}, {"B", 0}, {"Cin", 1}});
  CHECK(add.values.at("S") == 0);
  CHECK(add.values.at("Cout") == 1);

  // S=1, Cout=1 forces A=B=Cin=1.
  ClampMask m;
  m.assignments = {{"S[0]", 1}, {"Cout", 1}};
  const auto d = exact_visible_distribution(fa.rbm, m);
  const auto inputs = marginalize(d, {fa.index_of("A[0]"), fa.index_of("B[0]"), fa.index_of("Cin")});
  CHECK(inputs.probabilities[7] >= 0.95);

  // Unclamped mass on the eight valid (A, B, Cin, S, Cout) rows.
  const auto full = exact_visible_distribution(fa.rbm);
  const auto outer = marginalize(full, {fa.index_of("A[0]"), fa.index_of("B[0]"), fa.index_of("Cin"),
                                        fa.index_of("S[0]"), fa.index_of("Cout")});
  double valid = 0.0;
  for (const auto& row : adder_table(1).rows) {
    std::size_t s = 0;
    for (std::size_t k = 0; k < row.size(); ++k) s |= std::size_t{row[k]} << k;
    valid += outer.probabilities[s];
  }
  CHECK(valid >= 0.97);
}

TEST_CASE("adder tables and builtins") {
  const auto t = adder_table(2);
  CHECK(t.rows.size() == 32);
  CHECK(t.names == std::vector<std::string>{"A[0]", "A[1]", "B[0]", "B[1]", "Cin", "S[0]", "S[1]", "Cout"});
  CHECK(multiplier_table(2).rows.size() == 16);
  CHECK(is_builtin("adder4"));
  CHECK(is_builtin("fa1"));
  CHECK(is_builtin("fa4"));
  const MergedModel fa2 = builtin_model("fa2");
  CHECK(fa2.exports.size() == 8);
  CHECK(adder_width(fa2) == 2);
  CHECK(fa2.rbm.n_hidden() == 2 * compose(full_adder_netlist()).rbm.n_hidden());
  CHECK_FALSE(is_builtin("adder"));
  CHECK_FALSE(is_builtin("adder0"));
  CHECK_THROWS_AS(builtin_model("nope"), InvalidArgument);
  CHECK_THROWS_AS(adder_table(40), TooLarge);
  CHECK(adder_width(builtin_model("adder3")) == 3);
  CHECK_THROWS_AS(adder_width(builtin_model("and")), InvalidArgument);
  CHECK(multiplier_width(builtin_model("mult2")) == 2);
}

TEST_CASE("cascaded adders have 3n+2 terminals") {
  const MergedModel a4 = build_adder(4, builtin_model("fa1"));
  CHECK(a4.exports.size() == 14);
  const MergedModel d4 = build_adder(4, builtin_model("adder1"));
  CHECK(d4.rbm.n_visible() == 14 + 3);
  CHECK(build_adder(16, builtin_model("adder4")).exports.size() == 50);
  CHECK_THROWS_AS(build_adder(6, builtin_model("adder4")), InvalidArgument);
}

TEST_CASE("4-bit adder arithmetic and inversion") {
  const MergedModel a4 = build_adder(4, builtin_model("adder1"));
  auto s = exact_solve(a4, Operation::Add, 4, {{"A", 9}, {"B", 5}, {"Cin", 0}});
  CHECK(s.values.at("S") == 14);
  CHECK(s.values.at("Cout") == 0);

  // S=0, Cout=1, Cin=0: the valid (A, B) pairs are exactly those summing to 16.
  ClampMask m;
  m.assignments = {{"Cout", 1}, {"Cin", 0}};
  for (std::size_t i = 0; i < 4; ++i) m.assignments[bit_name("S", i)] = 0;
  const auto d = exact_visible_distribution(a4.rbm, m);
  std::vector<std::size_t> ab;
  for (const char* bus : {"A", "B"})
    for (std::size_t i = 0; i < 4; ++i) ab.push_back(a4.index_of(bit_name(bus, i)));
  const auto pairs = marginalize(d, ab);
  double on_valid = 0.0;
  std::size_t valid_count = 0;
  for (std::size_t s2 = 0; s2 < pairs.size(); ++s2) {
    const std::size_t a = s2 & 15U, b = s2 >> 4;
    if (a + b == 16) {
      on_valid += pairs.probabilities[s2];
      ++valid_count;
    }
  }
  CHECK(valid_count == 15);
  CHECK(on_valid >= 0.9);
}

TEST_CASE("circuit soundness: every input of the 4-bit direct-unit adder") {
  const MergedModel a4 = build_adder(4, builtin_model("adder1"));
  for (std::uint64_t a = 0; a < 16; ++a)
    for (std::uint64_t b = 0; b < 16; ++b)
      for (std::uint64_t cin = 0; cin < 2; ++cin) {
        const auto s = exact_solve(a4, Operation::Add, 4, {{"A", a}, {"B", b}, {"Cin", cin}});
        CHECK(s.values.at("S") + (s.values.at("Cout") << 4) == a + b + cin);
      }
}

TEST_CASE("circuit soundness: every input of the 2-bit gate-level adder") {
  const MergedModel a2 = build_adder(2, builtin_model("fa1"));
  for (std::uint64_t a = 0; a < 4; ++a)
    for (std::uint64_t b = 0; b < 4; ++b)
      for (std::uint64_t cin = 0; cin < 2; ++cin)
        CHECK(exact_solve(a2, Operation::Add, 2, {{"A", a}, {"B", b}, {"Cin", cin}}).correct);
}

TEST_CASE("circuit soundness: every input of the 2-bit multiplier") {
  const MergedModel m2 = build_multiplier(2, builtin_model("mult1"), builtin_model("adder1"));
  CHECK(m2.exports.size() == 8);
  for (std::uint64_t a = 0; a < 4; ++a)
    for (std::uint64_t b = 0; b < 4; ++b) {
      const auto s = exact_solve(m2, Operation::Multiply, 2, {{"A", a}, {"B", b}});
      CHECK(s.values.at("P") == a * b);
    }
}

TEST_CASE("multiplier interface and errors") {
  const MergedModel m4 = build_multiplier(4, builtin_model("mult2"), builtin_model("adder2"));
  CHECK(m4.exports.size() == 16);
  CHECK(multiplier_width(m4) == 4);
  CHECK(m4.constants.at("r.Cin") == 0);
  CHECK_THROWS_AS(build_multiplier(3, builtin_model("mult1"), builtin_model("adder1")), InvalidArgument);
  CHECK_THROWS_AS(build_multiplier(4, builtin_model("mult1"), builtin_model("adder1")), InvalidArgument);
  CHECK_THROWS_AS(build_multiplier(4, builtin_model("mult2"), builtin_model("adder4")), InvalidArgument);
}

TEST_CASE("a single 4-bit multiplier unit factors 35") {
  const MergedModel m = builtin_model("mult4");
  ClampMask clamp;
  const Bits p = encode_int(35, 8);
  for (std::size_t i = 0; i < 8; ++i) clamp.assignments[bit_name("P", i)] = p[i];
  const auto d = exact_visible_distribution(m.rbm, clamp);
  std::vector<std::pair<std::size_t, std::size_t>> valid;
  for (std::size_t a = 0; a < 16; ++a)
    for (std::size_t b = 0; b < 16; ++b)
      if (a * b == 35) valid.push_back({a, b});
  CHECK(valid == std::vector<std::pair<std::size_t, std::size_t>>{{5, 7}, {7, 5}});
  // The two valid pairs are the two most probable input states.
  std::vector<std::size_t> order(d.size());
  for (std::size_t s = 0; s < order.size(); ++s) order[s] = s;
  std::sort(order.begin(), order.end(), [&](auto x, auto y) { return d.probabilities[x] > d.probabilities[y]; });
  CHECK(((order[0] == (5 | 7 << 4) && order[1] == (7 | 5 << 4)) || (order[0] == (7 | 5 << 4) && order[1] == (5 | 7 << 4))));
  const auto sol = exact_solve(m, Operation::Factor, 4, {{"P", 35}});
  CHECK(sol.correct);
  CHECK(std::min(sol.values.at("A"), sol.values.at("B")) == 5);
}
