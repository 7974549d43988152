#include "rbmc/synthesis.hpp"

#include <charconv>
#include <set>

#include "rbmc/error.hpp"

namespace rbmc {

namespace {

constexpr std::size_t kMaxTableRows = std::size_t{1} << 20;

void push_int(Bits& row, std::uint64_t x, std::size_t n_bits) {
  for (std::size_t i = 0; i < n_bits; ++i) row.push_back(static_cast<std::uint8_t>((x >> i) & 1U));
}

std::vector<std::string> bus(const std::string& name, std::size_t n) {
  std::vector<std::string> out;
  for (std::size_t i = 0; i < n; ++i) out.push_back(bit_name(name, i));
  return out;
}

bool has_bus(const MergedModel& m, const std::string& name, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i)
    if (!m.rbm.find(bit_name(name, i))) return false;
  return true;
}

std::size_t bus_width(const MergedModel& m, const std::string& name) {
  std::size_t n = 0;
  while (m.rbm.find(bit_name(name, n))) ++n;
  return n;
}

}  // namespace

void TruthTable::validate() const {
  if (rows.empty()) throw InvalidArgument("truth table has no rows");
  if (names.empty()) throw InvalidArgument("truth table has no units");
  std::set<Bits> seen;
  for (const auto& r : rows) {
    if (r.size() != names.size()) throw DimensionError("truth table row has the wrong length");
    for (auto b : r)
      if (b > 1) throw InvalidArgument("truth table entries must be 0 or 1");
    if (!seen.insert(r).second) throw InvalidArgument("truth table rows must be distinct");
  }
}

Rbm rbm_from_truth_table(const TruthTable& table, double sharpness) {
  table.validate();
  if (!(sharpness > 0.0)) throw InvalidArgument("sharpness must be positive");
  const std::size_t nv = table.names.size();
  const std::size_t nh = table.rows.size();
  std::vector<double> w(nv * nh);
  std::vector<double> hb(nh);
  for (std::size_t j = 0; j < nh; ++j) {
    std::size_t ones = 0;
    for (std::size_t i = 0; i < nv; ++i) {
      const auto x = table.rows[j][i];
      ones += x;
      w[i * nh + j] = x ? sharpness : -sharpness;
    }
    hb[j] = sharpness * (0.5 - static_cast<double>(ones));
  }
  return Rbm(table.names, std::vector<double>(nv, 0.0), std::move(hb), std::move(w));
}

TruthTable gate_table(GateKind kind) {
  TruthTable t;
  if (kind == GateKind::Not || kind == GateKind::Copy) {
    t.names = {"in1", "out"};
    for (std::uint8_t a = 0; a < 2; ++a)
      t.rows.push_back({a, static_cast<std::uint8_t>(kind == GateKind::Not ? !a : a)});
    return t;
  }
  t.names = {"in1", "in2", "out"};
  for (std::uint8_t a = 0; a < 2; ++a)
    for (std::uint8_t b = 0; b < 2; ++b) {
      std::uint8_t out = 0;
      switch (kind) {
        case GateKind::And: out = a & b; break;
        case GateKind::Or: out = a | b; break;
        case GateKind::Xor: out = a ^ b; break;
        case GateKind::Nand: out = !(a & b); break;
        default: break;
      }
      t.rows.push_back({a, b, out});
    }
  return t;
}

Rbm gate(GateKind kind, double sharpness) { return rbm_from_truth_table(gate_table(kind), sharpness); }

std::string bit_name(const std::string& bus_name, std::size_t i) {
  return bus_name + "[" + std::to_string(i) + "]";
}

TruthTable adder_table(std::size_t n_bits) {
  if (n_bits == 0) throw InvalidArgument("adder width must be at least 1");
  if (2 * n_bits + 1 >= 64 || (std::size_t{1} << (2 * n_bits + 1)) > kMaxTableRows)
    throw TooLarge("adder truth table with " + std::to_string(n_bits) + " bits is too large");
  TruthTable t;
  for (const auto& n : bus("A", n_bits)) t.names.push_back(n);
  for (const auto& n : bus("B", n_bits)) t.names.push_back(n);
  t.names.push_back("Cin");
  for (const auto& n : bus("S", n_bits)) t.names.push_back(n);
  t.names.push_back("Cout");
  const std::uint64_t span = std::uint64_t{1} << n_bits;
  for (std::uint64_t a = 0; a < span; ++a)
    for (std::uint64_t b = 0; b < span; ++b)
      for (std::uint64_t cin = 0; cin < 2; ++cin) {
        const std::uint64_t sum = a + b + cin;
        Bits row;
        push_int(row, a, n_bits);
        push_int(row, b, n_bits);
        row.push_back(static_cast<std::uint8_t>(cin));
        push_int(row, sum, n_bits);
        row.push_back(static_cast<std::uint8_t>(sum >> n_bits));
        t.rows.push_back(std::move(row));
      }
  return t;
}

TruthTable multiplier_table(std::size_t n_bits) {
  if (n_bits == 0) throw InvalidArgument("multiplier width must be at least 1");
  if (2 * n_bits >= 64 || (std::size_t{1} << (2 * n_bits)) > kMaxTableRows)
    throw TooLarge("multiplier truth table with " + std::to_string(n_bits) + " bits is too large");
  TruthTable t;
  for (const auto& n : bus("A", n_bits)) t.names.push_back(n);
  for (const auto& n : bus("B", n_bits)) t.names.push_back(n);
  for (const auto& n : bus("P", 2 * n_bits)) t.names.push_back(n);
  const std::uint64_t span = std::uint64_t{1} << n_bits;
  for (std::uint64_t a = 0; a < span; ++a)
    for (std::uint64_t b = 0; b < span; ++b) {
      Bits row;
      push_int(row, a, n_bits);
      push_int(row, b, n_bits);
      push_int(row, a * b, 2 * n_bits);
      t.rows.push_back(std::move(row));
    }
  return t;
}

Netlist full_adder_netlist(double sharpness) {
  Netlist n;
  n.components = {{"x1", gate(GateKind::Xor, sharpness)},
                  {"x2", gate(GateKind::Xor, sharpness)},
                  {"a1", gate(GateKind::And, sharpness)},
                  {"a2", gate(GateKind::And, sharpness)},
                  {"o1", gate(GateKind::Or, sharpness)}};
  n.connections = {
      {"x1.in1", "a1.in1"},  // A
      {"x1.in2", "a1.in2"},  // B
      {"x1.out", "x2.in1"},  // t1
      {"x1.out", "a2.in1"},
      {"x2.in2", "a2.in2"},  // Cin
      {"a1.out", "o1.in1"},  // t2
      {"a2.out", "o1.in2"},  // t3
  };
  // 1-bit bus names so the result plugs into build_adder.
  n.exports = {{"x1.in1", "A[0]"}, {"x1.in2", "B[0]"}, {"x2.in2", "Cin"}, {"x2.out", "S[0]"},
               {"o1.out", "Cout"}};
  return n;
}

std::size_t adder_width(const MergedModel& model) {
  const std::size_t w = bus_width(model, "A");
  if (w == 0 || !has_bus(model, "B", w) || !has_bus(model, "S", w) || !model.rbm.find("Cin") ||
      !model.rbm.find("Cout"))
    throw InvalidArgument("model does not expose an adder interface (A, B, S, Cin, Cout)");
  return w;
}

std::size_t multiplier_width(const MergedModel& model) {
  const std::size_t w = bus_width(model, "A");
  if (w == 0 || !has_bus(model, "B", w) || !has_bus(model, "P", 2 * w))
    throw InvalidArgument("model does not expose a multiplier interface (A, B, P)");
  return w;
}

MergedModel build_adder(std::size_t n_bits, const MergedModel& base) {
  const std::size_t w = adder_width(base);
  if (n_bits == 0 || n_bits % w != 0)
    throw InvalidArgument("adder width " + std::to_string(n_bits) +
                          " is not a multiple of the base width " + std::to_string(w));
  const std::size_t copies = n_bits / w;
  Netlist net;
  for (std::size_t u = 0; u < copies; ++u) {
    const std::string id = "u" + std::to_string(u);
    net.components.push_back({id, base});
    for (std::size_t i = 0; i < w; ++i) {
      net.exports[id + "." + bit_name("A", i)] = bit_name("A", u * w + i);
      net.exports[id + "." + bit_name("B", i)] = bit_name("B", u * w + i);
      net.exports[id + "." + bit_name("S", i)] = bit_name("S", u * w + i);
    }
    if (u + 1 < copies) net.connections.emplace_back(id + ".Cout", "u" + std::to_string(u + 1) + ".Cin");
  }
  net.exports["u0.Cin"] = "Cin";
  net.exports["u" + std::to_string(copies - 1) + ".Cout"] = "Cout";
  return compose(net);
}

MergedModel build_multiplier(std::size_t n_bits, const MergedModel& base_mult,
                             const MergedModel& base_adder) {
  if (n_bits < 2 || n_bits % 2 != 0) throw InvalidArgument("multiplier width must be even");
  const std::size_t h = n_bits / 2;
  if (multiplier_width(base_mult) != h)
    throw InvalidArgument("base multiplier width must be half of " + std::to_string(n_bits));
  const std::size_t wa = adder_width(base_adder);
  if ((2 * h) % wa != 0 || (3 * h) % wa != 0)
    throw InvalidArgument("base adder width " + std::to_string(wa) + " must divide " +
                          std::to_string(2 * h) + " and " + std::to_string(3 * h));

  Netlist net;
  // m_xy multiplies half x of A with half y of B (l = low, h = high).
  const struct {
    const char* id;
    std::size_t a_off, b_off;
  } parts[] = {{"mll", 0, 0}, {"mlh", 0, h}, {"mhl", h, 0}, {"mhh", h, h}};
  std::map<std::string, std::string> first_user;  // public operand bit -> first terminal
  for (const auto& p : parts) {
    net.components.push_back({p.id, base_mult});
    for (std::size_t i = 0; i < h; ++i) {
      const std::pair<std::string, std::string> ops[] = {
          {bit_name("A", p.a_off + i), std::string(p.id) + "." + bit_name("A", i)},
          {bit_name("B", p.b_off + i), std::string(p.id) + "." + bit_name("B", i)}};
      for (const auto& [pub, term] : ops) {
        auto [it, inserted] = first_user.emplace(pub, term);
        if (inserted)
          net.exports[term] = pub;
        else
          net.connections.emplace_back(it->second, term);
      }
    }
  }

  // q = mlh + mhl, n bits wide, carry in fixed at 0.
  net.components.push_back({"q", build_adder(2 * h, base_adder)});
  for (std::size_t i = 0; i < 2 * h; ++i) {
    net.connections.emplace_back("q." + bit_name("A", i), "mlh." + bit_name("P", i));
    net.connections.emplace_back("q." + bit_name("B", i), "mhl." + bit_name("P", i));
  }
  net.constants["q.Cin"] = 0;

  // Low h product bits come straight from mll.
  for (std::size_t i = 0; i < h; ++i) net.exports["mll." + bit_name("P", i)] = bit_name("P", i);

  // r = (mhh:mll) >> h  +  q, 3h bits wide; the product fits so Cout is 0.
  net.components.push_back({"r", build_adder(3 * h, base_adder)});
  for (std::size_t i = 0; i < 3 * h; ++i) {
    const std::string ra = "r." + bit_name("A", i);
    if (i < h)
      net.connections.emplace_back(ra, "mll." + bit_name("P", h + i));
    else
      net.connections.emplace_back(ra, "mhh." + bit_name("P", i - h));
    const std::string rb = "r." + bit_name("B", i);
    if (i < 2 * h)
      net.connections.emplace_back(rb, "q." + bit_name("S", i));
    else if (i == 2 * h)
      net.connections.emplace_back(rb, "q.Cout");
    else
      net.constants[rb] = 0;
    net.exports["r." + bit_name("S", i)] = bit_name("P", h + i);
  }
  net.constants["r.Cin"] = 0;
  net.constants["r.Cout"] = 0;
  return compose(net);
}

namespace {

bool parse_suffix(const std::string& name, const std::string& prefix, std::size_t& out) {
  if (name.size() <= prefix.size() || name.compare(0, prefix.size(), prefix) != 0) return false;
  const char* first = name.data() + prefix.size();
  const char* last = name.data() + name.size();
  auto [ptr, ec] = std::from_chars(first, last, out);
  return ec == std::errc() && ptr == last && out > 0;
}

}  // namespace

bool is_builtin(const std::string& name) {
  static const std::set<std::string> fixed = {"and", "or", "xor", "nand", "not", "copy", "fa1"};
  std::size_t n;
  return fixed.count(name) || parse_suffix(name, "fa", n) || parse_suffix(name, "adder", n) ||
         parse_suffix(name, "mult", n);
}

MergedModel builtin_model(const std::string& name, double sharpness) {
  if (name == "and") return gate(GateKind::And, sharpness);
  if (name == "or") return gate(GateKind::Or, sharpness);
  if (name == "xor") return gate(GateKind::Xor, sharpness);
  if (name == "nand") return gate(GateKind::Nand, sharpness);
  if (name == "not") return gate(GateKind::Not, sharpness);
  if (name == "copy") return gate(GateKind::Copy, sharpness);
  if (name == "fa1") return compose(full_adder_netlist(sharpness));
  std::size_t n = 0;
  if (parse_suffix(name, "fa", n)) return build_adder(n, compose(full_adder_netlist(sharpness)));
  if (parse_suffix(name, "adder", n)) return rbm_from_truth_table(adder_table(n), sharpness);
  if (parse_suffix(name, "mult", n)) return rbm_from_truth_table(multiplier_table(n), sharpness);
  throw InvalidArgument("unknown builtin component '" + name + "'");
}

}  // namespace rbmc
