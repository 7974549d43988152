#include "rbmc/tasks.hpp"

#include <algorithm>

#include "rbmc/error.hpp"
#include "rbmc/exact.hpp"
#include "rbmc/synthesis.hpp"

namespace rbmc {

Bits encode_int(std::uint64_t x, std::size_t n_bits) {
  if (n_bits > 64) throw InvalidArgument("at most 64 bits can be encoded");
  if (n_bits < 64 && (x >> n_bits) != 0)
    throw InvalidArgument(std::to_string(x) + " does not fit in " + std::to_string(n_bits) + " bits");
  Bits b(n_bits);
  for (std::size_t i = 0; i < n_bits; ++i) b[i] = (x >> i) & 1U;
  return b;
}

std::uint64_t decode_int(std::span<const std::uint8_t> bits) {
  if (bits.size() > 64) throw InvalidArgument("at most 64 bits can be decoded");
  std::uint64_t x = 0;
  for (std::size_t i = 0; i < bits.size(); ++i) x |= std::uint64_t{bits[i] & 1U} << i;
  return x;
}

namespace {

const std::pair<Operation, const char*> kOperationNames[] = {
    {Operation::Add, "add"},          {Operation::Subtract, "subtract"},
    {Operation::ReverseCarry, "reverse_carry"}, {Operation::Multiply, "multiply"},
    {Operation::Divide, "divide"},    {Operation::Factor, "factor"},
    {Operation::Sat, "sat"}};

bool is_adder_op(Operation op) {
  return op == Operation::Add || op == Operation::Subtract || op == Operation::ReverseCarry;
}

struct Field {
  std::string name;
  std::size_t width;  // bus width; 0 means a single named terminal
};

std::size_t field_bits(const Field& f) { return f.width == 0 ? 1 : f.width; }

std::vector<std::string> field_terminals(const Field& f) {
  if (f.width == 0) return {f.name};
  std::vector<std::string> out;
  for (std::size_t i = 0; i < f.width; ++i) out.push_back(bit_name(f.name, i));
  return out;
}

std::size_t model_width(const MergedModel& model, Operation op) {
  return is_adder_op(op) ? adder_width(model) : multiplier_width(model);
}

std::size_t operand_width(Operation op, std::size_t n, const std::string& operand) {
  if (operand == "Cin" || operand == "Cout") return 0;
  if (operand == "P") return 2 * n;
  (void)op;
  return n;
}

std::uint64_t operand(const TaskSpec& task, const std::string& name) {
  auto it = task.operands.find(name);
  if (it != task.operands.end()) return it->second;
  if (name == "Cin") return 0;
  throw InvalidArgument("task " + to_string(task.operation) + " requires operand " + name);
}

struct Layout {
  std::vector<Field> clamped;
  std::vector<Field> sampled;
};

Layout layout(const TaskSpec& task, std::size_t n) {
  auto f = [&](const std::string& name) { return Field{name, operand_width(task.operation, n, name)}; };
  switch (task.operation) {
    case Operation::Add: return {{f("A"), f("B"), f("Cin")}, {f("S"), f("Cout")}};
    case Operation::Subtract:
      if (task.no_borrow) return {{f("S"), f("B"), f("Cin")}, {f("A")}};
      return {{f("S"), f("B"), f("Cin")}, {f("A"), f("Cout")}};
    case Operation::ReverseCarry: return {{f("S"), f("Cout"), f("Cin")}, {f("A"), f("B")}};
    case Operation::Multiply: return {{f("A"), f("B")}, {f("P")}};
    case Operation::Divide: return {{f("P"), f("A")}, {f("B")}};
    case Operation::Factor: return {{f("P")}, {f("A"), f("B")}};
    case Operation::Sat: return {};
  }
  return {};
}

std::vector<Field> sat_sampled(const MergedModel& model, const TaskSpec& task) {
  std::vector<Field> out;
  for (const auto& name : model.exports)
    if (!task.terminal_bits.count(name) && !model.constants.count(name)) out.push_back({name, 0});
  return out;
}

std::vector<Field> sampled_fields(const MergedModel& model, const TaskSpec& task) {
  if (task.operation == Operation::Sat) return sat_sampled(model, task);
  return layout(task, model_width(model, task.operation)).sampled;
}

struct Weighted {
  std::string key;
  double weight;
};

// Highest weight, ties to the lexicographically smallest key.
const Weighted& best(const std::vector<Weighted>& entries) {
  const Weighted* b = &entries.front();
  for (const auto& e : entries)
    if (e.weight > b->weight || (e.weight == b->weight && e.key < b->key)) b = &e;
  return *b;
}

struct RankedPair {
  std::uint64_t a, b;
  double weight;
  std::string key;
};

}  // namespace

std::map<std::string, std::uint64_t> decode_key(const MergedModel& model, const TaskSpec& task,
                                                const std::string& key);

namespace {

// Unordered factor pairs, (a, b) pooled with (b, a), trivial pairs with a
// factor of 1 dropped, ranked by weight then by (a, b).
std::vector<RankedPair> rank_factor_pairs(const MergedModel& model, const TaskSpec& task,
                                          const std::vector<Weighted>& entries) {
  std::map<std::pair<std::uint64_t, std::uint64_t>, double> pairs;
  for (const auto& e : entries) {
    if (e.weight <= 0.0) continue;
    auto v = decode_key(model, task, e.key);
    const auto lo = std::min(v["A"], v["B"]);
    const auto hi = std::max(v["A"], v["B"]);
    if (lo == 1) continue;
    pairs[{lo, hi}] += e.weight;
  }
  std::vector<RankedPair> ranked;
  for (const auto& [ab, w] : pairs) {
    std::string key;
    for (auto x : encode_int(ab.first, task.bit_width)) key.push_back(x ? '1' : '0');
    for (auto x : encode_int(ab.second, task.bit_width)) key.push_back(x ? '1' : '0');
    ranked.push_back({ab.first, ab.second, w, std::move(key)});
  }
  std::stable_sort(ranked.begin(), ranked.end(), [](const auto& x, const auto& y) { return x.weight > y.weight; });
  return ranked;
}

}  // namespace

std::string to_string(Operation op) {
  for (const auto& [o, name] : kOperationNames)
    if (o == op) return name;
  return "unknown";
}

Operation parse_operation(const std::string& name) {
  for (const auto& [o, n] : kOperationNames)
    if (name == n) return o;
  throw InvalidArgument("unknown operation '" + name + "'");
}

void validate(const TaskSpec& task) {
  if (task.operation == Operation::Sat) {
    for (const auto& [name, bit] : task.terminal_bits)
      if (bit > 1) throw InvalidArgument("sat clamp for '" + name + "' is not 0 or 1");
    return;
  }
  const std::size_t n = task.bit_width;
  if (n == 0 || n > 31) throw InvalidArgument("bit width must be between 1 and 31");
  for (const auto& f : layout(task, n).clamped) {
    const std::uint64_t x = operand(task, f.name);
    const std::size_t bits = field_bits(f);
    if ((x >> bits) != 0)
      throw InvalidArgument("operand " + f.name + " = " + std::to_string(x) + " does not fit in " +
                            std::to_string(bits) + " bits");
  }
}

bool is_correct(const TaskSpec& task, const std::map<std::string, std::uint64_t>& values) {
  auto get = [&](const std::string& name) -> std::uint64_t {
    if (auto it = values.find(name); it != values.end()) return it->second;
    if (name == "Cout" && task.operation == Operation::Subtract && task.no_borrow) return 0;
    return operand(task, name);
  };
  const std::size_t n = task.bit_width;
  bool ok = true;
  switch (task.operation) {
    case Operation::Add:
    case Operation::Subtract:
    case Operation::ReverseCarry:
      ok = get("A") + get("B") + get("Cin") == get("S") + (get("Cout") << n);
      break;
    case Operation::Multiply:
    case Operation::Divide:
      ok = get("A") * get("B") == get("P");
      break;
    case Operation::Factor:
      ok = get("A") * get("B") == get("P") && get("A") != 1 && get("B") != 1;
      break;
    case Operation::Sat:
      break;
  }
  if (ok && task.expected) {
    for (const auto& [name, want] : *task.expected) {
      auto it = values.find(name);
      if (it == values.end()) continue;
      if (task.operation == Operation::Factor && (name == "A" || name == "B")) continue;
      if (it->second != want) ok = false;
    }
    if (task.operation == Operation::Factor && task.expected->count("A") && task.expected->count("B")) {
      const auto ea = task.expected->at("A"), eb = task.expected->at("B");
      const auto a = values.at("A"), b = values.at("B");
      ok = ok && ((a == ea && b == eb) || (a == eb && b == ea));
    }
  }
  return ok;
}

TaskSpec random_task(Operation op, std::size_t bit_width, Rng& rng) {
  if (op == Operation::Sat) throw InvalidArgument("sat tasks have no random arithmetic instances");
  if (bit_width == 0 || bit_width > 31) throw InvalidArgument("random tasks need a width in [1, 31]");
  const std::uint64_t range = std::uint64_t{1} << bit_width;
  if (op == Operation::Factor && range < 3) throw InvalidArgument("factor tasks need a width of at least 2");
  TaskSpec t;
  t.operation = op;
  t.bit_width = bit_width;
  std::uint64_t a = rng.below(range);
  const std::uint64_t b = rng.below(range);
  const std::uint64_t sum = a + b;
  switch (op) {
    case Operation::Add:
      t.operands = {{"A", a}, {"B", b}, {"Cin", 0}};
      break;
    case Operation::Subtract:
      t.operands = {{"S", sum % range}, {"B", b}, {"Cin", 0}};
      break;
    case Operation::ReverseCarry:
      t.operands = {{"S", sum % range}, {"Cout", sum / range}, {"Cin", 0}};
      break;
    case Operation::Multiply:
      t.operands = {{"A", a}, {"B", b}};
      break;
    case Operation::Divide:
      a = 1 + rng.below(range - 1);
      t.operands = {{"P", a * b}, {"A", a}};
      break;
    case Operation::Factor: {
      const std::uint64_t x = 2 + rng.below(range - 2), y = 2 + rng.below(range - 2);
      t.operands = {{"P", x * y}};
      break;
    }
    case Operation::Sat:
      break;
  }
  return t;
}

InferenceQuery make_query(const MergedModel& model, const TaskSpec& task) {
  validate(task);
  InferenceQuery q;
  for (const auto& [name, bit] : model.constants) q.clamp.assignments[name] = bit;
  if (task.operation == Operation::Sat) {
    for (const auto& [name, bit] : task.terminal_bits) {
      model.index_of(name);
      q.clamp.assignments[name] = bit;
    }
  } else {
    const std::size_t n = model_width(model, task.operation);
    if (n != task.bit_width)
      throw InvalidArgument("task width " + std::to_string(task.bit_width) + " does not match model width " +
                            std::to_string(n));
    const Layout l = layout(task, n);
    for (const auto& f : l.clamped) {
      const Bits bits = encode_int(operand(task, f.name), field_bits(f));
      const auto names = field_terminals(f);
      for (std::size_t i = 0; i < names.size(); ++i) q.clamp.assignments[names[i]] = bits[i];
    }
    if (task.operation == Operation::Subtract && task.no_borrow) q.clamp.assignments["Cout"] = 0;
  }
  for (const auto& f : sampled_fields(model, task))
    for (const auto& name : field_terminals(f)) q.observe.push_back(model.index_of(name));
  q.correct = [&model, task](const std::string& key) { return is_correct(task, decode_key(model, task, key)); };
  if (task.operation == Operation::Factor) {
    q.pick = [&model, task](const Histogram& h) {
      std::vector<Weighted> entries;
      for (const auto& [k, c] : h.counts) entries.push_back({k, static_cast<double>(c)});
      const auto ranked = rank_factor_pairs(model, task, entries);
      return ranked.empty() ? mode_estimate(h).first : ranked.front().key;
    };
  }
  return q;
}

std::map<std::string, std::uint64_t> decode_key(const MergedModel& model, const TaskSpec& task,
                                                const std::string& key) {
  std::map<std::string, std::uint64_t> values;
  std::size_t pos = 0;
  for (const auto& f : sampled_fields(model, task)) {
    const std::size_t bits = field_bits(f);
    if (pos + bits > key.size()) throw DimensionError("key is shorter than the task read-back");
    Bits b(bits);
    for (std::size_t i = 0; i < bits; ++i) b[i] = key[pos + i] == '1';
    values[f.name] = decode_int(b);
    pos += bits;
  }
  if (pos != key.size()) throw DimensionError("key is longer than the task read-back");
  return values;
}

Solution solve(const MergedModel& model, const TaskSpec& task, const SolveSettings& settings) {
  const InferenceQuery q = make_query(model, task);
  Solution sol;
  std::vector<Weighted> entries;
  double total = 0.0;
  if (settings.exact) {
    const auto dist = exact_visible_distribution(model.rbm, q.clamp, ExactLimits{}, settings.exec);
    const auto m = marginalize(dist, q.observe);
    for (std::size_t s = 0; s < m.size(); ++s) {
      std::string key(q.observe.size(), '0');
      for (std::size_t k = 0; k < key.size(); ++k)
        if ((s >> k) & 1U) key[k] = '1';
      entries.push_back({std::move(key), m.probabilities[s]});
    }
    total = 1.0;
  } else {
    if (settings.chains == 0 || settings.samples < settings.chains)
      throw InvalidArgument("solve needs at least one sample per chain");
    MultistartSettings ms;
    ms.n_chains = settings.chains;
    ms.sweeps_per_chain = settings.burn_in + settings.samples / settings.chains;
    ms.burn_in = settings.burn_in;
    ms.betas = settings.betas;
    ms.seed = settings.seed;
    ms.observe = q.observe;
    ms.exec = settings.exec;
    sol.histogram = multistart(model.rbm, q.clamp, ms);
    for (const auto& [k, c] : sol.histogram.counts) entries.push_back({k, static_cast<double>(c)});
    total = static_cast<double>(sol.histogram.total);
  }
  if (entries.empty() || total <= 0.0) throw InvalidArgument("no samples were collected");
  double good = 0.0;
  for (const auto& e : entries)
    if (e.weight > 0.0 && q.correct(e.key)) good += e.weight;
  sol.correct_mass = good / total;

  if (task.operation == Operation::Factor) {
    const auto ranked = rank_factor_pairs(model, task, entries);
    if (ranked.empty()) throw InvalidArgument("only trivial factor pairs were sampled");
    const std::uint64_t p = operand(task, "P");
    for (std::size_t i = 0; i < ranked.size() && i < settings.top_k; ++i) {
      const auto& r = ranked[i];
      sol.factor_pairs.push_back({r.a, r.b, settings.exact ? 0 : static_cast<std::uint64_t>(r.weight),
                                  r.a * r.b == p});
    }
    sol.values = {{"A", ranked.front().a}, {"B", ranked.front().b}};
    sol.key = ranked.front().key;
    sol.frequency = ranked.front().weight / total;
  } else {
    const Weighted& m = best(entries);
    sol.key = m.key;
    sol.values = decode_key(model, task, m.key);
    sol.frequency = m.weight / total;
  }
  sol.correct = is_correct(task, sol.values);
  return sol;
}

}  // namespace rbmc
