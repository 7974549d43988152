// Command-line front end: build, train, solve, bench, diagnose, inspect and
// replay. Every run resolves its settings (defaults, then --config, then
// flags) into one JSON object, writes it to <out-dir>/manifest.json and
// derives all randomness from the seeds in it, so `rbmc replay` on the
// manifest reproduces the run's CSV files byte for byte.

#include <omp.h>

#include <cmath>
#include <cstdlib>
#include <deque>
#include <filesystem>
#include <iostream>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "rbmc/error.hpp"
#include "rbmc/exact.hpp"
#include "rbmc/io.hpp"
#include "rbmc/sampler.hpp"
#include "rbmc/synthesis.hpp"
#include "rbmc/tasks.hpp"
#include "rbmc/training.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace rbmc;

namespace {

constexpr const char* kVersion = "1.0.0";
constexpr int kExitMismatch = 1;
constexpr int kExitUsage = 2;

class UsageError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// ---------------------------------------------------------------------------
// Settings: each subcommand declares its keys with defaults; flags given on
// the command line override the --config file, which overrides defaults.

enum class Kind { Uint, Double, String, Bool, UintList, DoubleList, UintMap, StringMap };

struct Field {
  std::string key;
  Kind kind;
  CLI::Option* option;
  std::string* single;
  std::vector<std::string>* list;
};

std::uint64_t parse_uint(const std::string& text, const std::string& key) {
  std::size_t pos = 0;
  unsigned long long v = 0;
  try {
    if (!text.empty() && text[0] == '-') throw std::invalid_argument(text);
    v = std::stoull(text, &pos, 0);
  } catch (const std::exception&) {
    throw UsageError(key + ": expected a non-negative integer, got '" + text + "'");
  }
  if (pos != text.size()) throw UsageError(key + ": expected a non-negative integer, got '" + text + "'");
  return v;
}

double parse_double(const std::string& text, const std::string& key) {
  std::size_t pos = 0;
  double v = 0.0;
  try {
    v = std::stod(text, &pos);
  } catch (const std::exception&) {
    throw UsageError(key + ": expected a number, got '" + text + "'");
  }
  if (pos != text.size() || !std::isfinite(v)) throw UsageError(key + ": expected a number, got '" + text + "'");
  return v;
}

bool parse_bool(const std::string& text, const std::string& key) {
  if (text == "true" || text == "1" || text == "yes") return true;
  if (text == "false" || text == "0" || text == "no") return false;
  throw UsageError(key + ": expected true or false, got '" + text + "'");
}

std::pair<std::string, std::string> split_pair(const std::string& text, const std::string& key) {
  const auto eq = text.find('=');
  if (eq == std::string::npos || eq == 0) throw UsageError(key + ": expected NAME=VALUE, got '" + text + "'");
  return {text.substr(0, eq), text.substr(eq + 1)};
}

class Settings {
 public:
  Settings(CLI::App* app, std::string command) : app_(app), command_(std::move(command)) {
    app_->add_option("--config", config_, "JSON settings file or a manifest of an earlier run");
  }

  void add(const std::string& flag, const std::string& key, Kind kind, json default_value,
           const std::string& help) {
    defaults_[key] = std::move(default_value);
    Field f{key, kind, nullptr, nullptr, nullptr};
    const bool is_list = kind == Kind::UintList || kind == Kind::DoubleList || kind == Kind::UintMap ||
                         kind == Kind::StringMap;
    if (is_list) {
      f.list = &lists_.emplace_back();
      f.option = app_->add_option(flag, *f.list, help)->delimiter(',');
    } else {
      f.single = &singles_.emplace_back();
      f.option = app_->add_option(flag, *f.single, help);
    }
    fields_.push_back(f);
  }

  const std::string& command() const { return command_; }

  // Defaults, then the config file, then explicitly given flags.
  json resolve() const {
    json s = defaults_;
    if (!config_.empty()) merge_file(s, config_);
    for (const auto& f : fields_)
      if (f.option->count() > 0) s[f.key] = convert(f);
    return s;
  }

  // Used by replay: defaults overlaid with the manifest's settings.
  json with_defaults(const json& settings) const {
    json s = defaults_;
    merge(s, settings, "manifest");
    return s;
  }

 private:
  void merge_file(json& s, const std::string& path) const {
    json j;
    try {
      j = json::parse(read_text(path));
    } catch (const json::parse_error& e) {
      throw UsageError(path + ": " + e.what());
    }
    if (j.contains("settings") && j.contains("command")) {
      if (j["command"] != command_)
        throw UsageError(path + " is a manifest of '" + j["command"].get<std::string>() + "', not '" + command_ + "'");
      j = j["settings"];
    }
    merge(s, j, path);
  }

  void merge(json& s, const json& from, const std::string& origin) const {
    if (!from.is_object()) throw UsageError(origin + ": settings must be a JSON object");
    for (const auto& [k, v] : from.items()) {
      if (!defaults_.contains(k)) throw UsageError(origin + ": unknown setting '" + k + "'");
      s[k] = v;
    }
  }

  static json convert(const Field& f) {
    switch (f.kind) {
      case Kind::Uint: return parse_uint(*f.single, f.key);
      case Kind::Double: return parse_double(*f.single, f.key);
      case Kind::String: return *f.single;
      case Kind::Bool: return parse_bool(*f.single, f.key);
      case Kind::UintList: {
        json a = json::array();
        for (const auto& x : *f.list) a.push_back(parse_uint(x, f.key));
        return a;
      }
      case Kind::DoubleList: {
        json a = json::array();
        for (const auto& x : *f.list) a.push_back(parse_double(x, f.key));
        return a;
      }
      case Kind::UintMap: {
        json o = json::object();
        for (const auto& x : *f.list) {
          const auto [k, v] = split_pair(x, f.key);
          o[k] = parse_uint(v, f.key);
        }
        return o;
      }
      case Kind::StringMap: {
        json o = json::object();
        for (const auto& x : *f.list) {
          const auto [k, v] = split_pair(x, f.key);
          o[k] = v;
        }
        return o;
      }
    }
    return nullptr;
  }

  CLI::App* app_;
  std::string command_;
  std::string config_;
  json defaults_ = json::object();
  std::vector<Field> fields_;
  std::deque<std::string> singles_;
  std::deque<std::vector<std::string>> lists_;
};

template <typename T>
T get(const json& s, const std::string& key) {
  try {
    return s.at(key).get<T>();
  } catch (const json::exception&) {
    throw UsageError("setting '" + key + "' has the wrong type");
  }
}

// ---------------------------------------------------------------------------
// Model references: a builtin name, a model file, or a composition
// "adder<N>@BASE" / "mult<N>@BASE_MULT+BASE_ADDER".

MergedModel load_ref(const std::string& ref, double sharpness) {
  const auto at = ref.find('@');
  if (at == std::string::npos) return resolve_model(ref, fs::current_path(), sharpness);
  const std::string target = ref.substr(0, at), bases = ref.substr(at + 1);
  std::size_t n = 0;
  auto width = [&](const std::string& prefix) {
    if (target.rfind(prefix, 0) != 0) return false;
    const std::string digits = target.substr(prefix.size());
    if (digits.empty() || digits.find_first_not_of("0123456789") != std::string::npos) return false;
    n = std::stoul(digits);
    return n > 0;
  };
  if (width("adder")) return build_adder(n, load_ref(bases, sharpness));
  if (width("mult")) {
    const auto comma = bases.find('+');
    const std::string base_adder = comma == std::string::npos ? "adder1" : bases.substr(comma + 1);
    return build_multiplier(n, load_ref(bases.substr(0, comma), sharpness), load_ref(base_adder, sharpness));
  }
  throw UsageError("cannot compose '" + target + "': expected adder<N>@BASE or mult<N>@BASE[+ADDER]");
}

void write_manifest(const fs::path& out, const std::string& command, const json& settings) {
  json m;
  m["tool"] = "rbmc";
  m["version"] = kVersion;
  m["command"] = command;
  m["settings"] = settings;
  write_text(out / "manifest.json", m.dump(2) + "\n");
}

CsvWriter terminal_csv(const MergedModel& m) {
  CsvWriter csv({"terminal", "index", "exported", "constant"});
  std::set<std::string> exported(m.exports.begin(), m.exports.end());
  const auto& names = m.rbm.visible_names();
  for (std::size_t i = 0; i < names.size(); ++i) {
    const auto c = m.constants.find(names[i]);
    csv.row({names[i], std::to_string(i), exported.count(names[i]) ? "1" : "0",
             c == m.constants.end() ? "" : std::to_string(c->second)});
  }
  return csv;
}

CsvWriter weights_csv(const Rbm& r) {
  std::vector<std::string> header{"unit", "bias"};
  for (std::size_t j = 0; j < r.n_hidden(); ++j) header.push_back("h" + std::to_string(j));
  CsvWriter csv(header);
  std::vector<std::string> row{"hidden_bias", ""};
  for (double a : r.hidden_bias()) row.push_back(format_double(a));
  csv.row(row);
  for (std::size_t i = 0; i < r.n_visible(); ++i) {
    row = {r.visible_names()[i], format_double(r.visible_bias()[i])};
    for (double w : r.row(i)) row.push_back(format_double(w));
    csv.row(row);
  }
  return csv;
}

std::size_t task_width(const MergedModel& m, Operation op) {
  switch (op) {
    case Operation::Add:
    case Operation::Subtract:
    case Operation::ReverseCarry: return adder_width(m);
    case Operation::Multiply:
    case Operation::Divide:
    case Operation::Factor: return multiplier_width(m);
    case Operation::Sat: return 0;
  }
  return 0;
}

// ---------------------------------------------------------------------------
// Subcommands

void declare_build(Settings& s) {
  s.add("--generator,-g", "generator", Kind::String, "",
        "builtin or composed model (fa1, adder4, mult2, adder16@adder4, mult8@mult4+adder1)");
  s.add("--width,-w", "width", Kind::Uint, 0, "appended to the generator name (adder + 16 -> adder16)");
  s.add("--base", "base", Kind::String, "", "base unit to compose the generator from");
  s.add("--netlist", "netlist", Kind::String, "", "netlist JSON file to compose instead of a generator");
  s.add("--sharpness,-c", "sharpness", Kind::Double, kDefaultSharpness, "scale of directly calculated units");
  s.add("--model-name", "model_name", Kind::String, "model.json", "output model file name inside the out dir");
}

int run_build(const json& s, const fs::path& out) {
  const double c = get<double>(s, "sharpness");
  const auto netlist = get<std::string>(s, "netlist");
  std::string generator = get<std::string>(s, "generator");
  const auto width = get<std::uint64_t>(s, "width");
  const auto base = get<std::string>(s, "base");
  if (netlist.empty() == generator.empty()) throw UsageError("build needs exactly one of --generator or --netlist");
  if (width > 0) generator += std::to_string(width);
  const MergedModel m = !netlist.empty() ? compose(load_netlist(netlist, c))
                                         : load_ref(base.empty() ? generator : generator + "@" + base, c);
  save_model(out / get<std::string>(s, "model_name"), m);
  terminal_csv(m).save(out / "terminals.csv");
  std::cout << "visible " << m.rbm.n_visible() << " hidden " << m.rbm.n_hidden() << " terminals "
            << m.exports.size() << "\n";
  return 0;
}

void declare_train(Settings& s) {
  const TrainConfig d;
  s.add("--task,-t", "task", Kind::String, "adder1", "adder<n> or mult<n>");
  s.add("--hidden", "hidden", Kind::Uint, 0, "hidden units (0 = task default)");
  s.add("--k", "k", Kind::Uint, d.k, "initial CD steps");
  s.add("--k-max", "k_max", Kind::Uint, d.k_max, "largest k of the stage schedule");
  s.add("--lr", "learning_rate", Kind::Double, d.learning_rate, "learning rate");
  s.add("--epochs-per-stage", "epochs_per_stage", Kind::Uint, d.epochs_per_stage, "epochs before k grows");
  s.add("--copies", "copies_per_epoch", Kind::Uint, d.copies_per_epoch, "dataset copies per epoch");
  s.add("--decay", "weight_decay", Kind::Double, d.weight_decay, "L2 weight decay");
  s.add("--batch", "batch_size", Kind::Uint, d.batch_size, "rows per update");
  s.add("--max-dataset", "max_dataset", Kind::Uint, 0, "random subset size (0 = all rows)");
  s.add("--patience", "patience", Kind::Uint, d.patience, "stages without improvement before stopping");
  s.add("--init-scale", "init_scale", Kind::Double, d.init_scale, "standard deviation of initial weights");
  s.add("--negative-phase", "negative_phase", Kind::String, "mean_field", "mean_field or sampled");
  s.add("--every-epoch", "evaluate_every_epoch", Kind::Bool, d.evaluate_every_epoch,
        "checkpoint candidates every epoch (true) or at stage ends (false)");
  s.add("--seed", "seed", Kind::Uint, d.seed, "training seed");
  s.add("--eval-instances", "eval_instances", Kind::Uint, 0, "evaluation instances (0 = all inputs)");
  s.add("--model-name", "model_name", Kind::String, "model.json", "output model file name inside the out dir");
}

int run_train(const json& s, const fs::path& out) {
  const TrainingTask task = parse_training_task(get<std::string>(s, "task"));
  TrainConfig c;
  c.k = get<std::size_t>(s, "k");
  c.k_max = get<std::size_t>(s, "k_max");
  c.learning_rate = get<double>(s, "learning_rate");
  c.epochs_per_stage = get<std::size_t>(s, "epochs_per_stage");
  c.copies_per_epoch = get<std::size_t>(s, "copies_per_epoch");
  c.weight_decay = get<double>(s, "weight_decay");
  c.batch_size = get<std::size_t>(s, "batch_size");
  if (const auto m = get<std::uint64_t>(s, "max_dataset"); m > 0) c.max_dataset = m;
  c.patience = get<std::size_t>(s, "patience");
  c.init_scale = get<double>(s, "init_scale");
  const auto phase = get<std::string>(s, "negative_phase");
  if (phase == "mean_field")
    c.negative_phase = NegativePhase::MeanField;
  else if (phase == "sampled")
    c.negative_phase = NegativePhase::Sampled;
  else
    throw UsageError("negative_phase must be mean_field or sampled");
  c.evaluate_every_epoch = get<bool>(s, "evaluate_every_epoch");
  c.seed = get<std::uint64_t>(s, "seed");
  c.eval.n_instances = get<std::size_t>(s, "eval_instances");
  std::size_t hidden = get<std::size_t>(s, "hidden");
  if (hidden == 0) hidden = default_hidden_units(task);

  const TrainResult res = train(task, hidden, c);
  save_model(out / get<std::string>(s, "model_name"), MergedModel(res.model));
  CsvWriter csv({"stage", "k", "epoch", "reconstruction_error", "task_accuracy", "correct_mass"});
  for (const auto& m : res.metrics)
    csv.row({std::to_string(m.stage), std::to_string(m.k), std::to_string(m.epoch),
             format_double(m.reconstruction_error), format_double(m.task_accuracy), format_double(m.correct_mass)});
  csv.save(out / "metrics.csv");
  std::cout << "accuracy " << format_double(res.best_accuracy) << " correct_mass "
            << format_double(res.best_correct_mass) << "\n";
  return 0;
}

void declare_solve(Settings& s) {
  const SolveSettings d;
  s.add("--model,-m", "model", Kind::String, "", "model reference (builtin, file or composition)");
  s.add("--sharpness,-c", "sharpness", Kind::Double, kDefaultSharpness, "scale of directly calculated units");
  s.add("--operation,-o", "operation", Kind::String, "add",
        "add, subtract, reverse_carry, multiply, divide, factor or sat");
  s.add("--width,-w", "width", Kind::Uint, 0, "operand width (0 = read from the model)");
  s.add("--operand", "operands", Kind::UintMap, json::object(), "clamped operand NAME=VALUE (A, B, Cin, S, Cout, P)");
  s.add("--bit", "bits", Kind::UintMap, json::object(), "sat clamp TERMINAL=0|1");
  s.add("--expect", "expected", Kind::UintMap, json::object(), "expected answer NAME=VALUE; sets the exit code");
  s.add("--no-borrow", "no_borrow", Kind::Bool, false, "subtract: clamp Cout = 0");
  s.add("--chains", "chains", Kind::Uint, d.chains, "independent chains");
  s.add("--samples,-n", "samples", Kind::Uint, d.samples, "pooled recorded samples");
  s.add("--burn-in", "burn_in", Kind::Uint, d.burn_in, "sweeps discarded per chain");
  s.add("--betas", "betas", Kind::DoubleList, json::array(), "replica-exchange inverse temperatures, last = 1");
  s.add("--seed", "seed", Kind::Uint, d.seed, "base seed");
  s.add("--exact", "exact", Kind::Bool, false, "exact conditional instead of sampling");
  s.add("--top-k", "top_k", Kind::Uint, d.top_k, "factor pairs to report");
}

int run_solve(const json& s, const fs::path& out) {
  const auto ref = get<std::string>(s, "model");
  if (ref.empty()) throw UsageError("solve needs --model");
  const MergedModel m = load_ref(ref, get<double>(s, "sharpness"));
  TaskSpec t;
  t.operation = parse_operation(get<std::string>(s, "operation"));
  t.bit_width = get<std::size_t>(s, "width");
  if (t.bit_width == 0) t.bit_width = task_width(m, t.operation);
  t.operands = get<std::map<std::string, std::uint64_t>>(s, "operands");
  for (const auto& [k, v] : get<std::map<std::string, std::uint64_t>>(s, "bits")) {
    if (v > 1) throw UsageError("bit " + k + " must be 0 or 1");
    t.terminal_bits[k] = static_cast<std::uint8_t>(v);
  }
  const auto expected = get<std::map<std::string, std::uint64_t>>(s, "expected");
  if (!expected.empty()) t.expected = expected;
  t.no_borrow = get<bool>(s, "no_borrow");

  SolveSettings ss;
  ss.chains = get<std::size_t>(s, "chains");
  ss.samples = get<std::size_t>(s, "samples");
  ss.burn_in = get<std::size_t>(s, "burn_in");
  ss.betas = get<std::vector<double>>(s, "betas");
  ss.seed = get<std::uint64_t>(s, "seed");
  ss.exact = get<bool>(s, "exact");
  ss.top_k = get<std::size_t>(s, "top_k");
  const Solution sol = solve(m, t, ss);

  CsvWriter result({"field", "value"});
  for (const auto& [k, v] : sol.values) result.row({k, std::to_string(v)});
  result.row({"key", sol.key});
  result.row({"frequency", format_double(sol.frequency)});
  result.row({"correct_mass", format_double(sol.correct_mass)});
  result.row({"correct", sol.correct ? "1" : "0"});
  result.save(out / "solution.csv");
  if (!ss.exact) {
    CsvWriter h({"key", "count"});
    for (const auto& [k, c] : sol.histogram.counts) h.row({k, std::to_string(c)});
    h.save(out / "histogram.csv");
  }
  if (t.operation == Operation::Factor) {
    CsvWriter f({"a", "b", "count", "valid"});
    for (const auto& p : sol.factor_pairs)
      f.row({std::to_string(p.a), std::to_string(p.b), std::to_string(p.count), p.valid ? "1" : "0"});
    f.save(out / "factor_pairs.csv");
  }
  for (const auto& [k, v] : sol.values) std::cout << k << "=" << v << " ";
  std::cout << "frequency " << format_double(sol.frequency) << (sol.correct ? " correct" : " incorrect") << "\n";
  return t.expected && !sol.correct ? kExitMismatch : 0;
}

void declare_bench(Settings& s) {
  s.add("--model,-m", "models", Kind::StringMap, json::object(), "NAME=REF, one curve per model");
  s.add("--sharpness,-c", "sharpness", Kind::Double, kDefaultSharpness, "scale of directly calculated units");
  s.add("--operation,-o", "operation", Kind::String, "add", "arithmetic operation of the random instances");
  s.add("--instances", "instances", Kind::Uint, 20, "random instances per model");
  s.add("--checkpoints", "checkpoints", Kind::UintList, json::array(), "pooled sample counts, ascending");
  s.add("--chains", "chains", Kind::Uint, 4, "chains per instance");
  s.add("--burn-in", "burn_in", Kind::Uint, 0, "sweeps discarded per chain");
  s.add("--seed", "seed", Kind::Uint, 1, "base seed");
  s.add("--dump-weights", "dump_weights", Kind::Bool, false, "write a dense weight matrix per model");
}

int run_bench(const json& s, const fs::path& out) {
  const auto models = get<std::map<std::string, std::string>>(s, "models");
  if (models.empty()) throw UsageError("bench needs at least one --model NAME=REF");
  const auto checkpoints = get<std::vector<std::size_t>>(s, "checkpoints");
  if (checkpoints.empty()) throw UsageError("bench needs a non-empty checkpoint list");
  const Operation op = parse_operation(get<std::string>(s, "operation"));
  const auto seed = get<std::uint64_t>(s, "seed");
  const auto instances = get<std::size_t>(s, "instances");
  CurveSettings cs;
  cs.checkpoints = checkpoints;
  cs.n_chains = get<std::size_t>(s, "chains");
  cs.burn_in = get<std::size_t>(s, "burn_in");
  // Models are loaded first so a missing file fails before any sampling.
  std::vector<std::pair<std::string, MergedModel>> loaded;
  for (const auto& [name, ref] : models) loaded.emplace_back(name, load_ref(ref, get<double>(s, "sharpness")));
  std::size_t index = 0;
  for (const auto& [name, m] : loaded) {
    // Same instance stream for every model, so equal widths see equal tasks.
    Rng rng(derive_seed(seed, 0));
    const std::size_t width = task_width(m, op);
    std::vector<TaskSpec> tasks;
    std::vector<InferenceQuery> queries;
    for (std::size_t i = 0; i < instances; ++i) tasks.push_back(random_task(op, width, rng));
    for (const auto& t : tasks) queries.push_back(make_query(m, t));
    cs.seed = derive_seed(seed, 1 + index++);
    CsvWriter csv({"samples", "accuracy"});
    for (const auto& p : success_curve(m.rbm, queries, cs))
      csv.row({std::to_string(p.samples), format_double(p.accuracy)});
    csv.save(out / ("curve_" + name + ".csv"));
    if (get<bool>(s, "dump_weights")) weights_csv(m.rbm).save(out / ("weights_" + name + ".csv"));
    std::cout << name << ": " << queries.size() << " instances\n";
  }
  return 0;
}

void declare_diagnose(Settings& s) {
  s.add("--model,-m", "model", Kind::String, "", "model reference (builtin, file or composition)");
  s.add("--sharpness,-c", "sharpness", Kind::Double, kDefaultSharpness, "scale of directly calculated units");
  s.add("--clamp", "clamp", Kind::UintMap, json::object(), "TERMINAL=0|1 held fixed");
  s.add("--ideal", "ideal", Kind::String, "",
        "relation to compare against (gate name, adder<n>, mult<n>); terminals must match the model");
  s.add("--steps", "steps", Kind::Uint, 50, "sweeps covered by the convergence bound table");
  s.add("--iat-sweeps", "iat_sweeps", Kind::Uint, 0, "sweeps per chain for autocorrelation times (0 = skip)");
  s.add("--iat-chains", "iat_chains", Kind::Uint, 3, "chains for autocorrelation times");
  s.add("--seed", "seed", Kind::Uint, 1, "base seed");
}

TruthTable ideal_table(const std::string& name) {
  static const std::map<std::string, GateKind> gates = {{"and", GateKind::And},   {"or", GateKind::Or},
                                                        {"xor", GateKind::Xor},   {"nand", GateKind::Nand},
                                                        {"not", GateKind::Not},   {"copy", GateKind::Copy}};
  if (const auto g = gates.find(name); g != gates.end()) return gate_table(g->second);
  if (name == "fa1") return adder_table(1);
  const TrainingTask t = parse_training_task(name);
  return t.kind == TaskKind::Adder ? adder_table(t.n_bits) : multiplier_table(t.n_bits);
}

int run_diagnose(const json& s, const fs::path& out) {
  const auto ref = get<std::string>(s, "model");
  if (ref.empty()) throw UsageError("diagnose needs --model");
  const MergedModel m = load_ref(ref, get<double>(s, "sharpness"));
  ClampMask clamp;
  for (const auto& [k, v] : m.constants) clamp.assignments[k] = v;
  for (const auto& [k, v] : get<std::map<std::string, std::uint64_t>>(s, "clamp")) {
    if (v > 1) throw UsageError("clamp " + k + " must be 0 or 1");
    clamp.assignments[k] = static_cast<std::uint8_t>(v);
  }
  CsvWriter report({"metric", "value"});
  report.row({"n_visible", std::to_string(m.rbm.n_visible())});
  report.row({"n_hidden", std::to_string(m.rbm.n_hidden())});
  const double bound = delta_bound(m.rbm);
  report.row({"delta_bound", format_double(bound)});
  double delta = bound;
  try {
    delta = delta_exact(m.rbm);
    report.row({"delta_exact", format_double(delta)});
  } catch (const TooLarge&) {
    std::cout << "model too large for delta_exact; the bound table uses delta_bound\n";
  }
  try {
    const auto dist = exact_visible_distribution(m.rbm, clamp);
    report.row({"free_visible", std::to_string(dist.free_units.size())});
    report.row({"log_partition", format_double(dist.log_partition)});
    if (const auto ideal_name = get<std::string>(s, "ideal"); !ideal_name.empty()) {
      const TruthTable table = ideal_table(ideal_name);
      std::vector<std::size_t> units;
      for (const auto& n : table.names) units.push_back(m.index_of(n));
      const auto marginal = marginalize(dist, units);
      // Rows of the relation that agree with the clamp, as marginal states.
      std::vector<Bits> valid;
      for (const auto& row : table.rows) {
        bool ok = true;
        for (std::size_t k = 0; k < units.size(); ++k) {
          const auto c = clamp.assignments.find(table.names[k]);
          if (c != clamp.assignments.end() && c->second != row[k]) ok = false;
        }
        if (!ok) continue;
        Bits full = marginal.base;
        for (std::size_t k = 0; k < units.size(); ++k) full[units[k]] = row[k];
        valid.push_back(full);
      }
      report.row({"valid_mass", format_double(mass_on(marginal, valid))});
      report.row({"kl_ideal_to_model", format_double(kl_divergence(uniform_over(marginal, valid), marginal))});
    }
    if (dist.free_units.size() <= 16) {
      CsvWriter d({"state_index", "state", "probability"});
      for (std::size_t x = 0; x < dist.size(); ++x) {
        const Bits v = dist.state(x);
        std::string key;
        for (std::size_t u : dist.free_units) key += v[u] ? '1' : '0';
        d.row({std::to_string(x), key, format_double(dist.probabilities[x])});
      }
      d.save(out / "distribution.csv");
    }
  } catch (const TooLarge&) {
    std::cout << "model too large for exact enumeration\n";
  }
  if (m.rbm.n_visible() + m.rbm.n_hidden() <= ExactLimits{}.max_dense_units && clamp.assignments.empty())
    report.row({"slem", format_double(slem(GibbsTransition(m.rbm)))});
  report.save(out / "diagnose.csv");

  // Observed distance from the all-zero joint state when the chain is small
  // enough to propagate exactly; otherwise only the worst-case bound.
  CsvWriter b({"sweeps", "tv_observed", "tv_bound"});
  const bool propagate = clamp.assignments.empty() &&
                         m.rbm.n_visible() + m.rbm.n_hidden() <= ExactLimits{}.max_joint_units;
  std::optional<GibbsTransition> t;
  std::vector<double> mu;
  double l1 = 2.0;
  if (propagate) {
    t.emplace(m.rbm);
    mu.assign(t->n_states(), 0.0);
    mu[0] = 1.0;
    l1 = l1_distance(mu, t->stationary());
  }
  for (std::size_t n = 0; n <= get<std::size_t>(s, "steps"); ++n) {
    b.row({std::to_string(n), propagate ? format_double(tv_distance(mu, t->stationary())) : "",
           format_double(convergence_bound(delta, l1, n))});
    if (propagate) mu = t->apply(mu);
  }
  b.save(out / "bound.csv");

  if (const auto sweeps = get<std::size_t>(s, "iat_sweeps"); sweeps > 0) {
    CsvWriter iat({"chain", "seed", "iat"});
    const GibbsSampler sampler(m.rbm, clamp);
    for (std::size_t c = 0; c < get<std::size_t>(s, "iat_chains"); ++c) {
      ChainSettings cs;
      cs.n_sweeps = sweeps;
      cs.seed = derive_seed(get<std::uint64_t>(s, "seed"), c);
      cs.record_states = false;
      const auto res = sampler.run_chain(cs);
      iat.row({std::to_string(c), std::to_string(cs.seed),
               format_double(integrated_autocorrelation_time(res.trace.energy_trace))});
    }
    iat.save(out / "iat.csv");
  }
  std::cout << "diagnosed " << ref << "\n";
  return 0;
}

void declare_inspect(Settings& s) {
  s.add("--model,-m", "model", Kind::String, "", "model reference (builtin, file or composition)");
  s.add("--sharpness,-c", "sharpness", Kind::Double, kDefaultSharpness, "scale of directly calculated units");
  s.add("--dump-weights", "dump_weights", Kind::Bool, false, "write the dense weight matrix");
}

int run_inspect(const json& s, const fs::path& out) {
  const auto ref = get<std::string>(s, "model");
  if (ref.empty()) throw UsageError("inspect needs --model");
  const MergedModel m = load_ref(ref, get<double>(s, "sharpness"));
  const Rbm& r = m.rbm;
  std::size_t nonzero = 0;
  double max_w = 0.0, sum_w = 0.0, sq = 0.0;
  for (double w : r.weights()) {
    nonzero += w != 0.0;
    max_w = std::max(max_w, std::abs(w));
    sum_w += std::abs(w);
    sq += w * w;
  }
  double max_b = 0.0, max_a = 0.0;
  for (double b : r.visible_bias()) max_b = std::max(max_b, std::abs(b));
  for (double a : r.hidden_bias()) max_a = std::max(max_a, std::abs(a));
  const std::size_t total = r.weights().size();
  CsvWriter csv({"metric", "value"});
  csv.row({"n_visible", std::to_string(r.n_visible())});
  csv.row({"n_hidden", std::to_string(r.n_hidden())});
  csv.row({"exported_terminals", std::to_string(m.exports.size())});
  csv.row({"constants", std::to_string(m.constants.size())});
  csv.row({"weights", std::to_string(total)});
  csv.row({"nonzero_weights", std::to_string(nonzero)});
  csv.row({"sparsity", format_double(total ? 1.0 - static_cast<double>(nonzero) / static_cast<double>(total) : 0.0)});
  csv.row({"max_abs_weight", format_double(max_w)});
  csv.row({"mean_abs_weight", format_double(total ? sum_w / static_cast<double>(total) : 0.0)});
  csv.row({"weight_l2", format_double(std::sqrt(sq))});
  csv.row({"max_abs_visible_bias", format_double(max_b)});
  csv.row({"max_abs_hidden_bias", format_double(max_a)});
  csv.row({"delta_bound", format_double(delta_bound(r))});
  csv.save(out / "stats.csv");
  terminal_csv(m).save(out / "terminals.csv");
  if (get<bool>(s, "dump_weights")) weights_csv(r).save(out / "weights.csv");
  std::cout << "visible " << r.n_visible() << " hidden " << r.n_hidden() << " nonzero weights " << nonzero << "\n";
  return 0;
}

struct Command {
  const char* name;
  const char* help;
  void (*declare)(Settings&);
  int (*run)(const json&, const fs::path&);
};

const Command kCommands[] = {
    {"build", "compose a model from a generator or netlist", declare_build, run_build},
    {"train", "train a unit with stagewise contrastive divergence", declare_train, run_train},
    {"solve", "clamp a task onto a model and sample the answer", declare_solve, run_solve},
    {"bench", "success-versus-samples curves for several models", declare_bench, run_bench},
    {"diagnose", "exact distribution, energy range and mixing diagnostics", declare_diagnose, run_diagnose},
    {"inspect", "weight statistics and sparsity", declare_inspect, run_inspect},
};

int execute(const Command& cmd, const json& settings, const fs::path& out) {
  fs::create_directories(out);
  write_manifest(out, cmd.name, settings);
  return cmd.run(settings, out);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Compose, train and sample restricted Boltzmann machines for invertible logic"};
  app.set_version_flag("--version", kVersion);
  app.require_subcommand(1);
  const char* env_out = std::getenv("RBMC_OUT_DIR");
  std::string out_dir = env_out ? env_out : "rbmc_out";
  int threads = 0;
  if (const char* env_threads = std::getenv("RBMC_THREADS")) threads = std::atoi(env_threads);
  app.add_option("--out-dir", out_dir, "directory for outputs and the manifest (env RBMC_OUT_DIR)");
  app.add_option("--threads", threads, "OpenMP threads (env RBMC_THREADS); results do not depend on it")
      ->check(CLI::NonNegativeNumber);

  std::deque<Settings> settings;
  std::vector<std::pair<CLI::App*, const Command*>> subs;
  for (const auto& cmd : kCommands) {
    CLI::App* sub = app.add_subcommand(cmd.name, cmd.help);
    cmd.declare(settings.emplace_back(sub, cmd.name));
    subs.emplace_back(sub, &cmd);
  }
  CLI::App* replay = app.add_subcommand("replay", "rerun a command from its manifest");
  std::string manifest_path;
  replay->add_option("manifest", manifest_path, "manifest.json of an earlier run")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitUsage;
  }
  if (threads > 0) omp_set_num_threads(threads);

  try {
    if (replay->parsed()) {
      const json m = json::parse(read_text(manifest_path));
      const auto name = m.at("command").get<std::string>();
      for (std::size_t i = 0; i < subs.size(); ++i)
        if (name == subs[i].second->name)
          return execute(*subs[i].second, settings[i].with_defaults(m.at("settings")), out_dir);
      throw UsageError("manifest names an unknown command '" + name + "'");
    }
    for (std::size_t i = 0; i < subs.size(); ++i)
      if (subs[i].first->parsed()) return execute(*subs[i].second, settings[i].resolve(), out_dir);
  } catch (const UsageError& e) {
    std::cerr << "usage error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const json::exception& e) {
    std::cerr << "manifest error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const fs::filesystem_error& e) {
    std::cerr << "io error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitUsage;
  }
  return kExitUsage;
}
