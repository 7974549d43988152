#include "rbmc/training.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <numbers>
#include <set>
#include <utility>

#include "rbmc/error.hpp"

namespace rbmc {

TrainingTask parse_training_task(const std::string& name) {
  auto parse = [&](const std::string& prefix, TaskKind kind) -> std::optional<TrainingTask> {
    if (name.rfind(prefix, 0) != 0 || name.size() == prefix.size()) return std::nullopt;
    std::size_t n = 0;
    auto [ptr, ec] = std::from_chars(name.data() + prefix.size(), name.data() + name.size(), n);
    if (ec != std::errc() || ptr != name.data() + name.size() || n == 0) return std::nullopt;
    return TrainingTask{kind, n};
  };
  if (auto t = parse("adder", TaskKind::Adder)) return *t;
  if (auto t = parse("mult", TaskKind::Multiplier)) return *t;
  throw InvalidArgument("unknown training task '" + name + "' (expected adder<n> or mult<n>)");
}

std::string to_string(const TrainingTask& task) {
  return (task.kind == TaskKind::Adder ? "adder" : "mult") + std::to_string(task.n_bits);
}

std::size_t default_hidden_units(const TrainingTask& task) {
  if (task.kind == TaskKind::Adder) {
    switch (task.n_bits) {
      case 1: return 6;
      case 2: return 28;
      case 4: return 64;
      case 8: return 96;
      case 16: return 128;
      case 32: return 192;
      default: break;
    }
  } else {
    switch (task.n_bits) {
      case 1: return 4;
      case 2: return 12;
      case 4: return 64;
      case 8: return 96;
      default: break;
    }
  }
  return 8 * (task.kind == TaskKind::Adder ? 3 * task.n_bits + 2 : 4 * task.n_bits);
}

std::uint64_t dataset_size(const TrainingTask& task) {
  const std::size_t bits = task.kind == TaskKind::Adder ? 2 * task.n_bits + 1 : 2 * task.n_bits;
  if (bits >= 64) throw TooLarge("dataset size does not fit in 64 bits");
  return std::uint64_t{1} << bits;
}

std::vector<std::string> task_terminals(const TrainingTask& task) {
  std::vector<std::string> names;
  auto bus = [&](const char* b, std::size_t n) {
    for (std::size_t i = 0; i < n; ++i) names.push_back(bit_name(b, i));
  };
  if (task.kind == TaskKind::Adder) {
    bus("A", task.n_bits);
    bus("B", task.n_bits);
    names.push_back("Cin");
    bus("S", task.n_bits);
    names.push_back("Cout");
  } else {
    bus("A", task.n_bits);
    bus("B", task.n_bits);
    bus("P", 2 * task.n_bits);
  }
  return names;
}

namespace {

// Row for input combination x, in the same order as adder_table / multiplier_table.
Bits dataset_row(const TrainingTask& task, std::uint64_t x) {
  const std::size_t n = task.n_bits;
  const std::uint64_t mask = (std::uint64_t{1} << n) - 1;
  Bits row;
  auto push = [&](std::uint64_t v, std::size_t bits) {
    for (std::size_t i = 0; i < bits; ++i) row.push_back((v >> i) & 1U);
  };
  if (task.kind == TaskKind::Adder) {
    // x = (a << (n+1)) | (b << 1) | cin, matching adder_table's loop order.
    const std::uint64_t cin = x & 1U;
    const std::uint64_t b = (x >> 1) & mask;
    const std::uint64_t a = (x >> (n + 1)) & mask;
    const std::uint64_t s = a + b + cin;
    push(a, n);
    push(b, n);
    push(cin, 1);
    push(s & mask, n);
    push(s >> n, 1);
  } else {
    const std::uint64_t b = x & mask;
    const std::uint64_t a = (x >> n) & mask;
    push(a, n);
    push(b, n);
    push(a * b, 2 * n);
  }
  return row;
}

double gaussian(Rng& rng) {
  double u1 = rng.uniform();
  while (u1 <= 0.0) u1 = rng.uniform();
  const double u2 = rng.uniform();
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

}  // namespace

std::vector<Bits> generate_dataset(const TrainingTask& task, std::optional<std::uint64_t> cap, Rng& rng) {
  if (cap && *cap == 0) throw InvalidArgument("dataset cap must be positive");
  const std::uint64_t total = dataset_size(task);
  std::vector<Bits> rows;
  if (!cap || *cap >= total) {
    if (total > kMaxEnumeratedRows)
      throw TooLarge("dataset has " + std::to_string(total) + " rows; set a cap to sample it");
    rows.reserve(total);
    for (std::uint64_t x = 0; x < total; ++x) rows.push_back(dataset_row(task, x));
    return rows;
  }
  std::set<std::uint64_t> picked;
  if (*cap * 2 > total) {
    // Dense cap: partial Fisher-Yates over all indices.
    std::vector<std::uint64_t> idx(total);
    for (std::uint64_t x = 0; x < total; ++x) idx[x] = x;
    for (std::uint64_t i = 0; i < *cap; ++i) std::swap(idx[i], idx[i + rng.below(total - i)]);
    picked.insert(idx.begin(), idx.begin() + static_cast<std::ptrdiff_t>(*cap));
  } else {
    while (picked.size() < *cap) picked.insert(rng.below(total));
  }
  rows.reserve(*cap);
  for (auto x : picked) rows.push_back(dataset_row(task, x));
  return rows;
}

void TrainConfig::validate() const {
  if (k < 1) throw InvalidArgument("CD steps k must be at least 1");
  if (!(learning_rate >= 0.0) || !std::isfinite(learning_rate)) throw InvalidArgument("learning rate must be >= 0");
  if (!(weight_decay >= 0.0)) throw InvalidArgument("weight decay must be >= 0");
  if (epochs_per_stage < 1 || copies_per_epoch < 1 || batch_size < 1)
    throw InvalidArgument("epochs, copies and batch size must be at least 1");
  if (patience < 1) throw InvalidArgument("patience must be at least 1");
  if (max_dataset && *max_dataset == 0) throw InvalidArgument("dataset cap must be positive");
}

RbmParameters RbmParameters::from(const Rbm& rbm) {
  return {rbm.visible_names(), rbm.weights(), rbm.visible_bias(), rbm.hidden_bias()};
}

Rbm RbmParameters::to_rbm() const { return Rbm(names, visible_bias, hidden_bias, weights); }

bool RbmParameters::finite() const {
  for (const auto* v : {&weights, &visible_bias, &hidden_bias})
    for (double x : *v)
      if (!std::isfinite(x)) return false;
  return true;
}

namespace kernels {

namespace {

struct RowGradient {
  std::vector<double> w, b, a;
  double recon = 0.0;
};

void row_gradient(const RbmParameters& p, const Bits& v0, std::size_t k, bool mean_field, std::uint64_t seed,
                  RowGradient& g) {
  const std::size_t nv = p.visible_bias.size();
  const std::size_t nh = p.hidden_bias.size();
  Rng rng(seed);
  auto hidden_probs = [&](const Bits& v, std::vector<double>& out) {
    for (std::size_t j = 0; j < nh; ++j) {
      double x = p.hidden_bias[j];
      for (std::size_t i = 0; i < nv; ++i)
        if (v[i]) x += p.weights[i * nh + j];
      out[j] = sigmoid(x);
    }
  };
  auto visible_probs = [&](const Bits& h, std::vector<double>& out) {
    for (std::size_t i = 0; i < nv; ++i) {
      double x = p.visible_bias[i];
      const double* w = p.weights.data() + i * nh;
      for (std::size_t j = 0; j < nh; ++j)
        if (h[j]) x += w[j];
      out[i] = sigmoid(x);
    }
  };

  std::vector<double> ph0(nh), phk(nh), pv(nv);
  hidden_probs(v0, ph0);
  Bits h(nh), v(nv);
  for (std::size_t j = 0; j < nh; ++j) h[j] = rng.uniform() < ph0[j];
  for (std::size_t step = 0; step < k; ++step) {
    visible_probs(h, pv);
    for (std::size_t i = 0; i < nv; ++i) v[i] = rng.uniform() < pv[i];
    if (step + 1 < k) {
      hidden_probs(v, phk);
      for (std::size_t j = 0; j < nh; ++j) h[j] = rng.uniform() < phk[j];
    }
  }

  // Negative statistics: either the sampled reconstruction v_k or its probabilities p(v | h_{k-1}).
  std::vector<double> vk(nv);
  for (std::size_t i = 0; i < nv; ++i) vk[i] = mean_field ? pv[i] : static_cast<double>(v[i]);
  for (std::size_t j = 0; j < nh; ++j) {
    double x = p.hidden_bias[j];
    for (std::size_t i = 0; i < nv; ++i) x += vk[i] * p.weights[i * nh + j];
    phk[j] = sigmoid(x);
  }

  g.w.assign(nv * nh, 0.0);
  g.b.assign(nv, 0.0);
  g.a.assign(nh, 0.0);
  for (std::size_t i = 0; i < nv; ++i) {
    g.b[i] = static_cast<double>(v0[i]) - vk[i];
    double* w = g.w.data() + i * nh;
    for (std::size_t j = 0; j < nh; ++j) w[j] = (v0[i] ? ph0[j] : 0.0) - vk[i] * phk[j];
  }
  for (std::size_t j = 0; j < nh; ++j) g.a[j] = ph0[j] - phk[j];
  g.recon = 0.0;
  for (std::size_t i = 0; i < nv; ++i) {
    const double d = static_cast<double>(v0[i]) - pv[i];
    g.recon += d * d;
  }
  if (k == 0) g.recon = 0.0;
}

void reduce(const RbmParameters& p, const std::vector<RowGradient>& rows, RbmParameters& grad, CdStats& stats) {
  grad.weights.assign(p.weights.size(), 0.0);
  grad.visible_bias.assign(p.visible_bias.size(), 0.0);
  grad.hidden_bias.assign(p.hidden_bias.size(), 0.0);
  stats.reconstruction_error = 0.0;
  for (const auto& g : rows) {
    for (std::size_t x = 0; x < g.w.size(); ++x) grad.weights[x] += g.w[x];
    for (std::size_t x = 0; x < g.b.size(); ++x) grad.visible_bias[x] += g.b[x];
    for (std::size_t x = 0; x < g.a.size(); ++x) grad.hidden_bias[x] += g.a[x];
    stats.reconstruction_error += g.recon;
  }
  const double inv = rows.empty() ? 0.0 : 1.0 / static_cast<double>(rows.size());
  for (double& x : grad.weights) x *= inv;
  for (double& x : grad.visible_bias) x *= inv;
  for (double& x : grad.hidden_bias) x *= inv;
  stats.reconstruction_error *= inv / static_cast<double>(std::max<std::size_t>(1, p.visible_bias.size()));
}

void check_batch(const RbmParameters& p, const std::vector<Bits>& batch) {
  for (const auto& row : batch)
    if (row.size() != p.visible_bias.size()) throw DimensionError("batch row length does not match n_visible");
}

}  // namespace

void cd_gradient_serial(const RbmParameters& p, const std::vector<Bits>& batch, std::size_t k, bool mean_field,
                        std::uint64_t step_seed, RbmParameters& grad, CdStats& stats) {
  check_batch(p, batch);
  std::vector<RowGradient> rows(batch.size());
  for (std::size_t r = 0; r < batch.size(); ++r) row_gradient(p, batch[r], k, mean_field, derive_seed(step_seed, r), rows[r]);
  reduce(p, rows, grad, stats);
}

void cd_gradient_parallel(const RbmParameters& p, const std::vector<Bits>& batch, std::size_t k, bool mean_field,
                          std::uint64_t step_seed, RbmParameters& grad, CdStats& stats) {
  check_batch(p, batch);
  std::vector<RowGradient> rows(batch.size());
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t r = 0; r < static_cast<std::ptrdiff_t>(batch.size()); ++r) {
    const auto ur = static_cast<std::size_t>(r);
    row_gradient(p, batch[ur], k, mean_field, derive_seed(step_seed, ur), rows[ur]);
  }
  reduce(p, rows, grad, stats);
}

}  // namespace kernels

CdStats cd_step(RbmParameters& params, const std::vector<Bits>& batch, const TrainConfig& config, std::size_t k,
                Rng& rng) {
  if (k < 1) throw InvalidArgument("CD steps k must be at least 1");
  RbmParameters grad;
  CdStats stats;
  const std::uint64_t step_seed = rng.next();
  const bool mf = config.negative_phase == NegativePhase::MeanField;
  if (config.exec == Exec::Serial)
    kernels::cd_gradient_serial(params, batch, k, mf, step_seed, grad, stats);
  else
    kernels::cd_gradient_parallel(params, batch, k, mf, step_seed, grad, stats);
  const double lr = config.learning_rate;
  for (std::size_t x = 0; x < params.weights.size(); ++x)
    params.weights[x] += lr * grad.weights[x] - lr * config.weight_decay * params.weights[x];
  for (std::size_t x = 0; x < params.visible_bias.size(); ++x) params.visible_bias[x] += lr * grad.visible_bias[x];
  for (std::size_t x = 0; x < params.hidden_bias.size(); ++x) params.hidden_bias[x] += lr * grad.hidden_bias[x];
  return stats;
}

Rbm cd_step(const Rbm& rbm, const std::vector<Bits>& batch, const TrainConfig& config, Rng& rng) {
  config.validate();
  RbmParameters p = RbmParameters::from(rbm);
  cd_step(p, batch, config, config.k, rng);
  if (!p.finite()) throw TrainingDiverged("CD step produced non-finite parameters");
  return p.to_rbm();
}

Evaluation evaluate(const Rbm& rbm, const TrainingTask& task, const EvalSettings& settings) {
  const MergedModel model(rbm);
  const std::size_t n = task.n_bits;
  const std::uint64_t total = task.kind == TaskKind::Adder ? std::uint64_t{1} << (2 * n + 1)
                                                          : std::uint64_t{1} << (2 * n);
  std::vector<std::uint64_t> instances;
  if (settings.n_instances == 0 || settings.n_instances >= total) {
    if (total > kMaxEnumeratedRows) throw TooLarge("too many instances to enumerate; set n_instances");
    for (std::uint64_t x = 0; x < total; ++x) instances.push_back(x);
  } else {
    Rng rng(derive_seed(settings.seed, 0xACC));
    for (std::size_t i = 0; i < settings.n_instances; ++i) instances.push_back(rng.below(total));
  }
  const std::uint64_t mask = (std::uint64_t{1} << n) - 1;
  const std::size_t free_bits = task.kind == TaskKind::Adder ? n + 1 : 2 * n;

  std::size_t ok = 0;
  double mass = 0.0;
  for (std::size_t idx = 0; idx < instances.size(); ++idx) {
    const std::uint64_t x = instances[idx];
    TaskSpec spec;
    spec.bit_width = n;
    if (task.kind == TaskKind::Adder) {
      spec.operation = Operation::Add;
      spec.operands = {{"A", (x >> (n + 1)) & mask}, {"B", (x >> 1) & mask}, {"Cin", x & 1U}};
    } else {
      spec.operation = Operation::Multiply;
      spec.operands = {{"A", (x >> n) & mask}, {"B", x & mask}};
    }
    SolveSettings ss;
    ss.exact = settings.exact && free_bits <= 20;
    ss.chains = settings.chains;
    ss.samples = settings.samples;
    ss.seed = derive_seed(settings.seed, idx);
    ss.exec = Exec::Serial;
    const Solution sol = solve(model, spec, ss);
    if (sol.correct) ++ok;
    mass += sol.correct_mass;
  }
  if (instances.empty()) return {};
  const auto n_inst = static_cast<double>(instances.size());
  return {static_cast<double>(ok) / n_inst, mass / n_inst};
}

double evaluate_accuracy(const Rbm& rbm, const TrainingTask& task, const EvalSettings& settings) {
  return evaluate(rbm, task, settings).accuracy;
}

namespace {

// Accuracy first, then the probability placed on correct answers.
using Score = std::pair<double, double>;

}  // namespace

TrainResult train(const TrainingTask& task, std::size_t n_hidden, const TrainConfig& config) {
  config.validate();
  Rng rng(config.seed);
  const auto names = task_terminals(task);
  const std::size_t nv = names.size();
  RbmParameters params{names, std::vector<double>(nv * n_hidden), std::vector<double>(nv, 0.0),
                       std::vector<double>(n_hidden, 0.0)};
  for (double& w : params.weights) w = config.init_scale * gaussian(rng);

  const bool capped = config.max_dataset && *config.max_dataset < dataset_size(task);
  std::vector<Bits> data = generate_dataset(task, config.max_dataset, rng);

  TrainResult result{params.to_rbm(), {}, -1.0, -1.0};
  std::size_t k = config.k;
  std::size_t epoch = 0;
  std::size_t without_gain = 0;
  Score best_before{-1.0, -1.0};
  for (std::size_t stage = 0; k <= config.k_max; ++stage, ++k) {
    Score stage_best{-1.0, -1.0};
    for (std::size_t e = 0; e < config.epochs_per_stage; ++e, ++epoch) {
      if (capped && epoch > 0) data = generate_dataset(task, config.max_dataset, rng);
      std::vector<std::size_t> order;
      order.reserve(data.size() * config.copies_per_epoch);
      for (std::size_t c = 0; c < config.copies_per_epoch; ++c)
        for (std::size_t r = 0; r < data.size(); ++r) order.push_back(r);
      for (std::size_t i = order.size(); i > 1; --i) std::swap(order[i - 1], order[rng.below(i)]);
      double recon = 0.0;
      std::size_t steps = 0;
      for (std::size_t start = 0; start < order.size(); start += config.batch_size) {
        std::vector<Bits> batch;
        for (std::size_t i = start; i < std::min(order.size(), start + config.batch_size); ++i)
          batch.push_back(data[order[i]]);
        recon += cd_step(params, batch, config, k, rng).reconstruction_error;
        ++steps;
        if (!params.finite())
          throw TrainingDiverged("non-finite parameters at stage " + std::to_string(stage) + ", epoch " +
                                 std::to_string(epoch) + ", k=" + std::to_string(k) +
                                 "; lower the learning rate or raise weight decay");
      }
      if (!config.evaluate_every_epoch && e + 1 < config.epochs_per_stage) continue;
      const Rbm current = params.to_rbm();
      const Evaluation ev = evaluate(current, task, config.eval);
      result.metrics.push_back(
          {stage, k, epoch + 1, steps ? recon / static_cast<double>(steps) : 0.0, ev.accuracy, ev.correct_mass});
      const Score score{ev.accuracy, ev.correct_mass};
      stage_best = std::max(stage_best, score);
      if (score > Score{result.best_accuracy, result.best_correct_mass}) {
        result.best_accuracy = ev.accuracy;
        result.best_correct_mass = ev.correct_mass;
        result.model = current;
      }
    }
    if (stage_best > best_before) {
      best_before = stage_best;
      without_gain = 0;
    } else if (++without_gain >= config.patience) {
      break;
    }
  }
  return result;
}

}  // namespace rbmc
