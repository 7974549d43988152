// Acceptance suite: one PASS/FAIL line per criterion, followed by the
// measurements behind it. Exits with the number of failed criteria.
//
//   acceptance [--cli PATH] [--only N[,N...]]

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <functional>
#include <set>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "rbmc/exact.hpp"
#include "rbmc/io.hpp"
#include "rbmc/merge.hpp"
#include "rbmc/sampler.hpp"
#include "rbmc/synthesis.hpp"
#include "rbmc/tasks.hpp"
#include "rbmc/training.hpp"
#include "unit/helpers.hpp"

namespace fs = std::filesystem;
using namespace rbmc;

namespace {

struct Outcome {
  bool pass;
  std::string detail;
};

std::string fmt(double x) { return format_double(x); }

// ---------------------------------------------------------------------------
// 1. Merge algebra.

Outcome merge_algebra() {
  Rng rng(1001);
  double worst_energy = 0.0, worst_prob = 0.0;
  for (int pair = 0; pair < 100; ++pair) {
    const std::size_t nva = 1 + rng.below(6), nha = 1 + rng.below(4);
    const std::size_t nvb = 1 + rng.below(6), nhb = 1 + rng.below(4);
    const Rbm a = testing::random_rbm(nva, nha, rng, 1.0, "a");
    const Rbm b = testing::random_rbm(nvb, nhb, rng, 1.0, "b");
    // A random partial matching between a's and b's visible units.
    std::vector<std::size_t> perm(nvb);
    for (std::size_t i = 0; i < nvb; ++i) perm[i] = i;
    for (std::size_t i = nvb; i > 1; --i) std::swap(perm[i - 1], perm[rng.below(i)]);
    const std::size_t n_merged = 1 + rng.below(std::min(nva, nvb));
    std::vector<std::pair<std::string, std::string>> pairs;
    std::vector<long> b_to_a(nvb, -1);
    for (std::size_t k = 0; k < n_merged; ++k) {
      pairs.emplace_back(a.visible_names()[k], b.visible_names()[perm[k]]);
      b_to_a[perm[k]] = static_cast<long>(k);
    }
    const Rbm m = merge_pair(a, b, pairs);

    // Every joint state of the merged model maps to one state of a and of b.
    const std::size_t nv = m.n_visible(), nh = m.n_hidden();
    const auto pa = testing::normalized(testing::brute_visible_weights(a));
    const auto pb = testing::normalized(testing::brute_visible_weights(b));
    std::vector<double> product(std::size_t{1} << nv);
    for (std::uint64_t v = 0; v < product.size(); ++v) {
      const Bits vm = testing::bits_of(v, nv);
      Bits va(nva), vb(nvb);
      for (std::size_t i = 0; i < nva; ++i) va[i] = vm[m.index_of(a.visible_names()[i])];
      for (std::size_t i = 0; i < nvb; ++i)
        vb[i] = vm[b_to_a[i] >= 0 ? m.index_of(a.visible_names()[b_to_a[i]]) : m.index_of(b.visible_names()[i])];
      std::uint64_t ia = 0, ib = 0;
      for (std::size_t i = 0; i < nva; ++i) ia |= std::uint64_t{va[i]} << i;
      for (std::size_t i = 0; i < nvb; ++i) ib |= std::uint64_t{vb[i]} << i;
      product[v] = pa[ia] * pb[ib];
      for (std::uint64_t h = 0; h < (std::uint64_t{1} << nh); ++h) {
        const Bits hm = testing::bits_of(h, nh);
        const Bits ha(hm.begin(), hm.begin() + static_cast<long>(nha)), hb(hm.begin() + static_cast<long>(nha), hm.end());
        const double diff = energy(m, {vm, hm}) - (testing::brute_energy(a, va, ha) + testing::brute_energy(b, vb, hb));
        worst_energy = std::max(worst_energy, std::abs(diff));
      }
    }
    product = testing::normalized(product);
    const auto exact = exact_visible_distribution(m, {}, {}, Exec::Serial);
    for (std::size_t v = 0; v < product.size(); ++v)
      worst_prob = std::max(worst_prob, std::abs(exact.probabilities[v] - product[v]));
  }
  // Energies are sums of at most a few dozen O(1) terms in a different order.
  const bool ok = worst_energy <= 1e-12 && worst_prob <= 1e-10;
  return {ok, "max |E_merged - E_a - E_b| = " + fmt(worst_energy) + ", max |p - renormalized product| = " +
                  fmt(worst_prob)};
}

// ---------------------------------------------------------------------------
// 2. Convergence bound on the joint chain.

Outcome dobrushin_bound() {
  Rng rng(1002);
  std::size_t violations = 0, checks = 0;
  double tightest = 0.0;
  for (int model = 0; model < 50; ++model) {
    const std::size_t nv = 1 + rng.below(6);
    const std::size_t nh = 1 + rng.below(std::min<std::size_t>(6, 12 - nv));
    // Small couplings keep the bound informative within 50 sweeps.
    const double scale = model % 2 == 0 ? 0.05 : 0.5;
    const Rbm r = testing::random_rbm(nv, nh, rng, scale);
    const GibbsTransition t(r);
    const auto& pi = t.stationary();
    const double delta = delta_exact(r);
    const std::size_t n_states = t.n_states();
    for (int start = 0; start < 5; ++start) {
      std::vector<double> mu(n_states, 0.0);
      if (start == 0) {
        mu[0] = 1.0;
      } else if (start == 1) {
        mu[n_states - 1] = 1.0;
      } else if (start == 2) {
        std::fill(mu.begin(), mu.end(), 1.0 / static_cast<double>(n_states));
      } else {
        double z = 0.0;
        for (double& x : mu) z += x = -std::log(1.0 - rng.uniform());
        for (double& x : mu) x /= z;
      }
      const double l1 = l1_distance(mu, pi);
      for (std::size_t n = 0; n <= 50; ++n) {
        const double tv = tv_distance(mu, pi), bound = convergence_bound(delta, l1, n);
        ++checks;
        if (tv > bound + 1e-12) ++violations;
        // Ratios where both sides are at rounding level carry no information.
        if (bound > 1e-9) tightest = std::max(tightest, tv / bound);
        mu = t.apply(mu);
      }
    }
  }
  return {violations == 0, std::to_string(violations) + " violations in " + std::to_string(checks) +
                               " checks, largest TV/bound = " + fmt(tightest)};
}

// ---------------------------------------------------------------------------
// 3. Full-adder distributions.

Outcome full_adder_mass() {
  const TruthTable table = adder_table(1);
  const MergedModel merged = builtin_model("fa1");
  const auto d = exact_visible_distribution(merged.rbm);
  std::vector<std::size_t> units;
  for (const auto& n : table.names) units.push_back(merged.index_of(n));
  const auto marginal = marginalize(d, units);
  std::vector<Bits> rows;
  for (const auto& row : table.rows) {
    Bits full = marginal.base;
    for (std::size_t k = 0; k < units.size(); ++k) full[units[k]] = row[k];
    rows.push_back(full);
  }
  const double merged_mass = mass_on(marginal, rows);
  const Rbm direct = rbm_from_truth_table(table);
  const double direct_mass = mass_on(exact_visible_distribution(direct), table.rows);
  return {merged_mass >= 0.97 && direct_mass > merged_mass,
          "gate-merged mass " + fmt(merged_mass) + ", direct mass " + fmt(direct_mass)};
}

// ---------------------------------------------------------------------------
// 4. Mixing of trained versus gate-merged full adders.

double mean_iat(const Rbm& r, std::uint64_t base_seed, std::string& per_seed) {
  double sum = 0.0;
  for (std::uint64_t s = 0; s < 3; ++s) {
    ChainSettings cs;
    cs.n_sweeps = 100000;
    cs.seed = derive_seed(base_seed, s);
    cs.record_states = false;
    const auto res = run_chain(r, {}, cs);
    const double tau = integrated_autocorrelation_time(res.trace.energy_trace);
    per_seed += (s ? "," : "") + fmt(tau);
    sum += tau;
  }
  return sum / 3.0;
}

Outcome mixing_order() {
  const TrainResult trained = train({TaskKind::Adder, 1}, 6, TrainConfig{});
  std::string t_seeds, m_seeds;
  const double t = mean_iat(trained.model, 1004, t_seeds);
  const double m = mean_iat(builtin_model("fa1").rbm, 1004, m_seeds);
  return {t < m, "mean IAT trained " + fmt(t) + " [" + t_seeds + "], gate-merged " + fmt(m) + " [" + m_seeds +
                     "], trained accuracy " + fmt(trained.best_accuracy)};
}

// ---------------------------------------------------------------------------
// 5 and 6. Adders built from trained 4-bit units.

const Rbm& trained_adder4() {
  static const Rbm model = [] {
    TrainConfig c;
    c.batch_size = 64;
    c.k_max = 20;
    return train({TaskKind::Adder, 4}, default_hidden_units({TaskKind::Adder, 4}), c).model;
  }();
  return model;
}

double accuracy_on(const MergedModel& m, Operation op, std::size_t width, std::uint64_t seed) {
  Rng rng(seed);
  SolveSettings s;
  s.chains = 4;
  s.samples = 1000;
  s.burn_in = 1000;
  std::size_t ok = 0;
  for (std::size_t i = 0; i < 100; ++i) {
    const TaskSpec t = random_task(op, width, rng);
    s.seed = derive_seed(seed, i);
    ok += solve(m, t, s).correct;
  }
  return static_cast<double>(ok) / 100.0;
}

Outcome adder_solving() {
  const MergedModel a16 = build_adder(16, MergedModel(trained_adder4()));
  const double acc = accuracy_on(a16, Operation::Add, 16, 1005);
  return {acc >= 0.95, "16-bit addition accuracy " + fmt(acc) + " (1000 samples, 4 chains, burn-in 1000)"};
}

Outcome invertibility() {
  const MergedModel a8 = build_adder(8, MergedModel(trained_adder4()));
  const double sub = accuracy_on(a8, Operation::Subtract, 8, 1006);
  const double rc = accuracy_on(a8, Operation::ReverseCarry, 8, 1007);
  return {sub >= 0.9 && rc >= 0.8, "8-bit subtraction accuracy " + fmt(sub) + ", reverse-carry accuracy " + fmt(rc)};
}

// ---------------------------------------------------------------------------
// 7. Factoring with an 8-bit-input multiplier.

Outcome factoring() {
  const MergedModel m = build_multiplier(8, builtin_model("mult4"), builtin_model("adder4"));
  const std::uint64_t semiprimes[] = {106, 111, 115, 119, 121, 133, 143, 187, 209, 221};
  SolveSettings s;
  s.chains = 16;
  s.samples = 100000;
  s.burn_in = 1000;
  for (int r = 0; r < 8; ++r) s.betas.push_back(0.5 * std::pow(2.0, r / 7.0));
  s.betas.back() = 1.0;
  std::size_t ok = 0;
  std::string detail;
  for (std::uint64_t p : semiprimes) {
    TaskSpec t;
    t.operation = Operation::Factor;
    t.bit_width = 8;
    t.operands = {{"P", p}};
    s.seed = derive_seed(1007, p);
    const Solution sol = solve(m, t, s);
    ok += sol.correct;
    detail += " " + std::to_string(p) + "->" + std::to_string(sol.values.at("A")) + "x" +
              std::to_string(sol.values.at("B")) + (sol.correct ? "" : "(wrong)");
  }
  return {ok >= 8, std::to_string(ok) + "/10 factored:" + detail};
}

// ---------------------------------------------------------------------------
// 8. Training.

Outcome training() {
  const TrainConfig c;
  const auto adder = train({TaskKind::Adder, 1}, 6, c);
  const auto mult = train({TaskKind::Multiplier, 2}, 12, c);
  return {adder.best_accuracy == 1.0 && mult.best_accuracy >= 0.95,
          "1-bit adder accuracy " + fmt(adder.best_accuracy) + ", 2-bit multiplier accuracy " +
              fmt(mult.best_accuracy)};
}

// ---------------------------------------------------------------------------
// 9. KL growth along gate chains.

Outcome kl_trend() {
  std::vector<double> kl;
  for (std::size_t n = 1; n <= 4; ++n) {
    Netlist net;
    for (std::size_t g = 0; g < n; ++g) net.components.push_back({"g" + std::to_string(g), gate(GateKind::And)});
    for (std::size_t g = 0; g + 1 < n; ++g)
      net.connections.push_back({"g" + std::to_string(g) + ".out", "g" + std::to_string(g + 1) + ".in1"});
    const MergedModel m = compose(net);
    const auto d = exact_visible_distribution(m.rbm);
    std::vector<Bits> valid;
    for (std::size_t s = 0; s < d.size(); ++s) {
      const Bits v = d.state(s);
      bool ok = true;
      for (std::size_t g = 0; g < n; ++g) {
        const std::string id = "g" + std::to_string(g);
        ok = ok && v[m.terminal_map.at(id + ".out")] ==
                       (v[m.terminal_map.at(id + ".in1")] & v[m.terminal_map.at(id + ".in2")]);
      }
      if (ok) valid.push_back(v);
    }
    kl.push_back(kl_divergence(uniform_over(d, valid), d));
  }
  bool ok = true;
  std::string detail = "KL by gate count:";
  for (std::size_t n = 1; n <= 4; ++n) {
    const double ratio = kl[n - 1] / (static_cast<double>(n) * kl[0]);
    ok = ok && ratio >= 0.5 && ratio <= 2.0;
    detail += " " + std::to_string(n) + ":" + fmt(kl[n - 1]) + " (ratio " + fmt(ratio) + ")";
  }
  return {ok, detail};
}

// ---------------------------------------------------------------------------
// 10. CLI determinism.

std::string read_all(const fs::path& p) { return read_text(p); }

Outcome cli_determinism(const std::string& cli) {
  if (cli.empty()) return {false, "no --cli given"};
  const fs::path root = fs::temp_directory_path() / "rbmc_acceptance_cli";
  fs::remove_all(root);
  fs::create_directories(root);
  const std::vector<std::pair<std::string, std::string>> runs = {
      {"build", "build -g adder8 --base adder4"},
      {"train", "train -t mult1 --k-max 4"},
      {"solve", "solve -m adder8@adder4 -o add --operand A=100,B=55,Cin=0 --burn-in 500 --samples 2000"},
      {"factor", "solve -m mult4 -o factor --operand P=35 --samples 4000 --betas 0.5,0.75,1"},
      {"bench", "bench -m a1=adder4@adder1 -m a4=adder4 --checkpoints 10,100 --instances 5 --dump-weights true"},
      {"diagnose", "diagnose -m fa1 --ideal fa1 --iat-sweeps 2000"},
      {"inspect", "inspect -m adder8@fa1 --dump-weights true"},
  };
  std::size_t files = 0, identical = 0;
  std::string detail;
  for (const auto& [name, args] : runs) {
    const fs::path first = root / (name + "_first"), again = root / (name + "_replay");
    const std::string run = "\"" + cli + "\" --threads 1 --out-dir \"" + first.string() + "\" " + args + " > /dev/null";
    const std::string replay = "\"" + cli + "\" --threads 3 --out-dir \"" + again.string() + "\" replay \"" +
                               (first / "manifest.json").string() + "\" > /dev/null";
    if (std::system(run.c_str()) != 0 || std::system(replay.c_str()) != 0) {
      detail += " " + name + ":command failed";
      continue;
    }
    for (const auto& e : fs::directory_iterator(first)) {
      if (e.path().extension() != ".csv") continue;
      ++files;
      const fs::path other = again / e.path().filename();
      if (fs::exists(other) && read_all(e.path()) == read_all(other))
        ++identical;
      else
        detail += " " + name + "/" + e.path().filename().string() + ":differs";
    }
  }
  fs::remove_all(root);
  return {files > 0 && identical == files && detail.empty(),
          std::to_string(identical) + "/" + std::to_string(files) + " CSV files byte-identical on replay" + detail};
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Acceptance criteria"};
  std::string cli;
  std::vector<int> only;
  app.add_option("--cli", cli, "path to the rbmc executable");
  app.add_option("--only", only, "criteria to run")->delimiter(',');
  CLI11_PARSE(app, argc, argv);

  const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria = {
      {"merge algebra", merge_algebra},
      {"convergence bound", dobrushin_bound},
      {"full adder distribution", full_adder_mass},
      {"mixing order", mixing_order},
      {"16-bit adder solving", adder_solving},
      {"8-bit invertibility", invertibility},
      {"8-bit factoring", factoring},
      {"training", training},
      {"KL trend", kl_trend},
      {"CLI determinism", [&cli] { return cli_determinism(cli); }},
  };
  const std::set<int> selected(only.begin(), only.end());
  int failed = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    const int id = static_cast<int>(i) + 1;
    if (!selected.empty() && !selected.count(id)) continue;
    const auto t0 = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = criteria[i].second();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    failed += !o.pass;
    std::printf("AC%d %s: %s\n    %s (%.1f s)\n", id, o.pass ? "PASS" : "FAIL", criteria[i].first.c_str(),
                o.detail.c_str(), secs);
    std::fflush(stdout);
  }
  return failed;
}
