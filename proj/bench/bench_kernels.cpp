// Times each OpenMP kernel against its serial reference and checks that both
// produce the same result. Prints a CSV: kernel, size, serial and parallel
// seconds (best of --repeats), speedup, max abs difference.
//
//   bench_kernels [--repeats N] [--threads T]

#include <omp.h>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <functional>
#include <iostream>
#include <limits>
#include <string>

#include <CLI11.hpp>

#include "rbmc/clamp.hpp"
#include "rbmc/io.hpp"
#include "rbmc/kernels.hpp"
#include "rbmc/sampler.hpp"
#include "rbmc/synthesis.hpp"
#include "rbmc/training.hpp"

using namespace rbmc;

namespace {

double best_time(int repeats, const std::function<void()>& f) {
  double best = std::numeric_limits<double>::infinity();
  for (int r = 0; r < repeats; ++r) {
    const auto t0 = std::chrono::steady_clock::now();
    f();
    best = std::min(best, std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count());
  }
  return best;
}

double max_abs_diff(const std::vector<double>& a, const std::vector<double>& b) {
  double d = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) d = std::max(d, std::abs(a[i] - b[i]));
  return d;
}

Rbm random_model(std::size_t nv, std::size_t nh, std::uint64_t seed) {
  Rng rng(seed);
  std::vector<std::string> names;
  for (std::size_t i = 0; i < nv; ++i) names.push_back("v" + std::to_string(i));
  std::vector<double> b(nv), a(nh), w(nv * nh);
  for (double& x : b) x = rng.uniform() - 0.5;
  for (double& x : a) x = rng.uniform() - 0.5;
  for (double& x : w) x = 2.0 * rng.uniform() - 1.0;
  return Rbm(names, b, a, w);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Serial versus OpenMP kernel benchmark"};
  int repeats = 3, threads = 0;
  app.add_option("--repeats", repeats, "timed repetitions per kernel")->check(CLI::PositiveNumber);
  app.add_option("--threads", threads, "OpenMP threads (0 = runtime default)")->check(CLI::NonNegativeNumber);
  CLI11_PARSE(app, argc, argv);
  if (threads > 0) omp_set_num_threads(threads);

  CsvWriter csv({"kernel", "size", "threads", "serial_s", "parallel_s", "speedup", "max_abs_diff"});
  auto report = [&](const std::string& kernel, const std::string& size, double ts, double tp, double diff) {
    csv.row({kernel, size, std::to_string(max_threads()), format_double(ts), format_double(tp),
             format_double(ts / tp), format_double(diff)});
  };

  for (std::size_t nv : {16, 20}) {
    const Rbm r = random_model(nv, 64, 1);
    const ResolvedClamp c = resolve(r, ClampMask{});
    std::vector<double> s, p;
    const double ts = best_time(repeats, [&] { s = kernels::free_energy_table_serial(r, c); });
    const double tp = best_time(repeats, [&] { p = kernels::free_energy_table_parallel(r, c); });
    report("free_energy_table", std::to_string(nv) + "x64", ts, tp, max_abs_diff(s, p));
  }

  {
    const TrainingTask task{TaskKind::Adder, 4};
    Rng rng(2);
    const auto data = generate_dataset(task, std::nullopt, rng);
    const auto params = RbmParameters::from(random_model(task_terminals(task).size(), 128, 3));
    RbmParameters gs = params, gp = params;
    CdStats ss, sp;
    const double ts = best_time(repeats, [&] { kernels::cd_gradient_serial(params, data, 5, true, 9, gs, ss); });
    const double tp = best_time(repeats, [&] { kernels::cd_gradient_parallel(params, data, 5, true, 9, gp, sp); });
    report("cd_gradient", std::to_string(data.size()) + " rows k=5", ts, tp, max_abs_diff(gs.weights, gp.weights));
  }

  {
    const MergedModel m = build_adder(16, builtin_model("adder1"));
    MultistartSettings ms;
    ms.n_chains = 16;
    ms.sweeps_per_chain = 2000;
    Histogram hs, hp;
    ms.exec = Exec::Serial;
    const double ts = best_time(repeats, [&] { hs = multistart(m.rbm, ClampMask{}, ms); });
    ms.exec = Exec::Parallel;
    const double tp = best_time(repeats, [&] { hp = multistart(m.rbm, ClampMask{}, ms); });
    report("multistart", "adder16 16x2000", ts, tp, hs.counts == hp.counts ? 0.0 : 1.0);
  }

  std::cout << csv.str();
  return 0;
}
