#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "rbmc/clamp.hpp"
#include "rbmc/kernels.hpp"
#include "rbmc/rbm.hpp"
#include "rbmc/rng.hpp"

namespace rbmc {

// Counts of observed assignments. Keys are '0'/'1' strings, character k
// holding the bit of observed unit k; std::string ordering is therefore the
// lexicographic order on bit vectors.
struct Histogram {
  std::vector<std::size_t> units;  // observed visible indices
  std::map<std::string, std::uint64_t> counts;
  std::uint64_t total = 0;

  void add(const std::string& key, std::uint64_t n = 1);
  void merge(const Histogram& other);
};

struct ChainTrace {
  std::uint64_t seed = 0;
  std::vector<Bits> states;          // recorded visible vectors
  std::vector<double> energy_trace;  // free energy at each recorded step
  std::vector<std::string> keys;     // observed key at each recorded step
};

struct ChainSettings {
  std::size_t n_sweeps = 1000;
  std::size_t burn_in = 0;
  // Replica exchange: when non-empty, one replica runs at each listed inverse
  // temperature (strictly increasing, last entry 1) and neighbouring replicas
  // propose swaps after every sweep. Only the beta = 1 replica is recorded.
  std::vector<double> betas;
  std::size_t thin = 1;
  std::uint64_t seed = 1;
  bool record_states = true;
  bool record_energy = true;
  bool record_keys = false;
  // Visible indices to histogram; empty means every free unit.
  std::vector<std::size_t> observe;
};

struct ChainResult {
  ChainTrace trace;
  Histogram histogram;
};

// Sparse view of an RBM for block-Gibbs sampling under a fixed clamp. Merged
// circuits are mostly zero blocks, so couplings are kept per unit as
// (index, weight) lists with exact zeros dropped. Holds a pointer to the
// model, which must outlive the sampler.
class GibbsSampler {
 public:
  GibbsSampler(const Rbm& rbm, const ClampMask& clamp);
  GibbsSampler(const Rbm& rbm, ResolvedClamp clamp);

  const Rbm& rbm() const { return *rbm_; }
  const ResolvedClamp& clamp() const { return clamp_; }

  // Free units uniform at random, clamped units set, hidden units zero.
  BinaryState initial_state(Rng& rng) const;

  // Resample every hidden unit given v, then every free visible unit given h,
  // at inverse temperature beta. Consumes one uniform per hidden unit then one
  // per free visible unit, in index order. Throws InvalidArgument if `state`
  // violates the clamp.
  void sweep(BinaryState& state, Rng& rng, double beta = 1.0) const;

  double free_energy(std::span<const std::uint8_t> v) const;
  double energy(const BinaryState& state) const;

  std::string key(std::span<const std::uint8_t> v, const std::vector<std::size_t>& units) const;

  ChainResult run_chain(const ChainSettings& settings) const;

 private:
  // Returns the energy of (v, h) after resampling h.
  double sample_hidden(BinaryState& state, Rng& rng, double beta) const;
  void sample_visible(BinaryState& state, Rng& rng, double beta) const;

  const Rbm* rbm_;
  ResolvedClamp clamp_;
  // hidden j -> couplings to visible units, and visible i -> hidden units.
  std::vector<std::size_t> h_start_, h_idx_;
  std::vector<double> h_w_;
  std::vector<std::size_t> v_start_, v_idx_;
  std::vector<double> v_w_;
};

BinaryState gibbs_sweep(const Rbm& rbm, BinaryState state, const ClampMask& clamp, Rng& rng);

ChainResult run_chain(const Rbm& rbm, const ClampMask& clamp, const ChainSettings& settings);

struct MultistartSettings {
  std::size_t n_chains = 16;
  std::size_t sweeps_per_chain = 1000;
  std::size_t burn_in = 0;
  std::vector<double> betas;
  std::size_t thin = 1;
  std::uint64_t seed = 1;
  // Explicit per-chain seeds; when empty chain c uses derive_seed(seed, c).
  std::vector<std::uint64_t> seeds;
  std::vector<std::size_t> observe;
  Exec exec = Exec::Parallel;
};

std::uint64_t chain_seed(const MultistartSettings& settings, std::size_t chain);

// Independent chains pooled into one histogram; chain results are merged in
// chain order regardless of execution.
Histogram multistart(const GibbsSampler& sampler, const MultistartSettings& settings);
Histogram multistart(const Rbm& rbm, const ClampMask& clamp, const MultistartSettings& settings);

// Most frequent key; ties go to the lexicographically smallest key.
std::pair<std::string, std::uint64_t> mode_estimate(const Histogram& histogram);

// AR(0..max_lag) of a scalar trace, normalized by the lag-0 sum of squares.
std::vector<double> autocorrelation(const std::vector<double>& trace, std::size_t max_lag);

// 1 + 2 sum_{k=1..M} AR(k) with Sokal's self-consistent window: the smallest
// M with M >= window * tau(M).
double integrated_autocorrelation_time(const std::vector<double>& trace, double window = 5.0);

// One inference problem for success curves: what to clamp, what to read
// back, and whether a read-back key is a correct answer.
struct InferenceQuery {
  ClampMask clamp;
  std::vector<std::size_t> observe;
  std::function<bool(const std::string&)> correct;
  // Overrides mode_estimate when set (e.g. pooling symmetric answers).
  std::function<std::string(const Histogram&)> pick;
};

struct CurveSettings {
  std::vector<std::size_t> checkpoints;  // pooled recorded samples, ascending, >= 1
  std::size_t n_chains = 1;
  std::size_t samples = 0;  // samples collected per query; 0 = last checkpoint
  std::size_t burn_in = 0;
  std::uint64_t seed = 1;
  Exec exec = Exec::Parallel;
};

struct CurvePoint {
  std::size_t samples;
  double accuracy;
};

// Fraction of queries whose pooled mode is correct at each checkpoint. Chain
// c contributes its first floor(s / C) samples (plus one if c < s mod C) to
// checkpoint s. Query q uses base seed derive_seed(seed, q).
std::vector<CurvePoint> success_curve(const Rbm& rbm, const std::vector<InferenceQuery>& queries,
                                      const CurveSettings& settings);

}  // namespace rbmc
