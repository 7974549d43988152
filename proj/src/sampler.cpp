#include "rbmc/sampler.hpp"

#include <algorithm>
#include <cmath>

#include "rbmc/error.hpp"

namespace rbmc {

void Histogram::add(const std::string& key, std::uint64_t n) {
  counts[key] += n;
  total += n;
}

void Histogram::merge(const Histogram& other) {
  if (units.empty()) units = other.units;
  for (const auto& [k, n] : other.counts) counts[k] += n;
  total += other.total;
}

GibbsSampler::GibbsSampler(const Rbm& rbm, const ClampMask& clamp) : GibbsSampler(rbm, resolve(rbm, clamp)) {}

GibbsSampler::GibbsSampler(const Rbm& rbm, ResolvedClamp clamp) : rbm_(&rbm), clamp_(std::move(clamp)) {
  const std::size_t nv = rbm.n_visible();
  const std::size_t nh = rbm.n_hidden();
  if (clamp_.base.size() != nv) throw DimensionError("clamp was resolved against a different model");
  std::vector<std::size_t> h_count(nh, 0);
  v_start_.assign(nv + 1, 0);
  for (std::size_t i = 0; i < nv; ++i) {
    const auto r = rbm.row(i);
    for (std::size_t j = 0; j < nh; ++j)
      if (r[j] != 0.0) {
        v_idx_.push_back(j);
        v_w_.push_back(r[j]);
        ++h_count[j];
      }
    v_start_[i + 1] = v_idx_.size();
  }
  h_start_.assign(nh + 1, 0);
  for (std::size_t j = 0; j < nh; ++j) h_start_[j + 1] = h_start_[j] + h_count[j];
  h_idx_.resize(v_idx_.size());
  h_w_.resize(v_w_.size());
  std::vector<std::size_t> fill(h_start_.begin(), h_start_.end() - 1);
  for (std::size_t i = 0; i < nv; ++i)
    for (std::size_t p = v_start_[i]; p < v_start_[i + 1]; ++p) {
      const std::size_t j = v_idx_[p];
      h_idx_[fill[j]] = i;
      h_w_[fill[j]] = v_w_[p];
      ++fill[j];
    }
}

BinaryState GibbsSampler::initial_state(Rng& rng) const {
  BinaryState s{clamp_.base, Bits(rbm_->n_hidden(), 0)};
  for (std::size_t i : clamp_.free) s.visible[i] = static_cast<std::uint8_t>(rng.next() >> 63);
  return s;
}

double GibbsSampler::sample_hidden(BinaryState& state, Rng& rng, double beta) const {
  const auto& a = rbm_->hidden_bias();
  const auto& b = rbm_->visible_bias();
  const auto& v = state.visible;
  double e = 0.0;
  for (std::size_t j = 0; j < a.size(); ++j) {
    double x = a[j];
    for (std::size_t p = h_start_[j]; p < h_start_[j + 1]; ++p) x += v[h_idx_[p]] ? h_w_[p] : 0.0;
    state.hidden[j] = rng.uniform() < sigmoid(beta * x);
    if (state.hidden[j]) e -= x;
  }
  for (std::size_t i = 0; i < b.size(); ++i)
    if (v[i]) e -= b[i];
  return e;
}

void GibbsSampler::sample_visible(BinaryState& state, Rng& rng, double beta) const {
  const auto& b = rbm_->visible_bias();
  const auto& h = state.hidden;
  for (std::size_t i : clamp_.free) {
    double x = b[i];
    for (std::size_t p = v_start_[i]; p < v_start_[i + 1]; ++p) x += h[v_idx_[p]] ? v_w_[p] : 0.0;
    state.visible[i] = rng.uniform() < sigmoid(beta * x);
  }
}

void GibbsSampler::sweep(BinaryState& state, Rng& rng, double beta) const {
  if (state.visible.size() != rbm_->n_visible() || state.hidden.size() != rbm_->n_hidden())
    throw DimensionError("state does not match the model");
  if (!clamp_.consistent(state.visible)) throw InvalidArgument("state violates the clamp");
  sample_hidden(state, rng, beta);
  sample_visible(state, rng, beta);
}

double GibbsSampler::energy(const BinaryState& state) const {
  const auto& a = rbm_->hidden_bias();
  const auto& b = rbm_->visible_bias();
  double e = 0.0;
  for (std::size_t i = 0; i < b.size(); ++i)
    if (state.visible[i]) e -= b[i];
  for (std::size_t j = 0; j < a.size(); ++j) {
    if (!state.hidden[j]) continue;
    double x = a[j];
    for (std::size_t p = h_start_[j]; p < h_start_[j + 1]; ++p)
      if (state.visible[h_idx_[p]]) x += h_w_[p];
    e -= x;
  }
  return e;
}

double GibbsSampler::free_energy(std::span<const std::uint8_t> v) const {
  const auto& a = rbm_->hidden_bias();
  const auto& b = rbm_->visible_bias();
  double f = 0.0;
  for (std::size_t i = 0; i < v.size(); ++i)
    if (v[i]) f -= b[i];
  for (std::size_t j = 0; j < a.size(); ++j) {
    double x = a[j];
    for (std::size_t p = h_start_[j]; p < h_start_[j + 1]; ++p)
      if (v[h_idx_[p]]) x += h_w_[p];
    f -= softplus(x);
  }
  return f;
}

std::string GibbsSampler::key(std::span<const std::uint8_t> v, const std::vector<std::size_t>& units) const {
  std::string k(units.size(), '0');
  for (std::size_t u = 0; u < units.size(); ++u)
    if (v[units[u]]) k[u] = '1';
  return k;
}

ChainResult GibbsSampler::run_chain(const ChainSettings& settings) const {
  if (settings.thin == 0) throw InvalidArgument("thin must be at least 1");
  if (settings.n_sweeps <= settings.burn_in) throw InvalidArgument("n_sweeps must exceed burn_in");
  for (std::size_t r = 0; r < settings.betas.size(); ++r)
    if (!(settings.betas[r] > 0.0) || (r > 0 && !(settings.betas[r] > settings.betas[r - 1])))
      throw InvalidArgument("tempering betas must be positive and strictly increasing");
  if (!settings.betas.empty() && settings.betas.back() != 1.0)
    throw InvalidArgument("the last tempering beta must be 1");
  const std::vector<std::size_t>& observe = settings.observe.empty() ? clamp_.free : settings.observe;
  for (std::size_t u : observe)
    if (u >= rbm_->n_visible()) throw DimensionError("observed unit out of range");

  ChainResult out;
  out.trace.seed = settings.seed;
  out.histogram.units = observe;
  const std::size_t expected = (settings.n_sweeps - settings.burn_in) / settings.thin;
  if (settings.record_states) out.trace.states.reserve(expected);
  if (settings.record_energy) out.trace.energy_trace.reserve(expected);
  if (settings.record_keys) out.trace.keys.reserve(expected);

  Rng rng(settings.seed);
  BinaryState state = initial_state(rng);
  // Replicas at betas[0..R-2]; `state` is always the beta = 1 replica.
  const std::size_t n_hot = settings.betas.empty() ? 0 : settings.betas.size() - 1;
  std::vector<BinaryState> hot;
  for (std::size_t r = 0; r < n_hot; ++r) hot.push_back(initial_state(rng));
  auto replica = [&](std::size_t r) -> BinaryState& { return r < n_hot ? hot[r] : state; };
  std::vector<double> energies(n_hot + 1, 0.0);
  for (std::size_t t = 1; t <= settings.n_sweeps; ++t) {
    for (std::size_t r = 0; r < n_hot; ++r) energies[r] = sample_hidden(hot[r], rng, settings.betas[r]);
    energies[n_hot] = sample_hidden(state, rng, 1.0);
    // Swaps are proposed between the two half-sweeps, where the joint energies
    // are known. Even pairs on odd sweeps, odd pairs on even sweeps.
    for (std::size_t r = t % 2; r + 1 <= n_hot; r += 2) {
      const double log_accept = (settings.betas[r + 1] - settings.betas[r]) * (energies[r + 1] - energies[r]);
      if (log_accept >= 0.0 || rng.uniform() < std::exp(log_accept)) std::swap(replica(r), replica(r + 1));
    }
    for (std::size_t r = 0; r < n_hot; ++r) sample_visible(hot[r], rng, settings.betas[r]);
    sample_visible(state, rng, 1.0);
    if (t <= settings.burn_in || (t - settings.burn_in) % settings.thin != 0) continue;
    std::string k = key(state.visible, observe);
    if (settings.record_states) out.trace.states.push_back(state.visible);
    if (settings.record_energy) out.trace.energy_trace.push_back(free_energy(state.visible));
    out.histogram.add(k);
    if (settings.record_keys) out.trace.keys.push_back(std::move(k));
  }
  return out;
}

BinaryState gibbs_sweep(const Rbm& rbm, BinaryState state, const ClampMask& clamp, Rng& rng) {
  GibbsSampler(rbm, clamp).sweep(state, rng);
  return state;
}

ChainResult run_chain(const Rbm& rbm, const ClampMask& clamp, const ChainSettings& settings) {
  return GibbsSampler(rbm, clamp).run_chain(settings);
}

std::uint64_t chain_seed(const MultistartSettings& settings, std::size_t chain) {
  if (!settings.seeds.empty()) {
    if (settings.seeds.size() != settings.n_chains)
      throw InvalidArgument("explicit seed list must have one seed per chain");
    return settings.seeds[chain];
  }
  return derive_seed(settings.seed, chain);
}

Histogram multistart(const GibbsSampler& sampler, const MultistartSettings& settings) {
  if (settings.n_chains == 0) throw InvalidArgument("multistart needs at least one chain");
  std::vector<Histogram> per_chain(settings.n_chains);
  auto run_one = [&](std::size_t c) {
    ChainSettings cs;
    cs.n_sweeps = settings.sweeps_per_chain;
    cs.burn_in = settings.burn_in;
    cs.betas = settings.betas;
    cs.thin = settings.thin;
    cs.seed = chain_seed(settings, c);
    cs.record_states = false;
    cs.record_energy = false;
    cs.observe = settings.observe;
    per_chain[c] = sampler.run_chain(cs).histogram;
  };
  // Validate once up front so errors surface outside the parallel region.
  for (std::size_t c = 0; c < settings.n_chains; ++c) chain_seed(settings, c);
  if (settings.thin == 0 || settings.sweeps_per_chain <= settings.burn_in)
    throw InvalidArgument("sweeps_per_chain must exceed burn_in and thin must be at least 1");

  if (settings.exec == Exec::Parallel) {
#pragma omp parallel for schedule(dynamic)
    for (std::ptrdiff_t c = 0; c < static_cast<std::ptrdiff_t>(settings.n_chains); ++c)
      run_one(static_cast<std::size_t>(c));
  } else {
    for (std::size_t c = 0; c < settings.n_chains; ++c) run_one(c);
  }
  Histogram pooled;
  for (const auto& h : per_chain) pooled.merge(h);
  return pooled;
}

Histogram multistart(const Rbm& rbm, const ClampMask& clamp, const MultistartSettings& settings) {
  return multistart(GibbsSampler(rbm, clamp), settings);
}

std::pair<std::string, std::uint64_t> mode_estimate(const Histogram& histogram) {
  if (histogram.total == 0 || histogram.counts.empty()) throw InvalidArgument("histogram is empty");
  auto best = histogram.counts.begin();
  for (auto it = histogram.counts.begin(); it != histogram.counts.end(); ++it)
    if (it->second > best->second) best = it;
  return *best;
}

std::vector<double> autocorrelation(const std::vector<double>& trace, std::size_t max_lag) {
  if (max_lag == 0 || trace.size() <= max_lag)
    throw InvalidArgument("autocorrelation needs 1 <= max_lag < trace length");
  double mean = 0.0;
  for (double x : trace) mean += x;
  mean /= static_cast<double>(trace.size());
  std::vector<double> c(trace.size());
  double c0 = 0.0;
  for (std::size_t t = 0; t < trace.size(); ++t) {
    c[t] = trace[t] - mean;
    c0 += c[t] * c[t];
  }
  if (!(c0 > 0.0)) throw InvalidArgument("autocorrelation of a constant trace is undefined");
  std::vector<double> ar(max_lag + 1);
  ar[0] = 1.0;
  for (std::size_t k = 1; k <= max_lag; ++k) {
    double s = 0.0;
    for (std::size_t t = 0; t + k < c.size(); ++t) s += c[t] * c[t + k];
    ar[k] = s / c0;
  }
  return ar;
}

double integrated_autocorrelation_time(const std::vector<double>& trace, double window) {
  if (trace.size() < 4) throw InvalidArgument("trace too short for an autocorrelation time");
  double mean = 0.0;
  for (double x : trace) mean += x;
  mean /= static_cast<double>(trace.size());
  std::vector<double> c(trace.size());
  double c0 = 0.0;
  for (std::size_t t = 0; t < trace.size(); ++t) {
    c[t] = trace[t] - mean;
    c0 += c[t] * c[t];
  }
  if (!(c0 > 0.0)) throw InvalidArgument("autocorrelation of a constant trace is undefined");
  double tau = 1.0;
  const std::size_t max_lag = trace.size() / 2;
  for (std::size_t m = 1; m <= max_lag; ++m) {
    double s = 0.0;
    for (std::size_t t = 0; t + m < c.size(); ++t) s += c[t] * c[t + m];
    tau += 2.0 * s / c0;
    if (static_cast<double>(m) >= window * tau) break;
  }
  return tau;
}

std::vector<CurvePoint> success_curve(const Rbm& rbm, const std::vector<InferenceQuery>& queries,
                                      const CurveSettings& settings) {
  if (settings.checkpoints.empty()) throw InvalidArgument("success curve needs at least one checkpoint");
  if (settings.n_chains == 0) throw InvalidArgument("success curve needs at least one chain");
  for (std::size_t i = 0; i < settings.checkpoints.size(); ++i) {
    if (settings.checkpoints[i] == 0) throw InvalidArgument("checkpoints must be at least 1");
    if (i > 0 && settings.checkpoints[i] <= settings.checkpoints[i - 1])
      throw InvalidArgument("checkpoints must be strictly increasing");
  }
  const std::size_t collected = settings.samples ? settings.samples : settings.checkpoints.back();
  if (settings.checkpoints.back() > collected)
    throw InvalidArgument("checkpoint exceeds the number of collected samples");
  const std::size_t chains = settings.n_chains;
  const std::size_t per_chain = (collected + chains - 1) / chains;

  // Resolve clamps up front so errors surface outside the parallel region.
  std::vector<GibbsSampler> samplers;
  samplers.reserve(queries.size());
  for (const auto& q : queries) samplers.emplace_back(rbm, q.clamp);

  std::vector<std::vector<std::uint8_t>> correct(queries.size(),
                                                 std::vector<std::uint8_t>(settings.checkpoints.size(), 0));
  auto run_query = [&](std::size_t q) {
    const std::uint64_t base = derive_seed(settings.seed, q);
    std::vector<std::vector<std::string>> keys(chains);
    for (std::size_t c = 0; c < chains; ++c) {
      ChainSettings cs;
      cs.n_sweeps = settings.burn_in + per_chain;
      cs.burn_in = settings.burn_in;
      cs.seed = derive_seed(base, c);
      cs.record_states = false;
      cs.record_energy = false;
      cs.record_keys = true;
      cs.observe = queries[q].observe;
      keys[c] = samplers[q].run_chain(cs).trace.keys;
    }
    Histogram h;
    std::vector<std::size_t> used(chains, 0);
    for (std::size_t i = 0; i < settings.checkpoints.size(); ++i) {
      const std::size_t s = settings.checkpoints[i];
      for (std::size_t c = 0; c < chains; ++c) {
        const std::size_t want = s / chains + (c < s % chains ? 1 : 0);
        for (; used[c] < want; ++used[c]) h.add(keys[c][used[c]]);
      }
      const std::string answer = queries[q].pick ? queries[q].pick(h) : mode_estimate(h).first;
      correct[q][i] = queries[q].correct(answer) ? 1 : 0;
    }
  };
  if (settings.exec == Exec::Parallel) {
#pragma omp parallel for schedule(dynamic)
    for (std::ptrdiff_t q = 0; q < static_cast<std::ptrdiff_t>(queries.size()); ++q)
      run_query(static_cast<std::size_t>(q));
  } else {
    for (std::size_t q = 0; q < queries.size(); ++q) run_query(q);
  }

  std::vector<CurvePoint> curve;
  for (std::size_t i = 0; i < settings.checkpoints.size(); ++i) {
    std::size_t ok = 0;
    for (const auto& row : correct) ok += row[i];
    curve.push_back({settings.checkpoints[i],
                     queries.empty() ? 0.0 : static_cast<double>(ok) / static_cast<double>(queries.size())});
  }
  return curve;
}

}  // namespace rbmc
