#include "rbmc/exact.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <limits>
#include <map>

#include <Eigen/Eigenvalues>

#include "rbmc/error.hpp"

namespace rbmc {

namespace {

// Normalizes exp(-f) in place; returns log sum exp(-f).
double normalize_neg_log(std::vector<double>& f) {
  double lo = std::numeric_limits<double>::infinity();
  for (double x : f) lo = std::min(lo, x);
  double sum = 0.0;
  for (double& x : f) {
    x = std::exp(-(x - lo));
    sum += x;
  }
  for (double& x : f) x /= sum;
  return -lo + std::log(sum);
}

void check_same_support(const ExactDistribution& q, const ExactDistribution& p) {
  if (q.free_units != p.free_units || q.base != p.base || q.size() != p.size())
    throw InvalidArgument("distributions are over different supports");
}

std::size_t state_index(const ExactDistribution& dist, const Bits& v) {
  if (v.size() != dist.base.size()) throw DimensionError("state length does not match the distribution");
  std::size_t s = 0;
  for (std::size_t k = 0; k < dist.free_units.size(); ++k) s |= std::size_t{v[dist.free_units[k]]} << k;
  for (std::size_t i = 0; i < v.size(); ++i)
    if (v[i] != dist.base[i] &&
        std::find(dist.free_units.begin(), dist.free_units.end(), i) == dist.free_units.end())
      return SIZE_MAX;
  return s;
}

}  // namespace

Bits ExactDistribution::state(std::size_t s) const {
  Bits v = base;
  for (std::size_t k = 0; k < free_units.size(); ++k) v[free_units[k]] = (s >> k) & 1U;
  return v;
}

double ExactDistribution::partition_function() const { return std::exp(log_partition); }

ExactDistribution exact_visible_distribution(const Rbm& rbm, const ClampMask& clamp,
                                             const ExactLimits& limits, Exec exec) {
  const ResolvedClamp rc = resolve(rbm, clamp);
  if (rc.free.size() > limits.max_free_visible)
    throw TooLarge(std::to_string(rc.free.size()) + " free visible units exceed the enumeration limit of " +
                   std::to_string(limits.max_free_visible));
  if (rbm.n_hidden() > limits.max_hidden)
    throw TooLarge(std::to_string(rbm.n_hidden()) + " hidden units exceed the enumeration limit of " +
                   std::to_string(limits.max_hidden));
  ExactDistribution d;
  d.base = rc.base;
  d.free_units = rc.free;
  d.probabilities = kernels::free_energy_table(rbm, rc, exec);
  d.log_partition = normalize_neg_log(d.probabilities);
  return d;
}

ExactDistribution marginalize(const ExactDistribution& dist, const std::vector<std::size_t>& units) {
  std::vector<std::size_t> pos;
  for (std::size_t u : units) {
    auto it = std::find(dist.free_units.begin(), dist.free_units.end(), u);
    if (it == dist.free_units.end()) throw InvalidArgument("marginal unit is not a free unit");
    pos.push_back(static_cast<std::size_t>(it - dist.free_units.begin()));
  }
  ExactDistribution m;
  m.base = dist.base;
  m.free_units = units;
  m.log_partition = dist.log_partition;
  m.probabilities.assign(std::size_t{1} << units.size(), 0.0);
  for (std::size_t s = 0; s < dist.size(); ++s) {
    std::size_t t = 0;
    for (std::size_t k = 0; k < pos.size(); ++k) t |= ((s >> pos[k]) & 1U) << k;
    m.probabilities[t] += dist.probabilities[s];
  }
  return m;
}

ExactDistribution uniform_over(const ExactDistribution& like, const std::vector<Bits>& valid) {
  ExactDistribution u = like;
  std::fill(u.probabilities.begin(), u.probabilities.end(), 0.0);
  std::size_t count = 0;
  for (const auto& v : valid) {
    const std::size_t s = state_index(like, v);
    if (s == SIZE_MAX) continue;
    if (u.probabilities[s] == 0.0) ++count;
    u.probabilities[s] = 1.0;
  }
  if (count == 0) throw InvalidArgument("no valid state lies in the support");
  for (double& p : u.probabilities) p /= static_cast<double>(count);
  u.log_partition = std::log(static_cast<double>(count));
  return u;
}

double kl_divergence(const ExactDistribution& q, const ExactDistribution& p) {
  check_same_support(q, p);
  double kl = 0.0;
  for (std::size_t s = 0; s < q.size(); ++s) {
    const double qs = q.probabilities[s];
    if (qs == 0.0) continue;
    const double ps = p.probabilities[s];
    if (ps == 0.0) throw InvalidArgument("q is not absolutely continuous with respect to p");
    kl += qs * std::log(qs / ps);
  }
  return std::max(kl, 0.0);
}

double mass_on(const ExactDistribution& dist, const std::vector<Bits>& states) {
  double m = 0.0;
  std::vector<bool> seen(dist.size(), false);
  for (const auto& v : states) {
    const std::size_t s = state_index(dist, v);
    if (s == SIZE_MAX || seen[s]) continue;
    seen[s] = true;
    m += dist.probabilities[s];
  }
  return m;
}

double l1_distance(const std::vector<double>& p, const std::vector<double>& q) {
  if (p.size() != q.size()) throw DimensionError("distribution sizes differ");
  double d = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) d += std::abs(p[i] - q[i]);
  return d;
}

double tv_distance(const std::vector<double>& p, const std::vector<double>& q) {
  return 0.5 * l1_distance(p, q);
}

double delta_exact(const Rbm& rbm, const ExactLimits& limits) {
  if (rbm.n_visible() > limits.max_free_visible)
    throw TooLarge("delta_exact enumerates visible states; model is too large");
  const std::size_t nv = rbm.n_visible();
  double hi = -std::numeric_limits<double>::infinity();
  double lo = std::numeric_limits<double>::infinity();
  Bits v(nv, 0);
  for (std::size_t s = 0; s < (std::size_t{1} << nv); ++s) {
    for (std::size_t i = 0; i < nv; ++i) v[i] = (s >> i) & 1U;
    const auto x = hidden_preactivation(rbm, v);
    double lin = 0.0;
    for (std::size_t i = 0; i < nv; ++i)
      if (v[i]) lin -= rbm.visible_bias()[i];
    double e_min = lin;
    double e_max = lin;
    for (double xj : x) {
      e_min -= std::max(xj, 0.0);
      e_max -= std::min(xj, 0.0);
    }
    hi = std::max(hi, e_max);
    lo = std::min(lo, e_min);
  }
  return hi - lo;
}

double delta_bound(const Rbm& rbm) {
  double s = 0.0;
  for (double x : rbm.weights()) s += std::abs(x);
  for (double x : rbm.hidden_bias()) s += std::abs(x);
  for (double x : rbm.visible_bias()) s += std::abs(x);
  return s;
}

double convergence_bound(double delta, double initial_l1, std::size_t steps) {
  if (!(delta >= 0.0) || !std::isfinite(delta)) throw InvalidArgument("delta must be finite and >= 0");
  if (!(initial_l1 >= 0.0 && initial_l1 <= 2.0))
    throw InvalidArgument("initial distance must lie in [0, 2]");
  // 1 - e^{-2 delta} via expm1 keeps precision for small delta.
  const double rate = -std::expm1(-2.0 * delta);
  return 0.5 * initial_l1 * std::pow(rate, static_cast<double>(steps));
}

std::vector<double> exact_joint_distribution(const Rbm& rbm, std::size_t max_joint_units) {
  const std::size_t nv = rbm.n_visible();
  const std::size_t nh = rbm.n_hidden();
  if (nv + nh > max_joint_units) throw TooLarge("joint enumeration limit exceeded");
  std::vector<double> e(std::size_t{1} << (nv + nh));
  BinaryState st{Bits(nv), Bits(nh)};
  for (std::size_t x = 0; x < e.size(); ++x) {
    for (std::size_t i = 0; i < nv; ++i) st.visible[i] = (x >> i) & 1U;
    for (std::size_t j = 0; j < nh; ++j) st.hidden[j] = (x >> (nv + j)) & 1U;
    e[x] = energy(rbm, st);
  }
  normalize_neg_log(e);
  return e;
}

GibbsTransition::GibbsTransition(const Rbm& rbm, const ExactLimits& limits)
    : nv_(rbm.n_visible()), nh_(rbm.n_hidden()), max_dense_(limits.max_dense_units) {
  if (nv_ + nh_ > limits.max_joint_units)
    throw TooLarge("transition operator limited to " + std::to_string(limits.max_joint_units) +
                   " joint units");
  const std::size_t sv = std::size_t{1} << nv_;
  const std::size_t sh = std::size_t{1} << nh_;
  p_h_given_v_.resize(sv * sh);
  p_v_given_h_.resize(sh * sv);
  Bits v(nv_), h(nh_);
  for (std::size_t vs = 0; vs < sv; ++vs) {
    for (std::size_t i = 0; i < nv_; ++i) v[i] = (vs >> i) & 1U;
    const auto x = hidden_preactivation(rbm, v);
    double norm = 0.0;
    for (double xj : x) norm += softplus(xj);
    for (std::size_t hs = 0; hs < sh; ++hs) {
      double lp = -norm;
      for (std::size_t j = 0; j < nh_; ++j)
        if ((hs >> j) & 1U) lp += x[j];
      p_h_given_v_[vs * sh + hs] = std::exp(lp);
    }
  }
  for (std::size_t hs = 0; hs < sh; ++hs) {
    for (std::size_t j = 0; j < nh_; ++j) h[j] = (hs >> j) & 1U;
    const auto x = visible_preactivation(rbm, h);
    double norm = 0.0;
    for (double xi : x) norm += softplus(xi);
    for (std::size_t vs = 0; vs < sv; ++vs) {
      double lp = -norm;
      for (std::size_t i = 0; i < nv_; ++i)
        if ((vs >> i) & 1U) lp += x[i];
      p_v_given_h_[hs * sv + vs] = std::exp(lp);
    }
  }
  stationary_ = exact_joint_distribution(rbm, nv_ + nh_);
}

double GibbsTransition::entry(std::size_t from, std::size_t to) const {
  const std::size_t sv = std::size_t{1} << nv_;
  const std::size_t sh = std::size_t{1} << nh_;
  const std::size_t xv = from & (sv - 1);
  const std::size_t yv = to & (sv - 1);
  const std::size_t yh = to >> nv_;
  return p_h_given_v_[xv * sh + yh] * p_v_given_h_[yh * sv + yv];
}

std::vector<double> GibbsTransition::apply(const std::vector<double>& mu) const {
  if (mu.size() != n_states()) throw DimensionError("distribution length does not match the state space");
  const std::size_t sv = std::size_t{1} << nv_;
  const std::size_t sh = std::size_t{1} << nh_;
  std::vector<double> visible_mass(sv, 0.0);
  for (std::size_t x = 0; x < mu.size(); ++x) visible_mass[x & (sv - 1)] += mu[x];
  std::vector<double> hidden_mass(sh, 0.0);
  for (std::size_t vs = 0; vs < sv; ++vs) {
    const double m = visible_mass[vs];
    if (m == 0.0) continue;
    const double* row = p_h_given_v_.data() + vs * sh;
    for (std::size_t hs = 0; hs < sh; ++hs) hidden_mass[hs] += m * row[hs];
  }
  std::vector<double> out(mu.size());
  for (std::size_t hs = 0; hs < sh; ++hs) {
    const double* row = p_v_given_h_.data() + hs * sv;
    for (std::size_t vs = 0; vs < sv; ++vs) out[vs | (hs << nv_)] = hidden_mass[hs] * row[vs];
  }
  return out;
}

std::vector<double> GibbsTransition::dense() const {
  if (nv_ + nh_ > max_dense_)
    throw TooLarge("dense transition matrix limited to " + std::to_string(max_dense_) + " joint units");
  const std::size_t n = n_states();
  std::vector<double> m(n * n);
  for (std::size_t x = 0; x < n; ++x)
    for (std::size_t y = 0; y < n; ++y) m[x * n + y] = entry(x, y);
  return m;
}

double slem(const GibbsTransition& transition, const ExactLimits& limits) {
  const std::size_t n = transition.n_states();
  if (n > 1024 || std::bit_width(n) - 1 > limits.max_dense_units)
    throw TooLarge("eigen-decomposition is limited to 10 joint units");
  const auto d = transition.dense();
  Eigen::MatrixXd m(n, n);
  for (std::size_t x = 0; x < n; ++x)
    for (std::size_t y = 0; y < n; ++y) m(static_cast<Eigen::Index>(x), static_cast<Eigen::Index>(y)) = d[x * n + y];
  Eigen::EigenSolver<Eigen::MatrixXd> solver(m, false);
  std::vector<double> moduli;
  for (Eigen::Index i = 0; i < solver.eigenvalues().size(); ++i) moduli.push_back(std::abs(solver.eigenvalues()[i]));
  std::sort(moduli.rbegin(), moduli.rend());
  return moduli.size() > 1 ? moduli[1] : 0.0;
}

}  // namespace rbmc
