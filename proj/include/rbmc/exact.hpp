#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "rbmc/clamp.hpp"
#include "rbmc/kernels.hpp"
#include "rbmc/rbm.hpp"

namespace rbmc {

struct ExactLimits {
  std::size_t max_free_visible = 24;
  std::size_t max_hidden = 4096;
  std::size_t max_joint_units = 14;  // factored transition operator
  std::size_t max_dense_units = 12;  // materialized transition matrix
};

// Exact visible distribution over all completions of a clamp. State index s
// sets free unit free_units[k] to bit k of s.
struct ExactDistribution {
  Bits base;
  std::vector<std::size_t> free_units;
  std::vector<double> probabilities;
  double log_partition = 0.0;

  std::size_t size() const { return probabilities.size(); }
  Bits state(std::size_t s) const;
  double partition_function() const;
};

ExactDistribution exact_visible_distribution(const Rbm& rbm, const ClampMask& clamp = {},
                                             const ExactLimits& limits = {},
                                             Exec exec = Exec::Parallel);

// Marginal over a subset of the free units (given as visible indices, kept in
// the order listed).
ExactDistribution marginalize(const ExactDistribution& dist, const std::vector<std::size_t>& units);

// Distribution over the same support that is uniform on `valid` states and 0 elsewhere.
ExactDistribution uniform_over(const ExactDistribution& like, const std::vector<Bits>& valid);

// sum q log(q/p) with 0 log 0 = 0.
double kl_divergence(const ExactDistribution& q, const ExactDistribution& p);

// Probability mass on the listed full visible vectors.
double mass_on(const ExactDistribution& dist, const std::vector<Bits>& states);

double l1_distance(const std::vector<double>& p, const std::vector<double>& q);
// Half the L1 distance; lies in [0, 1].
double tv_distance(const std::vector<double>& p, const std::vector<double>& q);

// max E - min E over all joint states. The hidden extremes factorize given v,
// so only visible states are enumerated.
double delta_exact(const Rbm& rbm, const ExactLimits& limits = {});
// sum |W| + sum |a| + sum |b|; an upper bound on delta_exact.
double delta_bound(const Rbm& rbm);

// (1/2) * initial_l1 * (1 - e^{-2 delta})^n, bounding the total-variation
// distance after n sweeps from a start distribution at L1 distance
// initial_l1 (in [0, 2]) from stationarity.
double convergence_bound(double delta, double initial_l1, std::size_t steps);

// Exact joint distribution over (v, h); index = v_bits | (h_bits << n_visible).
std::vector<double> exact_joint_distribution(const Rbm& rbm, std::size_t max_joint_units = 20);

// Block-Gibbs transition operator over joint states (same indexing as
// exact_joint_distribution) for one sweep: resample h given v, then v given h.
// Entry (x, y) = p(y_h | x_v) * p(y_v | y_h).
class GibbsTransition {
 public:
  explicit GibbsTransition(const Rbm& rbm, const ExactLimits& limits = {});

  std::size_t n_states() const { return std::size_t{1} << (nv_ + nh_); }
  double entry(std::size_t from, std::size_t to) const;
  // Row-vector product mu * P.
  std::vector<double> apply(const std::vector<double>& mu) const;
  // Row-major dense matrix; refuses above limits.max_dense_units.
  std::vector<double> dense() const;
  const std::vector<double>& stationary() const { return stationary_; }

 private:
  std::size_t nv_;
  std::size_t nh_;
  std::size_t max_dense_;
  std::vector<double> p_h_given_v_;  // [v * 2^nh + h]
  std::vector<double> p_v_given_h_;  // [h * 2^nv + v]
  std::vector<double> stationary_;
};

// Second-largest eigenvalue modulus of the dense transition matrix.
double slem(const GibbsTransition& transition, const ExactLimits& limits = {});

}  // namespace rbmc
