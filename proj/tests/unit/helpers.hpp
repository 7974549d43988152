#pragma once

#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "rbmc/rbm.hpp"
#include "rbmc/rng.hpp"

namespace testing {

inline std::vector<std::string> names(const std::string& prefix, std::size_t n) {
  std::vector<std::string> out;
  for (std::size_t i = 0; i < n; ++i) out.push_back(prefix + std::to_string(i));
  return out;
}

inline double normal(rbmc::Rng& rng) {
  double u1 = rng.uniform();
  while (u1 <= 0.0) u1 = rng.uniform();
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * 3.141592653589793 * rng.uniform());
}

inline rbmc::Rbm random_rbm(std::size_t nv, std::size_t nh, rbmc::Rng& rng, double scale = 1.0,
                            const std::string& prefix = "v") {
  std::vector<double> b(nv), a(nh), w(nv * nh);
  for (double& x : b) x = scale * normal(rng);
  for (double& x : a) x = scale * normal(rng);
  for (double& x : w) x = scale * normal(rng);
  return rbmc::Rbm(names(prefix, nv), b, a, w);
}

// Parameters that are small multiples of 1/8, so sums of a few of them are exact.
inline rbmc::Rbm dyadic_rbm(std::size_t nv, std::size_t nh, rbmc::Rng& rng, const std::string& prefix) {
  auto draw = [&] { return (static_cast<double>(rng.below(33)) - 16.0) / 8.0; };
  std::vector<double> b(nv), a(nh), w(nv * nh);
  for (double& x : b) x = draw();
  for (double& x : a) x = draw();
  for (double& x : w) x = draw();
  return rbmc::Rbm(names(prefix, nv), b, a, w);
}

inline rbmc::Bits bits_of(std::uint64_t x, std::size_t n) {
  rbmc::Bits out(n);
  for (std::size_t i = 0; i < n; ++i) out[i] = (x >> i) & 1U;
  return out;
}

// Brute-force energy straight from the bilinear form.
inline double brute_energy(const rbmc::Rbm& rbm, const rbmc::Bits& v, const rbmc::Bits& h) {
  double e = 0.0;
  for (std::size_t i = 0; i < rbm.n_visible(); ++i) e -= rbm.visible_bias()[i] * v[i];
  for (std::size_t j = 0; j < rbm.n_hidden(); ++j) e -= rbm.hidden_bias()[j] * h[j];
  for (std::size_t i = 0; i < rbm.n_visible(); ++i)
    for (std::size_t j = 0; j < rbm.n_hidden(); ++j) e -= rbm.weight(i, j) * v[i] * h[j];
  return e;
}

// Unnormalized visible marginal by summing exp(-E) over every hidden vector.
inline std::vector<double> brute_visible_weights(const rbmc::Rbm& rbm) {
  const std::size_t nv = rbm.n_visible(), nh = rbm.n_hidden();
  std::vector<double> out(std::size_t{1} << nv, 0.0);
  for (std::uint64_t v = 0; v < out.size(); ++v)
    for (std::uint64_t h = 0; h < (std::uint64_t{1} << nh); ++h)
      out[v] += std::exp(-brute_energy(rbm, bits_of(v, nv), bits_of(h, nh)));
  return out;
}

inline std::vector<double> normalized(std::vector<double> w) {
  double z = 0.0;
  for (double x : w) z += x;
  for (double& x : w) x /= z;
  return w;
}

}  // namespace testing
