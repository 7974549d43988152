#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

namespace rbmc {

// Binary unit states are stored one byte per unit, values 0 or 1.
using Bits = std::vector<std::uint8_t>;

struct BinaryState {
  Bits visible;
  Bits hidden;
};

// Restricted Boltzmann machine over {0,1} units with energy
//   E(v, h) = -v^T W h - a^T h - b^T v
// where W is n_visible x n_hidden (row i holds visible unit i's couplings),
// b the visible bias and a the hidden bias. Visible units carry unique
// terminal names so that models can be merged by unit identity.
//
// Instances are immutable once built.
class Rbm {
 public:
  // `weights` is row-major, n_visible rows of n_hidden entries.
  Rbm(std::vector<std::string> visible_names, std::vector<double> visible_bias,
      std::vector<double> hidden_bias, std::vector<double> weights);

  // All parameters zero.
  static Rbm zeros(std::vector<std::string> visible_names, std::size_t n_hidden);

  std::size_t n_visible() const { return visible_bias_.size(); }
  std::size_t n_hidden() const { return hidden_bias_.size(); }

  double weight(std::size_t i, std::size_t j) const { return weights_[i * n_hidden() + j]; }
  std::span<const double> row(std::size_t i) const {
    return {weights_.data() + i * n_hidden(), n_hidden()};
  }
  const std::vector<double>& weights() const { return weights_; }
  const std::vector<double>& visible_bias() const { return visible_bias_; }
  const std::vector<double>& hidden_bias() const { return hidden_bias_; }
  const std::vector<std::string>& visible_names() const { return names_; }

  std::optional<std::size_t> find(const std::string& name) const;
  // Throws UnknownTerminal.
  std::size_t index_of(const std::string& name) const;

  bool operator==(const Rbm& other) const;

 private:
  std::vector<std::string> names_;
  std::vector<double> visible_bias_;
  std::vector<double> hidden_bias_;
  std::vector<double> weights_;
  std::unordered_map<std::string, std::size_t> index_;
};

double sigmoid(double x);
// log(1 + e^x) without overflow.
double softplus(double x);

double energy(const Rbm& rbm, const BinaryState& state);

// F(v) = -b^T v - sum_j log(1 + exp(a_j + (W^T v)_j)), so that
// exp(-F(v)) = sum_h exp(-E(v, h)).
double free_energy(const Rbm& rbm, std::span<const std::uint8_t> v);

// a_j + (W^T v)_j for every hidden unit.
std::vector<double> hidden_preactivation(const Rbm& rbm, std::span<const std::uint8_t> v);
// b_i + (W h)_i for every visible unit.
std::vector<double> visible_preactivation(const Rbm& rbm, std::span<const std::uint8_t> h);

// p(h_j = 1 | v) for each hidden unit.
std::vector<double> hidden_conditional(const Rbm& rbm, std::span<const std::uint8_t> v);
// p(v_i = 1 | h) for each visible unit.
std::vector<double> visible_conditional(const Rbm& rbm, std::span<const std::uint8_t> h);

}  // namespace rbmc
