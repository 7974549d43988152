#include "rbmc/rbm.hpp"

#include <cmath>

#include "rbmc/error.hpp"

namespace rbmc {

Rbm::Rbm(std::vector<std::string> visible_names, std::vector<double> visible_bias,
         std::vector<double> hidden_bias, std::vector<double> weights)
    : names_(std::move(visible_names)),
      visible_bias_(std::move(visible_bias)),
      hidden_bias_(std::move(hidden_bias)),
      weights_(std::move(weights)) {
  if (visible_bias_.empty()) throw DimensionError("an RBM needs at least one visible unit");
  if (names_.size() != visible_bias_.size())
    throw DimensionError("visible name count does not match visible bias length");
  if (weights_.size() != visible_bias_.size() * hidden_bias_.size())
    throw DimensionError("weight matrix size is not n_visible * n_hidden");
  for (const auto* vec : {&visible_bias_, &hidden_bias_, &weights_})
    for (double x : *vec)
      if (!std::isfinite(x)) throw InvalidArgument("RBM parameters must be finite");
  index_.reserve(names_.size());
  for (std::size_t i = 0; i < names_.size(); ++i)
    if (!index_.emplace(names_[i], i).second)
      throw InvalidArgument("duplicate visible terminal name '" + names_[i] + "'");
}

Rbm Rbm::zeros(std::vector<std::string> visible_names, std::size_t n_hidden) {
  const std::size_t n = visible_names.size();
  return Rbm(std::move(visible_names), std::vector<double>(n, 0.0),
             std::vector<double>(n_hidden, 0.0), std::vector<double>(n * n_hidden, 0.0));
}

std::optional<std::size_t> Rbm::find(const std::string& name) const {
  auto it = index_.find(name);
  if (it == index_.end()) return std::nullopt;
  return it->second;
}

std::size_t Rbm::index_of(const std::string& name) const {
  auto idx = find(name);
  if (!idx) throw UnknownTerminal(name);
  return *idx;
}

bool Rbm::operator==(const Rbm& other) const {
  return names_ == other.names_ && visible_bias_ == other.visible_bias_ &&
         hidden_bias_ == other.hidden_bias_ && weights_ == other.weights_;
}

double sigmoid(double x) {
  if (x >= 0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

double softplus(double x) { return std::max(x, 0.0) + std::log1p(std::exp(-std::abs(x))); }

namespace {

void check_visible(const Rbm& rbm, std::size_t n) {
  if (n != rbm.n_visible()) throw DimensionError("visible vector length does not match the RBM");
}
void check_hidden(const Rbm& rbm, std::size_t n) {
  if (n != rbm.n_hidden()) throw DimensionError("hidden vector length does not match the RBM");
}

}  // namespace

double energy(const Rbm& rbm, const BinaryState& state) {
  check_visible(rbm, state.visible.size());
  check_hidden(rbm, state.hidden.size());
  double e = 0.0;
  for (std::size_t j = 0; j < rbm.n_hidden(); ++j)
    if (state.hidden[j]) e -= rbm.hidden_bias()[j];
  for (std::size_t i = 0; i < rbm.n_visible(); ++i) {
    if (!state.visible[i]) continue;
    e -= rbm.visible_bias()[i];
    const auto w = rbm.row(i);
    for (std::size_t j = 0; j < rbm.n_hidden(); ++j)
      if (state.hidden[j]) e -= w[j];
  }
  return e;
}

std::vector<double> hidden_preactivation(const Rbm& rbm, std::span<const std::uint8_t> v) {
  check_visible(rbm, v.size());
  std::vector<double> x(rbm.hidden_bias());
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (!v[i]) continue;
    const auto w = rbm.row(i);
    for (std::size_t j = 0; j < x.size(); ++j) x[j] += w[j];
  }
  return x;
}

std::vector<double> visible_preactivation(const Rbm& rbm, std::span<const std::uint8_t> h) {
  check_hidden(rbm, h.size());
  std::vector<double> x(rbm.visible_bias());
  for (std::size_t i = 0; i < x.size(); ++i) {
    const auto w = rbm.row(i);
    for (std::size_t j = 0; j < h.size(); ++j)
      if (h[j]) x[i] += w[j];
  }
  return x;
}

double free_energy(const Rbm& rbm, std::span<const std::uint8_t> v) {
  const auto x = hidden_preactivation(rbm, v);
  double f = 0.0;
  for (std::size_t i = 0; i < v.size(); ++i)
    if (v[i]) f -= rbm.visible_bias()[i];
  for (double xj : x) f -= softplus(xj);
  return f;
}

std::vector<double> hidden_conditional(const Rbm& rbm, std::span<const std::uint8_t> v) {
  auto x = hidden_preactivation(rbm, v);
  for (double& p : x) p = sigmoid(p);
  return x;
}

std::vector<double> visible_conditional(const Rbm& rbm, std::span<const std::uint8_t> h) {
  auto x = visible_preactivation(rbm, h);
  for (double& p : x) p = sigmoid(p);
  return x;
}

}  // namespace rbmc
