#include "rbmc/clamp.hpp"

#include "rbmc/error.hpp"

namespace rbmc {

bool ResolvedClamp::consistent(std::span<const std::uint8_t> v) const {
  if (v.size() != base.size()) return false;
  for (std::size_t i = 0; i < v.size(); ++i)
    if (fixed[i] && v[i] != base[i]) return false;
  return true;
}

ResolvedClamp resolve(const Rbm& rbm, const ClampMask& clamp) {
  ResolvedClamp r;
  r.base.assign(rbm.n_visible(), 0);
  r.fixed.assign(rbm.n_visible(), 0);
  for (const auto& [name, bit] : clamp.assignments) {
    if (bit > 1) throw InvalidArgument("clamp value for '" + name + "' is not 0 or 1");
    const std::size_t i = rbm.index_of(name);
    r.base[i] = bit;
    r.fixed[i] = 1;
  }
  for (std::size_t i = 0; i < rbm.n_visible(); ++i)
    if (!r.fixed[i]) r.free.push_back(i);
  return r;
}

}  // namespace rbmc
