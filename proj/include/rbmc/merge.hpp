#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "rbmc/rbm.hpp"

namespace rbmc {

// A model together with the bookkeeping that composition produces: which
// original component terminal landed on which visible unit, which visible
// units form the public interface, and which units are constant bits that
// inference must clamp.
struct MergedModel {
  Rbm rbm;
  std::map<std::string, std::size_t> terminal_map;
  std::vector<std::string> exports;
  std::map<std::string, std::uint8_t> constants;

  MergedModel(Rbm model);  // NOLINT: implicit, every Rbm is a trivial merged model
  MergedModel(Rbm model, std::map<std::string, std::size_t> map, std::vector<std::string> exported,
              std::map<std::string, std::uint8_t> consts);

  std::size_t index_of(const std::string& name) const { return rbm.index_of(name); }
};

struct Component {
  std::string id;
  MergedModel model;
};

struct Netlist {
  std::vector<Component> components;
  // Pairs of "component.terminal" references to identify.
  std::vector<std::pair<std::string, std::string>> connections;
  // "component.terminal" -> public name. When empty every merged terminal is public.
  std::map<std::string, std::string> exports;
  // "component.terminal" -> fixed bit, clamped during inference.
  std::map<std::string, std::uint8_t> constants;
};

// Identifies visible unit a[k] with b[l] for each pair (k, l). The result lists
// a's units in order followed by b's unmerged units; hidden units are a's then
// b's. A merged unit keeps a's name, its bias is the sum and its row carries
// a's couplings in a's hidden columns and b's in b's.
Rbm merge_pair(const Rbm& a, const Rbm& b,
               const std::vector<std::pair<std::string, std::string>>& pairs);

// Collapses visible units t1 and t2 into one unit at t1's position, keeping
// t1's name. Row and bias are summed, so the energy equals the original energy
// at v(t1) = v(t2).
Rbm tie_terminals(const Rbm& rbm, const std::string& t1, const std::string& t2);

// Block-diagonal union; names must not collide.
Rbm disjoint_union(const Rbm& a, const Rbm& b);

Rbm with_prefix(const Rbm& rbm, const std::string& prefix);

// Merges every component along the union-find classes of `connections`.
// A class takes its export name if it has one, otherwise the lexicographically
// first member name. Visible order follows the first member of each class in
// component order, so connection order never changes the result.
MergedModel compose(const Netlist& netlist);

}  // namespace rbmc
