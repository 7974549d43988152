#include "rbmc/merge.hpp"

#include <algorithm>
#include <numeric>
#include <set>
#include <unordered_map>

#include "rbmc/error.hpp"

namespace rbmc {

MergedModel::MergedModel(Rbm model) : rbm(std::move(model)) {
  for (std::size_t i = 0; i < rbm.n_visible(); ++i) terminal_map.emplace(rbm.visible_names()[i], i);
  exports = rbm.visible_names();
}

MergedModel::MergedModel(Rbm model, std::map<std::string, std::size_t> map,
                         std::vector<std::string> exported, std::map<std::string, std::uint8_t> consts)
    : rbm(std::move(model)),
      terminal_map(std::move(map)),
      exports(std::move(exported)),
      constants(std::move(consts)) {
  for (const auto& name : exports) rbm.index_of(name);
  for (const auto& [name, bit] : constants) {
    rbm.index_of(name);
    if (bit > 1) throw InvalidArgument("constant bit for '" + name + "' is not 0 or 1");
  }
}

Rbm disjoint_union(const Rbm& a, const Rbm& b) {
  const std::size_t nv = a.n_visible() + b.n_visible();
  const std::size_t nh = a.n_hidden() + b.n_hidden();
  std::vector<std::string> names = a.visible_names();
  names.insert(names.end(), b.visible_names().begin(), b.visible_names().end());
  std::vector<double> vb = a.visible_bias();
  vb.insert(vb.end(), b.visible_bias().begin(), b.visible_bias().end());
  std::vector<double> hb = a.hidden_bias();
  hb.insert(hb.end(), b.hidden_bias().begin(), b.hidden_bias().end());
  std::vector<double> w(nv * nh, 0.0);
  for (std::size_t i = 0; i < a.n_visible(); ++i)
    std::copy(a.row(i).begin(), a.row(i).end(), w.begin() + i * nh);
  for (std::size_t i = 0; i < b.n_visible(); ++i)
    std::copy(b.row(i).begin(), b.row(i).end(),
              w.begin() + (a.n_visible() + i) * nh + a.n_hidden());
  return Rbm(std::move(names), std::move(vb), std::move(hb), std::move(w));
}

Rbm with_prefix(const Rbm& rbm, const std::string& prefix) {
  std::vector<std::string> names;
  names.reserve(rbm.n_visible());
  for (const auto& n : rbm.visible_names()) names.push_back(prefix + n);
  return Rbm(std::move(names), rbm.visible_bias(), rbm.hidden_bias(), rbm.weights());
}

Rbm tie_terminals(const Rbm& rbm, const std::string& t1, const std::string& t2) {
  const std::size_t keep = rbm.index_of(t1);
  const std::size_t drop = rbm.index_of(t2);
  if (keep == drop) throw InvalidArgument("cannot tie terminal '" + t1 + "' to itself");
  const std::size_t nh = rbm.n_hidden();
  std::vector<std::string> names;
  std::vector<double> vb;
  std::vector<double> w;
  w.reserve((rbm.n_visible() - 1) * nh);
  for (std::size_t i = 0; i < rbm.n_visible(); ++i) {
    if (i == drop) continue;
    names.push_back(rbm.visible_names()[i]);
    const auto r = rbm.row(i);
    if (i == keep) {
      vb.push_back(rbm.visible_bias()[keep] + rbm.visible_bias()[drop]);
      const auto r2 = rbm.row(drop);
      for (std::size_t j = 0; j < nh; ++j) w.push_back(r[j] + r2[j]);
    } else {
      vb.push_back(rbm.visible_bias()[i]);
      w.insert(w.end(), r.begin(), r.end());
    }
  }
  return Rbm(std::move(names), std::move(vb), rbm.hidden_bias(), std::move(w));
}

Rbm merge_pair(const Rbm& a, const Rbm& b,
               const std::vector<std::pair<std::string, std::string>>& pairs) {
  if (pairs.empty()) throw InvalidArgument("merge_pair needs at least one terminal pair");
  // b-index -> a-index for merged rows
  std::unordered_map<std::size_t, std::size_t> b_to_a;
  std::set<std::size_t> used_a;
  for (const auto& [ta, tb] : pairs) {
    const std::size_t ia = a.index_of(ta);
    const std::size_t ib = b.index_of(tb);
    if (!used_a.insert(ia).second) throw InvalidArgument("terminal '" + ta + "' appears in two pairs");
    if (!b_to_a.emplace(ib, ia).second)
      throw InvalidArgument("terminal '" + tb + "' appears in two pairs");
  }

  const std::size_t nh = a.n_hidden() + b.n_hidden();
  const std::size_t nv = a.n_visible() + b.n_visible() - pairs.size();
  std::vector<std::string> names = a.visible_names();
  std::vector<double> vb = a.visible_bias();
  std::vector<double> w(nv * nh, 0.0);
  for (std::size_t i = 0; i < a.n_visible(); ++i)
    std::copy(a.row(i).begin(), a.row(i).end(), w.begin() + i * nh);

  std::size_t next = a.n_visible();
  for (std::size_t ib = 0; ib < b.n_visible(); ++ib) {
    std::size_t target;
    if (auto it = b_to_a.find(ib); it != b_to_a.end()) {
      target = it->second;
      vb[target] += b.visible_bias()[ib];
    } else {
      if (a.find(b.visible_names()[ib]))
        throw InvalidArgument("unmerged terminal '" + b.visible_names()[ib] +
                              "' collides with a name in the first model");
      target = next++;
      names.push_back(b.visible_names()[ib]);
      vb.push_back(b.visible_bias()[ib]);
    }
    std::copy(b.row(ib).begin(), b.row(ib).end(), w.begin() + target * nh + a.n_hidden());
  }

  std::vector<double> hb = a.hidden_bias();
  hb.insert(hb.end(), b.hidden_bias().begin(), b.hidden_bias().end());
  return Rbm(std::move(names), std::move(vb), std::move(hb), std::move(w));
}

namespace {

struct DisjointSets {
  std::vector<std::size_t> parent;
  explicit DisjointSets(std::size_t n) : parent(n) { std::iota(parent.begin(), parent.end(), 0); }
  std::size_t find(std::size_t x) {
    while (parent[x] != x) {
      parent[x] = parent[parent[x]];
      x = parent[x];
    }
    return x;
  }
  // Smaller index becomes the root so class representatives are deterministic.
  void unite(std::size_t x, std::size_t y) {
    x = find(x);
    y = find(y);
    if (x == y) return;
    if (y < x) std::swap(x, y);
    parent[y] = x;
  }
};

}  // namespace

MergedModel compose(const Netlist& netlist) {
  if (netlist.components.empty()) throw InvalidArgument("netlist has no components");

  // Flatten every component terminal to a global index.
  std::vector<std::string> flat_names;
  std::vector<std::pair<std::size_t, std::size_t>> flat_origin;  // (component, local index)
  std::unordered_map<std::string, std::size_t> flat_index;
  std::vector<std::size_t> hidden_offset;
  std::size_t total_hidden = 0;
  std::set<std::string> ids;
  for (std::size_t c = 0; c < netlist.components.size(); ++c) {
    const auto& comp = netlist.components[c];
    if (comp.id.empty() || comp.id.find('.') != std::string::npos)
      throw InvalidArgument("component id '" + comp.id + "' must be nonempty and contain no '.'");
    if (!ids.insert(comp.id).second) throw InvalidArgument("duplicate component id '" + comp.id + "'");
    hidden_offset.push_back(total_hidden);
    total_hidden += comp.model.rbm.n_hidden();
    for (std::size_t i = 0; i < comp.model.rbm.n_visible(); ++i) {
      std::string name = comp.id + "." + comp.model.rbm.visible_names()[i];
      flat_index.emplace(name, flat_names.size());
      flat_names.push_back(std::move(name));
      flat_origin.emplace_back(c, i);
    }
  }
  auto lookup = [&](const std::string& ref) {
    auto it = flat_index.find(ref);
    if (it == flat_index.end()) throw UnknownTerminal(ref);
    return it->second;
  };

  DisjointSets sets(flat_names.size());
  for (const auto& [x, y] : netlist.connections) {
    const std::size_t ix = lookup(x);
    const std::size_t iy = lookup(y);
    sets.unite(ix, iy);
  }

  // Class representatives in first-occurrence order.
  std::vector<std::size_t> class_of(flat_names.size());
  std::vector<std::size_t> roots;
  std::unordered_map<std::size_t, std::size_t> root_to_class;
  for (std::size_t g = 0; g < flat_names.size(); ++g) {
    const std::size_t r = sets.find(g);
    auto [it, inserted] = root_to_class.emplace(r, roots.size());
    if (inserted) roots.push_back(r);
    class_of[g] = it->second;
  }
  const std::size_t nv = roots.size();

  std::vector<std::string> names(nv);
  std::vector<bool> exported(nv, false);
  for (std::size_t g = 0; g < flat_names.size(); ++g) {
    auto& n = names[class_of[g]];
    if (n.empty() || flat_names[g] < n) n = flat_names[g];
  }
  for (const auto& [ref, public_name] : netlist.exports) {
    const std::size_t k = class_of[lookup(ref)];
    if (exported[k] && names[k] != public_name)
      throw InvalidArgument("terminals exported as '" + names[k] + "' and '" + public_name +
                            "' are connected");
    names[k] = public_name;
    exported[k] = true;
  }
  {
    std::set<std::string> seen;
    for (const auto& n : names)
      if (!seen.insert(n).second) throw InvalidArgument("export name collision on '" + n + "'");
  }

  // Carry forward constants of nested components, then the netlist's own.
  std::map<std::string, std::uint8_t> constants;
  auto add_constant = [&](std::size_t k, std::uint8_t bit) {
    auto [it, inserted] = constants.emplace(names[k], bit);
    if (!inserted && it->second != bit)
      throw InvalidArgument("conflicting constants on terminal '" + names[k] + "'");
  };
  for (const auto& comp : netlist.components)
    for (const auto& [name, bit] : comp.model.constants)
      add_constant(class_of[lookup(comp.id + "." + name)], bit);
  for (const auto& [ref, bit] : netlist.constants) {
    if (bit > 1) throw InvalidArgument("constant for '" + ref + "' is not 0 or 1");
    add_constant(class_of[lookup(ref)], bit);
  }

  std::vector<double> vb(nv, 0.0);
  std::vector<double> hb;
  hb.reserve(total_hidden);
  std::vector<double> w(nv * total_hidden, 0.0);
  for (std::size_t c = 0; c < netlist.components.size(); ++c) {
    const auto& m = netlist.components[c].model.rbm;
    hb.insert(hb.end(), m.hidden_bias().begin(), m.hidden_bias().end());
  }
  for (std::size_t g = 0; g < flat_names.size(); ++g) {
    const auto [c, i] = flat_origin[g];
    const auto& m = netlist.components[c].model.rbm;
    const std::size_t k = class_of[g];
    vb[k] += m.visible_bias()[i];
    const auto r = m.row(i);
    double* dst = w.data() + k * total_hidden + hidden_offset[c];
    for (std::size_t j = 0; j < r.size(); ++j) dst[j] += r[j];
  }

  std::map<std::string, std::size_t> terminal_map;
  for (std::size_t g = 0; g < flat_names.size(); ++g) terminal_map.emplace(flat_names[g], class_of[g]);

  std::vector<std::string> public_names;
  if (netlist.exports.empty()) {
    public_names = names;
  } else {
    for (std::size_t k = 0; k < nv; ++k)
      if (exported[k]) public_names.push_back(names[k]);
  }

  Rbm rbm(std::move(names), std::move(vb), std::move(hb), std::move(w));
  return MergedModel(std::move(rbm), std::move(terminal_map), std::move(public_names),
                     std::move(constants));
}

}  // namespace rbmc
