#include "rbmc/io.hpp"

#include <charconv>
#include <fstream>
#include <sstream>

#include "rbmc/error.hpp"

namespace rbmc {

using nlohmann::json;

json rbm_to_json(const Rbm& rbm) {
  json visible = json::array();
  for (std::size_t i = 0; i < rbm.n_visible(); ++i)
    visible.push_back({{"name", rbm.visible_names()[i]}, {"bias", rbm.visible_bias()[i]}});
  json weights = json::array();
  for (std::size_t i = 0; i < rbm.n_visible(); ++i) {
    const auto r = rbm.row(i);
    weights.push_back(std::vector<double>(r.begin(), r.end()));
  }
  return {{"visible", std::move(visible)}, {"hidden_bias", rbm.hidden_bias()}, {"weights", std::move(weights)}};
}

Rbm rbm_from_json(const json& j) {
  try {
    std::vector<std::string> names;
    std::vector<double> vb;
    for (const auto& v : j.at("visible")) {
      names.push_back(v.at("name").get<std::string>());
      vb.push_back(v.at("bias").get<double>());
    }
    auto hb = j.at("hidden_bias").get<std::vector<double>>();
    const auto& rows = j.at("weights");
    if (rows.size() != names.size()) throw DimensionError("weights must have one row per visible unit");
    std::vector<double> w;
    w.reserve(names.size() * hb.size());
    for (const auto& r : rows) {
      auto row = r.get<std::vector<double>>();
      if (row.size() != hb.size()) throw DimensionError("weight row length does not match hidden_bias");
      w.insert(w.end(), row.begin(), row.end());
    }
    return Rbm(std::move(names), std::move(vb), std::move(hb), std::move(w));
  } catch (const json::exception& e) {
    throw InvalidArgument(std::string("malformed RBM JSON: ") + e.what());
  }
}

std::string read_text(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot read " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_text(const std::filesystem::path& path, const std::string& text) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error("cannot write " + path.string());
  out << text;
}

std::filesystem::path sidecar_path(const std::filesystem::path& model_path) {
  auto p = model_path;
  p.replace_extension(".map.json");
  return p;
}

void save_model(const std::filesystem::path& path, const MergedModel& model) {
  write_text(path, rbm_to_json(model.rbm).dump(1) + "\n");
  json side = {{"terminal_map", model.terminal_map},
               {"exports", model.exports},
               {"constants", json::object()}};
  for (const auto& [name, bit] : model.constants) side["constants"][name] = static_cast<int>(bit);
  write_text(sidecar_path(path), side.dump(1) + "\n");
}

namespace {

json parse_with_position(const std::string& text, const std::string& what) {
  try {
    return json::parse(text);
  } catch (const json::parse_error& e) {
    std::size_t line = 1, col = 1;
    for (std::size_t i = 0; i + 1 < e.byte && i < text.size(); ++i) {
      if (text[i] == '\n') {
        ++line;
        col = 1;
      } else {
        ++col;
      }
    }
    throw InvalidArgument(what + ":" + std::to_string(line) + ":" + std::to_string(col) + ": parse error: " +
                          e.what());
  }
}

}  // namespace

MergedModel load_model(const std::filesystem::path& path) {
  Rbm rbm = rbm_from_json(parse_with_position(read_text(path), path.string()));
  const auto side_path = sidecar_path(path);
  if (!std::filesystem::exists(side_path)) return MergedModel(std::move(rbm));
  const json side = parse_with_position(read_text(side_path), side_path.string());
  try {
    std::map<std::string, std::uint8_t> constants;
    for (const auto& [name, bit] : side.at("constants").items()) constants[name] = bit.get<std::uint8_t>();
    return MergedModel(std::move(rbm), side.at("terminal_map").get<std::map<std::string, std::size_t>>(),
                       side.at("exports").get<std::vector<std::string>>(), std::move(constants));
  } catch (const json::exception& e) {
    throw InvalidArgument(side_path.string() + ": malformed sidecar: " + e.what());
  }
}

MergedModel resolve_model(const std::string& ref, const std::filesystem::path& base_dir, double sharpness) {
  if (is_builtin(ref)) return builtin_model(ref, sharpness);
  std::filesystem::path p(ref);
  if (p.is_relative()) p = base_dir / p;
  if (!std::filesystem::exists(p)) throw Error("model file not found: " + p.string());
  if (p.extension() == ".json" && read_text(p).find("\"components\"") != std::string::npos)
    return compose(load_netlist(p, sharpness));
  return load_model(p);
}

Netlist netlist_from_json_text(const std::string& text, const std::filesystem::path& base_dir, double sharpness) {
  const json j = parse_with_position(text, "netlist");
  Netlist n;
  try {
    for (const auto& c : j.at("components"))
      n.components.push_back({c.at("id").get<std::string>(),
                              resolve_model(c.at("model").get<std::string>(), base_dir, sharpness)});
    if (j.contains("connections"))
      for (const auto& c : j.at("connections")) {
        if (!c.is_array() || c.size() != 2) throw InvalidArgument("each connection must be a pair of terminals");
        n.connections.emplace_back(c[0].get<std::string>(), c[1].get<std::string>());
      }
    if (j.contains("exports")) n.exports = j.at("exports").get<std::map<std::string, std::string>>();
    if (j.contains("constants"))
      for (const auto& [ref, bit] : j.at("constants").items()) n.constants[ref] = bit.get<std::uint8_t>();
  } catch (const json::exception& e) {
    throw InvalidArgument(std::string("malformed netlist: ") + e.what());
  }
  return n;
}

Netlist load_netlist(const std::filesystem::path& path, double sharpness) {
  return netlist_from_json_text(read_text(path), path.parent_path(), sharpness);
}

std::string format_double(double x) {
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), x);
  if (ec != std::errc()) throw Error("cannot format double");
  return std::string(buf, ptr);
}

CsvWriter::CsvWriter(std::vector<std::string> header) : columns_(header.size()) { row(header); }

CsvWriter& CsvWriter::row(const std::vector<std::string>& cells) {
  if (cells.size() != columns_) throw DimensionError("CSV row has the wrong number of cells");
  for (std::size_t i = 0; i < cells.size(); ++i) {
    if (i) text_ += ',';
    text_ += cells[i];
  }
  text_ += '\n';
  return *this;
}

}  // namespace rbmc
