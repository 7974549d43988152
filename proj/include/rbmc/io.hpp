#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include <json.hpp>

#include "rbmc/merge.hpp"
#include "rbmc/rbm.hpp"
#include "rbmc/synthesis.hpp"

namespace rbmc {

// {"visible":[{"name":..,"bias":..}..], "hidden_bias":[..], "weights":[[..]..]}
nlohmann::json rbm_to_json(const Rbm& rbm);
Rbm rbm_from_json(const nlohmann::json& j);

// Writes the model file plus a sidecar (see sidecar_path) holding the
// terminal map, public terminals and constants.
void save_model(const std::filesystem::path& path, const MergedModel& model);
// Reads the sidecar when present; otherwise every terminal is public.
MergedModel load_model(const std::filesystem::path& path);
std::filesystem::path sidecar_path(const std::filesystem::path& model_path);

// Netlist file: {"components":[{"id":..,"model":builtin-or-path}..],
// "connections":[["id.term","id.term"]..], "exports":{"id.term":name},
// "constants":{"id.term":0|1}}. Relative model paths resolve against the
// netlist's directory. Parse errors report line and column.
Netlist netlist_from_json_text(const std::string& text, const std::filesystem::path& base_dir,
                               double sharpness = kDefaultSharpness);
Netlist load_netlist(const std::filesystem::path& path, double sharpness = kDefaultSharpness);

// Builtin name or model file path.
MergedModel resolve_model(const std::string& ref, const std::filesystem::path& base_dir,
                          double sharpness = kDefaultSharpness);

std::string read_text(const std::filesystem::path& path);
void write_text(const std::filesystem::path& path, const std::string& text);

// Shortest decimal that round-trips the double.
std::string format_double(double x);

class CsvWriter {
 public:
  explicit CsvWriter(std::vector<std::string> header);
  CsvWriter& row(const std::vector<std::string>& cells);
  const std::string& str() const { return text_; }
  void save(const std::filesystem::path& path) const { write_text(path, text_); }

 private:
  std::size_t columns_;
  std::string text_;
};

}  // namespace rbmc
