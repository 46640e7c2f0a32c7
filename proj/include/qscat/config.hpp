#pragma once

#include <cstdint>
#include <filesystem>
#include <initializer_list>
#include <optional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "qscat/compare.hpp"
#include "qscat/csv.hpp"
#include "qscat/ensemble.hpp"
#include "qscat/kinematics.hpp"

namespace qscat::cfg {

using nlohmann::json;

/// Config parse or validation failure; the message names the offending field
/// or the line/column of the syntax error.
class config_error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct SimulationSpec {
  std::optional<std::uint64_t> n_particles;
  std::optional<std::uint64_t> seed;
  WeightMode weight_mode = WeightMode::uniform;
  std::vector<double> table_weights;
  std::optional<double> screen_distance;
  std::uint32_t bins = 201;
  std::optional<std::pair<double, double>> bin_range;
  std::uint32_t shards = 1;
};

/// A parsed and validated config document.
struct Document {
  Scenario scenario = Aperture{1.0};
  std::optional<double> beam_lambda;
  std::optional<double> beam_momentum;  // exactly one of the two is set
  OracleOptions oracle;
  std::optional<SimulationSpec> simulation;
  std::optional<std::filesystem::path> output_dir;
  json raw;  // verbatim echo for manifests

  Beam beam(ActionConstant h = {}) const {
    return beam_lambda ? Beam::from_characteristic_length(*beam_lambda, h)
                       : Beam::from_momentum(*beam_momentum, h);
  }
};

inline WeightMode parse_weight_mode(const std::string& s, const std::string& path) {
  if (s == "uniform") return WeightMode::uniform;
  if (s == "oracle") return WeightMode::oracle_weighted;
  if (s == "table") return WeightMode::table;
  throw config_error(path + ": must be \"uniform\", \"oracle\" or \"table\"");
}

namespace detail {

inline std::string json_type_name(const json& j) { return j.type_name(); }

inline void check_keys(const json& obj, const std::string& path,
                       std::initializer_list<const char*> allowed) {
  for (const auto& item : obj.items()) {
    bool known = false;
    for (const char* key : allowed)
      if (item.key() == key) {
        known = true;
        break;
      }
    if (!known)
      throw config_error(path + ": unknown key \"" + item.key() + "\"");
  }
}

inline const json& require_key(const json& obj, const std::string& path, const char* key) {
  const auto it = obj.find(key);
  if (it == obj.end()) throw config_error(path + ": missing required key \"" + key + "\"");
  return *it;
}

inline double as_number(const json& j, const std::string& path) {
  if (!j.is_number()) throw config_error(path + ": expected a number, got " + json_type_name(j));
  return j.get<double>();
}

inline double as_positive(const json& j, const std::string& path) {
  const double v = as_number(j, path);
  if (!(v > 0.0)) throw config_error(path + ": must be positive");
  return v;
}

inline std::uint64_t as_u64(const json& j, const std::string& path) {
  if (!j.is_number_integer() && !j.is_number_unsigned())
    throw config_error(path + ": expected an integer, got " + json_type_name(j));
  if (j.is_number_integer() && j.get<std::int64_t>() < 0)
    throw config_error(path + ": must be nonnegative");
  return j.get<std::uint64_t>();
}

inline bool as_bool(const json& j, const std::string& path) {
  if (!j.is_boolean()) throw config_error(path + ": expected a boolean");
  return j.get<bool>();
}

inline std::string as_string(const json& j, const std::string& path) {
  if (!j.is_string()) throw config_error(path + ": expected a string");
  return j.get<std::string>();
}

inline Scenario parse_scenario(const json& j) {
  if (!j.is_object()) throw config_error("scenario: expected an object");
  const std::string kind = as_string(require_key(j, "scenario", "kind"), "scenario.kind");
  if (kind == "laue") {
    check_keys(j, "scenario", {"kind", "d"});
    return LaueLattice{as_positive(require_key(j, "scenario", "d"), "scenario.d")};
  }
  if (kind == "aperture") {
    check_keys(j, "scenario", {"kind", "a"});
    return Aperture{as_positive(require_key(j, "scenario", "a"), "scenario.a")};
  }
  if (kind == "double_slit") {
    check_keys(j, "scenario", {"kind", "a", "c"});
    const double a = as_positive(require_key(j, "scenario", "a"), "scenario.a");
    const double c = as_positive(require_key(j, "scenario", "c"), "scenario.c");
    if (!(c > a)) throw config_error("scenario.c: must exceed scenario.a");
    return DoubleSlit{a, c};
  }
  throw config_error("scenario.kind: must be \"laue\", \"aperture\" or \"double_slit\"");
}

inline SimulationSpec parse_simulation(const json& j) {
  if (!j.is_object()) throw config_error("simulation: expected an object");
  check_keys(j, "simulation",
             {"n_particles", "seed", "weight_mode", "weights", "screen_distance", "bins",
              "bin_range", "shards"});
  SimulationSpec spec;
  if (j.contains("n_particles")) {
    spec.n_particles = as_u64(j["n_particles"], "simulation.n_particles");
    if (*spec.n_particles < 1) throw config_error("simulation.n_particles: must be >= 1");
  }
  if (j.contains("seed")) spec.seed = as_u64(j["seed"], "simulation.seed");
  if (j.contains("weight_mode"))
    spec.weight_mode =
        parse_weight_mode(as_string(j["weight_mode"], "simulation.weight_mode"),
                          "simulation.weight_mode");
  if (j.contains("weights")) {
    if (!j["weights"].is_array()) throw config_error("simulation.weights: expected an array");
    double sum = 0.0;
    for (const auto& w : j["weights"]) {
      const double v = as_number(w, "simulation.weights[]");
      if (!(v >= 0.0)) throw config_error("simulation.weights[]: must be nonnegative");
      spec.table_weights.push_back(v);
      sum += v;
    }
    if (!spec.table_weights.empty() && !(sum > 0.0))
      throw config_error("simulation.weights: must not all be zero");
  }
  if (spec.weight_mode == WeightMode::table && spec.table_weights.empty())
    throw config_error("simulation.weights: required for weight_mode \"table\"");
  if (j.contains("screen_distance"))
    spec.screen_distance = as_positive(j["screen_distance"], "simulation.screen_distance");
  if (j.contains("bins")) {
    spec.bins = static_cast<std::uint32_t>(as_u64(j["bins"], "simulation.bins"));
    if (spec.bins < 2) throw config_error("simulation.bins: must be >= 2");
  }
  if (j.contains("bin_range")) {
    const auto& r = j["bin_range"];
    if (!r.is_array() || r.size() != 2)
      throw config_error("simulation.bin_range: expected [x_min, x_max]");
    const double lo = as_number(r[0], "simulation.bin_range[0]");
    const double hi = as_number(r[1], "simulation.bin_range[1]");
    if (!(lo < hi)) throw config_error("simulation.bin_range: x_min must be below x_max");
    spec.bin_range = {lo, hi};
  }
  if (j.contains("shards")) {
    spec.shards = static_cast<std::uint32_t>(as_u64(j["shards"], "simulation.shards"));
    if (spec.shards < 1) throw config_error("simulation.shards: must be >= 1");
  }
  return spec;
}

inline OracleOptions parse_oracle(const json& j) {
  if (!j.is_object()) throw config_error("oracle: expected an object");
  check_keys(j, "oracle", {"grid_points", "refine_tol", "n_planes"});
  OracleOptions opt;
  if (j.contains("grid_points")) {
    opt.grid_points = static_cast<int>(as_u64(j["grid_points"], "oracle.grid_points"));
    if (opt.grid_points < 1001) throw config_error("oracle.grid_points: must be >= 1001");
  }
  if (j.contains("refine_tol")) {
    opt.refine_tol = as_number(j["refine_tol"], "oracle.refine_tol");
    if (!(opt.refine_tol > 0.0) || opt.refine_tol > 1e-8)
      throw config_error("oracle.refine_tol: must be in (0, 1e-8]");
  }
  if (j.contains("n_planes")) {
    opt.lattice_planes = static_cast<int>(as_u64(j["n_planes"], "oracle.n_planes"));
    if (opt.lattice_planes < 2) throw config_error("oracle.n_planes: must be >= 2");
  }
  return opt;
}

inline std::pair<std::size_t, std::size_t> line_column(const std::string& text,
                                                       std::size_t byte) {
  std::size_t line = 1;
  std::size_t col = 1;
  for (std::size_t i = 0; i < byte && i < text.size(); ++i) {
    if (text[i] == '\n') {
      ++line;
      col = 1;
    } else {
      ++col;
    }
  }
  return {line, col};
}

}  // namespace detail

inline Document parse_config(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    const auto [line, col] = detail::line_column(text, e.byte > 0 ? e.byte - 1 : 0);
    std::string what = e.what();
    if (const auto pos = what.find("] "); pos != std::string::npos) what.erase(0, pos + 2);
    throw config_error("parse error at line " + std::to_string(line) + ", column " +
                       std::to_string(col) + ": " + what);
  }
  if (!j.is_object()) throw config_error("top level: expected a JSON object");
  detail::check_keys(j, "top level", {"scenario", "beam", "oracle", "simulation", "output"});

  Document doc;
  doc.raw = j;
  doc.scenario = detail::parse_scenario(detail::require_key(j, "top level", "scenario"));

  const json& beam = detail::require_key(j, "top level", "beam");
  if (!beam.is_object()) throw config_error("beam: expected an object");
  detail::check_keys(beam, "beam", {"lambda", "momentum"});
  if (beam.contains("lambda")) doc.beam_lambda = detail::as_positive(beam["lambda"], "beam.lambda");
  if (beam.contains("momentum"))
    doc.beam_momentum = detail::as_positive(beam["momentum"], "beam.momentum");
  if (doc.beam_lambda.has_value() == doc.beam_momentum.has_value())
    throw config_error("beam: exactly one of \"lambda\" or \"momentum\" is required");

  if (j.contains("oracle")) doc.oracle = detail::parse_oracle(j["oracle"]);
  if (j.contains("simulation")) doc.simulation = detail::parse_simulation(j["simulation"]);
  if (j.contains("output")) {
    const json& out = j["output"];
    if (!out.is_object()) throw config_error("output: expected an object");
    detail::check_keys(out, "output", {"dir"});
    if (out.contains("dir"))
      doc.output_dir = std::filesystem::path(detail::as_string(out["dir"], "output.dir"));
  }
  return doc;
}

inline Document load_config(const std::filesystem::path& path) {
  std::string text;
  try {
    text = io::read_text_file(path);
  } catch (const std::runtime_error& e) {
    throw config_error(e.what());
  }
  return parse_config(text);
}

}  // namespace qscat::cfg
