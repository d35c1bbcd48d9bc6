#pragma once

#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "anomfp/error.hpp"
#include "anomfp/model.hpp"

#ifndef ANOMFP_VERSION
#define ANOMFP_VERSION "0.0.0"
#endif

namespace anomfp {

using nlohmann::json;

struct RunConfig {
  struct Model {
    int d = 1;
    double beta = 2.5;
  } model;
  struct GridSpec {
    int n_v1 = 0;  // 0 picks a default for the dimension
    int n_r = 0;
    double v1_max = 0.0;
    double r_max = 0.0;
  } grid;
  struct Sweep {
    double eta_min = 1e-3;
    double eta_max = 1e-1;
    int n_points = 8;
    std::string spacing = "log";
  } sweep;
  struct Rescaled {
    double s_in = 1e-4;
    double s_out = 0.0;
    int resolution = 0;
    int n_theta = 64;
  } rescaled;
  struct Sim {
    std::vector<double> xi_list{1.0};
    std::vector<double> eps_list{0.2, 0.1, 0.05};
    double t_end = 2.0;
    int n_steps = 4000;
    double bump = 0.5;
    double kappa = 0.0;  // 0 computes kappa from the limit problem
  } sim;
  struct Validation {
    int trials = 100;
    std::uint64_t seed = 1;
  } validation;
  struct Tolerances {
    double solver = 1e-9;
    double rootfind = 1e-10;
    double quadrature = 1e-2;
  } tolerances;
  struct Output {
    std::string directory = "anomfp-out";
    std::vector<std::string> formats{"csv", "json"};
  } output;

  /// Grid sizes with dimension defaults filled in.
  RunConfig resolved() const {
    RunConfig c = *this;
    const bool line = model.d == 1;
    if (c.grid.n_v1 <= 0) c.grid.n_v1 = line ? 4000 : 241;
    if (c.grid.v1_max <= 0.0) c.grid.v1_max = line ? 100.0 : 80.0;
    if (!line) {
      if (c.grid.n_r <= 0) c.grid.n_r = 120;
      if (c.grid.r_max <= 0.0) c.grid.r_max = c.grid.v1_max;
    } else {
      c.grid.n_r = 0;
      c.grid.r_max = 0.0;
    }
    return c;
  }

  bool wants(const std::string& format) const {
    for (const auto& f : output.formats)
      if (f == format) return true;
    return false;
  }
};

inline void to_json(json& j, const RunConfig& c) {
  j = json{{"model", {{"d", c.model.d}, {"beta", c.model.beta}}},
           {"grid", {{"n_v1", c.grid.n_v1}, {"n_r", c.grid.n_r}, {"v1_max", c.grid.v1_max}, {"r_max", c.grid.r_max}}},
           {"sweep",
            {{"eta_min", c.sweep.eta_min}, {"eta_max", c.sweep.eta_max}, {"n_points", c.sweep.n_points},
             {"spacing", c.sweep.spacing}}},
           {"rescaled",
            {{"s_in", c.rescaled.s_in}, {"s_out", c.rescaled.s_out}, {"resolution", c.rescaled.resolution},
             {"n_theta", c.rescaled.n_theta}}},
           {"sim",
            {{"xi_list", c.sim.xi_list}, {"eps_list", c.sim.eps_list}, {"t_end", c.sim.t_end},
             {"n_steps", c.sim.n_steps}, {"bump", c.sim.bump}, {"kappa", c.sim.kappa}}},
           {"validation", {{"trials", c.validation.trials}, {"seed", c.validation.seed}}},
           {"tolerances",
            {{"solver", c.tolerances.solver}, {"rootfind", c.tolerances.rootfind},
             {"quadrature", c.tolerances.quadrature}}},
           {"output", {{"directory", c.output.directory}, {"formats", c.output.formats}}}};
}

namespace detail {

template <class T>
void take(const json& obj, const char* section, const char* key, T& out) {
  if (!obj.contains(key)) return;
  try {
    out = obj.at(key).get<T>();
  } catch (const json::exception& e) {
    throw ParameterError(std::string("config ") + section + "." + key + ": " + e.what());
  }
}

inline void reject_unknown(const json& obj, const char* section, std::initializer_list<const char*> keys) {
  if (!obj.is_object()) throw ParameterError(std::string("config section ") + section + " must be an object");
  for (const auto& [k, v] : obj.items()) {
    bool known = false;
    for (const char* x : keys) known = known || k == x;
    if (!known) throw ParameterError(std::string("unknown config key ") + section + "." + k);
  }
}

}  // namespace detail

/// Overlays the values present in `j` onto `c`; unknown keys are an error.
inline void merge_config(RunConfig& c, const json& j) {
  detail::reject_unknown(j, "<root>",
                         {"model", "grid", "sweep", "rescaled", "sim", "validation", "tolerances", "output"});
  if (j.contains("model")) {
    const json& s = j["model"];
    detail::reject_unknown(s, "model", {"d", "beta"});
    detail::take(s, "model", "d", c.model.d);
    detail::take(s, "model", "beta", c.model.beta);
  }
  if (j.contains("grid")) {
    const json& s = j["grid"];
    detail::reject_unknown(s, "grid", {"n_v1", "n_r", "v1_max", "r_max"});
    detail::take(s, "grid", "n_v1", c.grid.n_v1);
    detail::take(s, "grid", "n_r", c.grid.n_r);
    detail::take(s, "grid", "v1_max", c.grid.v1_max);
    detail::take(s, "grid", "r_max", c.grid.r_max);
  }
  if (j.contains("sweep")) {
    const json& s = j["sweep"];
    detail::reject_unknown(s, "sweep", {"eta_min", "eta_max", "n_points", "spacing"});
    detail::take(s, "sweep", "eta_min", c.sweep.eta_min);
    detail::take(s, "sweep", "eta_max", c.sweep.eta_max);
    detail::take(s, "sweep", "n_points", c.sweep.n_points);
    detail::take(s, "sweep", "spacing", c.sweep.spacing);
  }
  if (j.contains("rescaled")) {
    const json& s = j["rescaled"];
    detail::reject_unknown(s, "rescaled", {"s_in", "s_out", "resolution", "n_theta"});
    detail::take(s, "rescaled", "s_in", c.rescaled.s_in);
    detail::take(s, "rescaled", "s_out", c.rescaled.s_out);
    detail::take(s, "rescaled", "resolution", c.rescaled.resolution);
    detail::take(s, "rescaled", "n_theta", c.rescaled.n_theta);
  }
  if (j.contains("sim")) {
    const json& s = j["sim"];
    detail::reject_unknown(s, "sim", {"xi_list", "eps_list", "t_end", "n_steps", "bump", "kappa"});
    detail::take(s, "sim", "xi_list", c.sim.xi_list);
    detail::take(s, "sim", "eps_list", c.sim.eps_list);
    detail::take(s, "sim", "t_end", c.sim.t_end);
    detail::take(s, "sim", "n_steps", c.sim.n_steps);
    detail::take(s, "sim", "bump", c.sim.bump);
    detail::take(s, "sim", "kappa", c.sim.kappa);
  }
  if (j.contains("validation")) {
    const json& s = j["validation"];
    detail::reject_unknown(s, "validation", {"trials", "seed"});
    detail::take(s, "validation", "trials", c.validation.trials);
    detail::take(s, "validation", "seed", c.validation.seed);
  }
  if (j.contains("tolerances")) {
    const json& s = j["tolerances"];
    detail::reject_unknown(s, "tolerances", {"solver", "rootfind", "quadrature"});
    detail::take(s, "tolerances", "solver", c.tolerances.solver);
    detail::take(s, "tolerances", "rootfind", c.tolerances.rootfind);
    detail::take(s, "tolerances", "quadrature", c.tolerances.quadrature);
  }
  if (j.contains("output")) {
    const json& s = j["output"];
    detail::reject_unknown(s, "output", {"directory", "formats"});
    detail::take(s, "output", "directory", c.output.directory);
    detail::take(s, "output", "formats", c.output.formats);
  }
}

inline RunConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ParameterError("cannot open config file " + path.string());
  json j;
  try {
    j = json::parse(in);
  } catch (const json::parse_error& e) {
    throw ParameterError("config file " + path.string() + " is not valid JSON: " + e.what());
  }
  RunConfig c;
  merge_config(c, j);
  return c;
}

/// Checks every invariant of the configuration; the model check rejects
/// beta = d + 1 with ExcludedCaseError.
inline void validate_config(const RunConfig& c) {
  (void)ModelParams::make(c.model.d, c.model.beta);
  const auto& t = c.tolerances;
  if (!(t.solver > 0.0 && t.rootfind > 0.0 && t.quadrature > 0.0))
    throw ParameterError("all tolerances must be positive");
  if (c.sweep.spacing != "log") throw ParameterError("sweep spacing must be \"log\", got \"" + c.sweep.spacing + "\"");
  if (!(c.sweep.eta_min > 0.0 && c.sweep.eta_max > c.sweep.eta_min))
    throw ParameterError("sweep needs 0 < eta_min < eta_max");
  if (c.sweep.n_points < 5) throw ParameterError("sweep needs at least 5 points");
  if (!(c.rescaled.s_in > 0.0 && c.rescaled.s_in < 1.0)) throw ParameterError("rescaled.s_in must be in (0, 1)");
  if (c.rescaled.s_out != 0.0 && !(c.rescaled.s_out > 1.0)) throw ParameterError("rescaled.s_out must exceed 1");
  if (c.sim.eps_list.empty() || c.sim.xi_list.empty()) throw ParameterError("sim needs xi_list and eps_list");
  for (double e : c.sim.eps_list)
    if (!(e > 0.0)) throw ParameterError("sim.eps_list entries must be positive");
  if (!(c.sim.t_end > 0.0) || c.sim.n_steps < 1) throw ParameterError("sim needs t_end > 0 and n_steps >= 1");
  if (c.sim.kappa < 0.0) throw ParameterError("sim.kappa must be >= 0");
  if (c.validation.trials < 1) throw ParameterError("validation.trials must be >= 1");
  for (const auto& f : c.output.formats)
    if (f != "csv" && f != "json") throw ParameterError("unknown output format " + f);
}

/// 64-bit FNV-1a.
inline std::uint64_t fnv1a(const std::string& s) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char ch : s) {
    h ^= ch;
    h *= 0x100000001b3ULL;
  }
  return h;
}

/// Hash of the resolved configuration without the output section.
inline std::string config_hash(const RunConfig& c) {
  json j = c.resolved();
  j.erase("output");
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(fnv1a(j.dump())));
  return buf;
}

/// Writes to a temporary sibling and renames it into place.
inline void write_atomic(const std::filesystem::path& path, const std::string& content) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::filesystem::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw Error("cannot write " + tmp.string());
    out << content;
    out.flush();
    if (!out) throw Error("write failed for " + tmp.string());
  }
  std::filesystem::rename(tmp, path);
}

inline std::string format_double(double x) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17e", x);
  return buf;
}

class CsvTable {
 public:
  explicit CsvTable(std::vector<std::string> columns) : columns_(std::move(columns)) {}

  void add(const std::vector<double>& row) {
    if (row.size() != columns_.size()) throw ParameterError("csv row has the wrong number of columns");
    rows_.push_back(row);
  }

  std::size_t rows() const { return rows_.size(); }

  std::string render(const std::string& hash) const {
    std::ostringstream os;
    os << "# config_hash=" << hash << '\n';
    for (std::size_t i = 0; i < columns_.size(); ++i) os << (i ? "," : "") << columns_[i];
    os << '\n';
    for (const auto& r : rows_) {
      for (std::size_t i = 0; i < r.size(); ++i) os << (i ? "," : "") << format_double(r[i]);
      os << '\n';
    }
    return os.str();
  }

 private:
  std::vector<std::string> columns_;
  std::vector<std::vector<double>> rows_;
};

/// Collects the files written by one command and records them in manifest.json.
class OutputSet {
 public:
  OutputSet(const RunConfig& config, std::string command)
      : config_(config), command_(std::move(command)), hash_(config_hash(config)),
        dir_(config.output.directory) {}

  const std::string& hash() const { return hash_; }
  const std::filesystem::path& directory() const { return dir_; }

  void csv(const std::string& name, const CsvTable& table) {
    if (!config_.wants("csv")) return;
    write_atomic(dir_ / name, table.render(hash_));
    files_.push_back(name);
  }

  void json_file(const std::string& name, json body) {
    if (!config_.wants("json")) return;
    body["config_hash"] = hash_;
    write_atomic(dir_ / name, body.dump(2) + "\n");
    files_.push_back(name);
  }

  void manifest(const std::string& status) {
    json m{{"command", command_},
           {"status", status},
           {"config_hash", hash_},
           {"library_version", ANOMFP_VERSION},
           {"config", config_.resolved()},
           {"files", files_}};
    write_atomic(dir_ / ("manifest-" + command_ + ".json"), m.dump(2) + "\n");
  }

 private:
  RunConfig config_;
  std::string command_;
  std::string hash_;
  std::filesystem::path dir_;
  std::vector<std::string> files_;
};

}  // namespace anomfp
