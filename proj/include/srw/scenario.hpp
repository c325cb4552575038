#pragma once

// Scenario runner behind the command-line tool: configuration files, the four
// built-in figure scenarios, CSV/manifest output and run comparison.
//
// Units: times in 1/g, rates in g. Every CSV starts with one '#' metadata line
// carrying the config hash and toolkit version, followed by the column names.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <mutex>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "json.hpp"
#include "srw/analysis.hpp"
#include "srw/cluster_eom.hpp"
#include "srw/core_model.hpp"
#include "srw/errors.hpp"
#include "srw/exact_lindblad.hpp"
#include "srw/parallel.hpp"
#include "srw/version.hpp"

namespace srw::cli {

using nlohmann::json;
namespace fs = std::filesystem;

// ---------------------------------------------------------------------------
// Tables

using Cell = std::optional<double>;

struct Table {
  std::vector<std::string> columns;
  std::vector<std::vector<Cell>> rows;
  std::string metadata;  // '#' line without the leading marker

  void add(std::vector<Cell> row) {
    if (row.size() != columns.size()) throw std::logic_error("Table::add: row width differs from header");
    rows.push_back(std::move(row));
  }
  std::size_t column(const std::string& name) const {
    for (std::size_t i = 0; i < columns.size(); ++i) {
      if (columns[i] == name) return i;
    }
    throw InvalidParameter("table has no column '" + name + "'");
  }
};

inline std::string format_number(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.10e", v);
  return buf;
}

inline void write_csv(const fs::path& path, const Table& t) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw InvalidParameter("cannot open '" + path.string() + "' for writing");
  out << "# " << t.metadata << '\n';
  for (std::size_t i = 0; i < t.columns.size(); ++i) out << (i ? "," : "") << t.columns[i];
  out << '\n';
  for (const auto& row : t.rows) {
    for (std::size_t i = 0; i < row.size(); ++i) {
      if (i) out << ',';
      if (row[i]) out << format_number(*row[i]);
    }
    out << '\n';
  }
  if (!out) throw InvalidParameter("write to '" + path.string() + "' failed");
}

inline std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> parts;
  std::string cur;
  std::istringstream in(s);
  while (std::getline(in, cur, sep)) parts.push_back(cur);
  if (!s.empty() && s.back() == sep) parts.emplace_back();
  return parts;
}

inline Table read_csv(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InvalidParameter("cannot open '" + path.string() + "'");
  Table t;
  std::string line;
  bool header = false;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    if (line[0] == '#') {
      if (t.metadata.empty()) t.metadata = line.size() > 2 ? line.substr(2) : "";
      continue;
    }
    if (!header) {
      t.columns = split(line, ',');
      header = true;
      continue;
    }
    const auto cells = split(line, ',');
    if (cells.size() != t.columns.size()) throw InvalidParameter("ragged row in '" + path.string() + "'");
    std::vector<Cell> row;
    for (const auto& c : cells) {
      if (c.empty()) {
        row.emplace_back();
        continue;
      }
      std::size_t used = 0;
      double v = 0;
      try {
        v = std::stod(c, &used);
      } catch (const std::exception&) {
        used = 0;
      }
      if (used != c.size()) throw InvalidParameter("non-numeric cell '" + c + "' in '" + path.string() + "'");
      row.emplace_back(v);
    }
    t.rows.push_back(std::move(row));
  }
  if (!header) throw InvalidParameter("'" + path.string() + "' has no header row");
  return t;
}

// ---------------------------------------------------------------------------
// Hashing

/// 64-bit FNV-1a, rendered as 16 hex digits.
inline std::string fnv1a_hex(const std::string& data) {
  std::uint64_t h = 14695981039346656037ull;
  for (unsigned char c : data) {
    h ^= c;
    h *= 1099511628211ull;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

/// Hash of the canonical (key-sorted) serialization of everything that
/// determines numeric output.
inline std::string config_hash(const json& settings) { return fnv1a_hex(settings.dump()); }

inline std::string metadata_line(const std::string& hash, const std::string& extra = {}) {
  std::string m = "config_hash=" + hash + " version=" + std::string(kVersion) + " units=t:1/g,rates:g";
  if (!extra.empty()) m += " " + extra;
  return m;
}

// ---------------------------------------------------------------------------
// Configuration files

struct ConfigFile {
  std::string name = "run";
  Configuration config;
  int photon_cutoff = -1;  // -1: automatic
};

inline const std::vector<std::string>& config_keys() {
  static const std::vector<std::string> keys = {
      "name",      "n_emitters", "kappa_over_g", "gamma_over_g", "gamma_phi_over_g", "detuning_over_g",
      "initial_condition", "t_end_g", "n_samples", "solver", "correlations", "rel_tol", "abs_tol",
      "photon_cutoff"};
  return keys;
}

/// Parses a JSON configuration object. Unknown keys and type errors are
/// reported together as one InvalidParameter.
inline ConfigFile parse_config(const json& j) {
  if (!j.is_object()) throw InvalidParameter("configuration must be a JSON object");
  std::vector<std::string> errors;
  for (const auto& [key, _] : j.items()) {
    bool known = false;
    for (const auto& k : config_keys()) known = known || k == key;
    if (!known) errors.push_back("unknown key '" + key + "'");
  }
  auto number = [&](const char* key, std::optional<double> fallback) -> double {
    if (!j.contains(key)) {
      if (!fallback) errors.push_back(std::string("missing key '") + key + "'");
      return fallback.value_or(0.0);
    }
    if (!j[key].is_number()) {
      errors.push_back(std::string("'") + key + "' must be a number");
      return 0.0;
    }
    return j[key].get<double>();
  };
  auto integer = [&](const char* key, std::optional<int> fallback) -> int {
    if (!j.contains(key)) {
      if (!fallback) errors.push_back(std::string("missing key '") + key + "'");
      return fallback.value_or(0);
    }
    if (!j[key].is_number_integer()) {
      errors.push_back(std::string("'") + key + "' must be an integer");
      return 0;
    }
    return j[key].get<int>();
  };
  auto text = [&](const char* key, std::optional<std::string> fallback) -> std::string {
    if (!j.contains(key)) {
      if (!fallback) errors.push_back(std::string("missing key '") + key + "'");
      return fallback.value_or("");
    }
    if (!j[key].is_string()) {
      errors.push_back(std::string("'") + key + "' must be a string");
      return "";
    }
    return j[key].get<std::string>();
  };

  ConfigFile cf;
  cf.name = text("name", std::string("run"));
  SystemParams p;
  p.n_emitters = integer("n_emitters", std::nullopt);
  p.kappa = number("kappa_over_g", std::nullopt);
  p.gamma = number("gamma_over_g", std::nullopt);
  p.gamma_phi = number("gamma_phi_over_g", 0.0);
  p.detuning = number("detuning_over_g", 0.0);
  const std::string ic_text = text("initial_condition", std::nullopt);
  TimeGrid grid;
  grid.t_end = number("t_end_g", std::nullopt);
  grid.n_samples = integer("n_samples", std::nullopt);
  grid.rel_tol = number("rel_tol", grid.rel_tol);
  grid.abs_tol = number("abs_tol", grid.abs_tol);
  const std::string solver_text = text("solver", std::nullopt);
  bool correlations = true;
  if (j.contains("correlations")) {
    if (j["correlations"].is_boolean()) {
      correlations = j["correlations"].get<bool>();
    } else {
      errors.emplace_back("'correlations' must be a boolean");
    }
  }
  cf.photon_cutoff = integer("photon_cutoff", -1);

  InitialCondition ic = FullyInverted{};
  SolverKind solver = SolverKind::Cluster;
  if (errors.empty()) {
    try {
      ic = parse_initial_condition(ic_text, p.n_emitters);
    } catch (const InvalidParameter& e) {
      errors.emplace_back(e.what());
    }
    try {
      solver = parse_solver(solver_text);
    } catch (const InvalidParameter& e) {
      errors.emplace_back(e.what());
    }
  }
  if (!errors.empty()) {
    std::string msg = "invalid configuration:";
    for (const auto& e : errors) msg += "\n  - " + e;
    throw InvalidParameter(msg);
  }
  cf.config = Configuration{p, ic, grid, solver, correlations};
  return cf;
}

inline ConfigFile load_config(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw InvalidParameter("cannot open configuration '" + path.string() + "'");
  json j;
  try {
    in >> j;
  } catch (const json::parse_error& e) {
    throw InvalidParameter("configuration '" + path.string() + "' is not valid JSON: " + e.what());
  }
  ConfigFile cf = parse_config(j);
  if (!j.contains("name")) cf.name = path.stem().string();
  return cf;
}

inline json to_json(const Configuration& c, int photon_cutoff = -1) {
  return json{{"n_emitters", c.params.n_emitters},
              {"kappa_over_g", c.params.kappa / c.params.coupling_g},
              {"gamma_over_g", c.params.gamma / c.params.coupling_g},
              {"gamma_phi_over_g", c.params.gamma_phi / c.params.coupling_g},
              {"detuning_over_g", c.params.detuning / c.params.coupling_g},
              {"initial_condition", to_string(c.initial)},
              {"t_end_g", c.grid.t_end},
              {"n_samples", c.grid.n_samples},
              {"rel_tol", c.grid.rel_tol},
              {"abs_tol", c.grid.abs_tol},
              {"solver", to_string(c.solver)},
              {"correlations", c.correlations},
              {"photon_cutoff", photon_cutoff}};
}

// ---------------------------------------------------------------------------
// Solving one configuration

struct SolveResult {
  SolverKind solver = SolverKind::Cluster;
  std::vector<ObservableRecord> records;
  bool cutoff_adequate = true;
  bool positivity_ok = true;
  double max_trace_drift = 0.0;
  int n_max = 0;
  std::vector<ComplexMatrix> emitter_states;

  bool quality_ok() const { return cutoff_adequate && positivity_ok && max_trace_drift <= 1e-8; }
};

struct SolveOptions {
  int photon_cutoff = -1;
  bool check_positivity = true;
  bool keep_emitter_states = false;
};

/// Runs a single backend (`solver` must be Exact or Cluster) on a validated configuration.
inline SolveResult solve(const Configuration& c, SolverKind solver, const SolveOptions& so = {}) {
  SolveResult r;
  r.solver = solver;
  if (solver == SolverKind::Cluster) {
    const ClusterTrajectory traj = run(c.params, c.initial, c.grid, c.correlations);
    r.records.reserve(traj.samples.size());
    for (const auto& s : traj.samples) r.records.push_back(to_record(s));
    return r;
  }
  if (solver != SolverKind::Exact) throw std::logic_error("solve: pick one backend");
  require_explicit(c.params.n_emitters, "exact solver");
  ExactOptions eo;
  eo.n_max = so.photon_cutoff;
  eo.check_positivity = so.check_positivity;
  eo.keep_emitter_states = so.keep_emitter_states;
  ExactTrajectory traj = solve_exact(c.params, c.initial, c.grid, eo);
  r.records = std::move(traj.records);
  r.cutoff_adequate = traj.cutoff_adequate;
  r.positivity_ok = traj.positivity_ok;
  r.max_trace_drift = traj.max_trace_drift;
  r.n_max = traj.n_max;
  r.emitter_states = std::move(traj.emitter_states);
  return r;
}

inline const std::vector<std::string>& timeseries_columns() {
  static const std::vector<std::string> cols = {"t_g",      "sz",        "n",        "re_c0",     "im_c0",
                                                "czz",      "gamma_se",  "gamma_ste", "gamma_ce", "gamma_tot",
                                                "witness",  "purity",    "dicke_overlap"};
  return cols;
}

inline Table timeseries_table(const std::vector<ObservableRecord>& records, const SystemParams& p,
                              const std::string& metadata) {
  Table t;
  t.columns = timeseries_columns();
  t.metadata = metadata;
  t.rows.reserve(records.size());
  for (const auto& r : records) {
    const EmissionRates e = emission_rates(r, p);
    t.add({r.time, r.sz, r.n, r.c0.real(), r.c0.imag(), r.czz, e.gamma_se, e.gamma_ste, e.gamma_ce, e.total(),
           witness(r.c0, r.czz), r.purity, r.dicke_overlap});
  }
  return t;
}

/// Largest pointwise |W_a - W_b| and relative difference of the Gamma_CE peaks.
struct SolverComparison {
  double max_witness_diff = 0.0;
  double peak_gamma_ce_rel_diff = 0.0;
};

inline SolverComparison compare(const std::vector<ObservableRecord>& a, const std::vector<ObservableRecord>& b,
                                const SystemParams& p) {
  if (a.size() != b.size()) throw InvalidParameter("compare: trajectories have different lengths");
  SolverComparison c;
  double pa = -INFINITY, pb = -INFINITY;
  for (std::size_t i = 0; i < a.size(); ++i) {
    c.max_witness_diff =
        std::max(c.max_witness_diff, std::abs(witness(a[i].c0, a[i].czz) - witness(b[i].c0, b[i].czz)));
    pa = std::max(pa, emission_rates(a[i], p).gamma_ce);
    pb = std::max(pb, emission_rates(b[i], p).gamma_ce);
  }
  c.peak_gamma_ce_rel_diff = std::abs(pa - pb) / std::max(std::abs(pb), 1e-300);
  return c;
}

// ---------------------------------------------------------------------------
// Run options and manifests

struct RunOptions {
  std::optional<SolverKind> solver;
  int jobs = 1;
  fs::path out_dir = ".";
  std::optional<double> gamma_phi;
  std::optional<std::string> sweep_gamma;  // "start:stop:count"
  std::optional<int> emitters;
};

struct RunManifest {
  std::string name;
  std::string config_hash;
  std::string version = kVersion;
  double wall_seconds = 0.0;
  bool cutoff_adequate = true;
  bool weak_coupling = true;
  bool quality_ok = true;
  std::vector<std::string> files;  // relative to the manifest's directory
  json settings = json::object();
  json summary = json::object();

  json to_json() const {
    return json{{"name", name},
                {"config_hash", config_hash},
                {"version", version},
                {"wall_seconds", wall_seconds},
                {"flags", {{"cutoff_adequate", cutoff_adequate}, {"weak_coupling", weak_coupling},
                           {"quality_ok", quality_ok}}},
                {"files", files},
                {"settings", settings},
                {"summary", summary}};
  }

  static RunManifest from_json(const json& j) {
    RunManifest m;
    try {
      m.name = j.at("name").get<std::string>();
      m.config_hash = j.at("config_hash").get<std::string>();
      m.version = j.at("version").get<std::string>();
      m.wall_seconds = j.at("wall_seconds").get<double>();
      const json& f = j.at("flags");
      m.cutoff_adequate = f.at("cutoff_adequate").get<bool>();
      m.weak_coupling = f.at("weak_coupling").get<bool>();
      m.quality_ok = f.at("quality_ok").get<bool>();
      m.files = j.at("files").get<std::vector<std::string>>();
      m.settings = j.value("settings", json::object());
      m.summary = j.value("summary", json::object());
    } catch (const json::exception& e) {
      throw InvalidParameter(std::string("malformed manifest: ") + e.what());
    }
    return m;
  }

  /// Output exit code: 4 when a numerical-quality flag fired.
  int exit_code() const { return quality_ok && cutoff_adequate ? 0 : 4; }
};

inline fs::path manifest_path(const fs::path& out_dir, const std::string& name) {
  return out_dir / (name + ".manifest.json");
}

inline void write_manifest(const fs::path& out_dir, const RunManifest& m) {
  std::ofstream out(manifest_path(out_dir, m.name));
  if (!out) throw InvalidParameter("cannot write manifest in '" + out_dir.string() + "'");
  out << m.to_json().dump(2) << '\n';
}

inline RunManifest read_manifest(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw InvalidParameter("cannot open manifest '" + path.string() + "'");
  json j;
  try {
    in >> j;
  } catch (const json::parse_error& e) {
    throw InvalidParameter("manifest '" + path.string() + "' is not valid JSON: " + e.what());
  }
  return RunManifest::from_json(j);
}

/// Parses "start:stop:count" into `count` evenly spaced values.
inline std::vector<double> parse_range(const std::string& spec) {
  const auto parts = split(spec, ':');
  if (parts.size() != 3) throw InvalidParameter("range must look like start:stop:count, got '" + spec + "'");
  double a = 0, b = 0;
  int n = 0;
  try {
    std::size_t u1 = 0, u2 = 0, u3 = 0;
    a = std::stod(parts[0], &u1);
    b = std::stod(parts[1], &u2);
    n = std::stoi(parts[2], &u3);
    if (u1 != parts[0].size() || u2 != parts[1].size() || u3 != parts[2].size()) throw std::invalid_argument("");
  } catch (const std::exception&) {
    throw InvalidParameter("range must look like start:stop:count, got '" + spec + "'");
  }
  if (n < 2 || !(b > a)) throw InvalidParameter("range needs stop > start and count >= 2");
  std::vector<double> v(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) v[static_cast<std::size_t>(i)] = a + (b - a) * i / (n - 1);
  return v;
}

// ---------------------------------------------------------------------------
// Scenario plumbing

/// Collects outputs for one run; every written file shares the run's hash.
class RunContext {
 public:
  RunContext(std::string name, const RunOptions& opts, json settings)
      : opts_(opts), start_(std::chrono::steady_clock::now()) {
    manifest_.name = std::move(name);
    settings["scenario"] = manifest_.name;
    settings["version"] = kVersion;
    manifest_.config_hash = config_hash(settings);
    manifest_.settings = std::move(settings);
    fs::create_directories(opts.out_dir);
  }

  const std::string& hash() const { return manifest_.config_hash; }
  json& summary() { return manifest_.summary; }

  void write(const std::string& file, Table t, const std::string& extra = {}) {
    t.metadata = metadata_line(hash(), extra);
    write_csv(opts_.out_dir / file, t);
    std::lock_guard lock(mutex_);
    files_[file] = true;
  }

  void note_quality(const SolveResult& r) {
    std::lock_guard lock(mutex_);
    manifest_.cutoff_adequate = manifest_.cutoff_adequate && r.cutoff_adequate;
    manifest_.quality_ok = manifest_.quality_ok && r.quality_ok();
  }

  void note_weak_coupling(bool weak) {
    std::lock_guard lock(mutex_);
    manifest_.weak_coupling = manifest_.weak_coupling && weak;
  }

  RunManifest finish() {
    manifest_.files.clear();
    for (const auto& [f, _] : files_) manifest_.files.push_back(f);
    manifest_.wall_seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
    write_manifest(opts_.out_dir, manifest_);
    return manifest_;
  }

 private:
  const RunOptions& opts_;
  std::chrono::steady_clock::time_point start_;
  RunManifest manifest_;
  std::map<std::string, bool> files_;  // sorted, deterministic listing
  std::mutex mutex_;
};

inline std::string describe(const Configuration& c, SolverKind backend) {
  return "solver=" + to_string(backend) + " n_emitters=" + std::to_string(c.params.n_emitters) +
         " initial_condition=" + to_string(c.initial) + " correlations=" + (c.correlations ? "on" : "off");
}

inline void check_capacity(SolverKind solver, int n) {
  if (solver == SolverKind::Both && n > kMaxBothSolverEmitters) {
    throw CapacityError("solver 'both' supports N <= " + std::to_string(kMaxBothSolverEmitters) +
                        " (got N=" + std::to_string(n) + ")");
  }
  if (solver != SolverKind::Cluster) require_explicit(n, "exact solver");
}

inline std::string half_label(int twice) {
  char buf[16];
  std::snprintf(buf, sizeof buf, "%g", twice / 2.0);
  return buf;
}

inline std::string weight_column(const JMLabel& l) { return "p_j" + half_label(l.two_j) + "_m" + half_label(l.two_m); }

/// Solves `c` with its solver choice and writes `<stem>.csv`; "both" writes
/// `<stem>_cluster.csv`, `<stem>_exact.csv` and returns their comparison.
inline std::optional<SolverComparison> solve_and_write(RunContext& ctx, const Configuration& c,
                                                       const std::string& stem, const SolveOptions& so = {}) {
  if (c.solver != SolverKind::Both) {
    const SolveResult r = solve(c, c.solver, so);
    ctx.note_quality(r);
    ctx.write(stem + ".csv", timeseries_table(r.records, c.params, ""), describe(c, c.solver));
    return std::nullopt;
  }
  const SolveResult cl = solve(c, SolverKind::Cluster, so);
  const SolveResult ex = solve(c, SolverKind::Exact, so);
  ctx.note_quality(ex);
  ctx.write(stem + "_cluster.csv", timeseries_table(cl.records, c.params, ""), describe(c, SolverKind::Cluster));
  ctx.write(stem + "_exact.csv", timeseries_table(ex.records, c.params, ""), describe(c, SolverKind::Exact));
  return compare(cl.records, ex.records, c.params);
}

inline Table comparison_table(const std::vector<std::pair<std::string, SolverComparison>>& rows,
                              std::vector<std::string>& labels) {
  Table t;
  t.columns = {"case", "max_abs_witness_diff", "peak_gamma_ce_rel_diff"};
  labels.clear();
  for (std::size_t i = 0; i < rows.size(); ++i) {
    labels.push_back(rows[i].first);
    t.add({static_cast<double>(i), rows[i].second.max_witness_diff, rows[i].second.peak_gamma_ce_rel_diff});
  }
  return t;
}

inline void record_comparisons(RunContext& ctx, const std::string& file,
                               const std::vector<std::pair<std::string, SolverComparison>>& rows) {
  if (rows.empty()) return;
  std::vector<std::string> labels;
  Table t = comparison_table(rows, labels);
  std::string legend = "cases=";
  for (std::size_t i = 0; i < labels.size(); ++i) legend += (i ? "|" : "") + std::to_string(i) + ":" + labels[i];
  ctx.write(file, std::move(t), legend);
  json cmp = json::object();
  for (const auto& [label, c] : rows) {
    cmp[label] = {{"max_abs_witness_diff", c.max_witness_diff}, {"peak_gamma_ce_rel_diff", c.peak_gamma_ce_rel_diff}};
  }
  ctx.summary()["solver_comparison"] = cmp;
}

// ---------------------------------------------------------------------------
// Built-in scenarios

struct ScenarioInfo {
  std::string name;
  std::string description;
};

inline const std::vector<ScenarioInfo>& scenarios() {
  static const std::vector<ScenarioInfo> list = {
      {"fig1", "superradiant burst from N=50 fully inverted emitters, correlations on/off, Dicke start, N-scaling"},
      {"fig2", "entanglement witness traces for fully inverted, half-inverted product and Dicke starts"},
      {"fig3", "N=4 exact run with (j,m) decomposition, radiance split, purity and component negativity"},
      {"fig4", "Dicke-state preparation from a cavity Fock state (N=2,4) and decoherence threshold sweep"},
  };
  return list;
}

inline constexpr int kBadCavityEmitters = 50;
inline constexpr int kExactDefaultEmitters = 4;
inline constexpr double kFig1Kappa = 20.0, kFig1Gamma = 1.0;
inline constexpr double kFig4Kappa = 0.1, kFig4Gamma = 0.1;
inline constexpr const char* kDefaultGammaSweep = "0.05:2.0:40";

inline Configuration bad_cavity_config(const RunOptions& opts, SolverKind solver, int n, InitialCondition ic,
                                       double t_end, int samples, bool correlations = true) {
  SystemParams p;
  p.n_emitters = n;
  p.kappa = kFig1Kappa;
  p.gamma = kFig1Gamma;
  p.gamma_phi = opts.gamma_phi.value_or(0.0);
  TimeGrid g;
  g.t_end = t_end;
  g.n_samples = samples;
  return validate(p, ic, g, solver, correlations).config;
}

inline int scenario_emitters(const RunOptions& opts, SolverKind solver) {
  if (opts.emitters) return *opts.emitters;
  return solver == SolverKind::Cluster ? kBadCavityEmitters : kExactDefaultEmitters;
}

inline RunManifest run_fig1(const RunOptions& opts) {
  constexpr double kTEnd = 10.0;
  constexpr int kSamples = 2001;
  const std::vector<int> kScalingN = {10, 20, 50, 100};
  const SolverKind solver = opts.solver.value_or(SolverKind::Cluster);
  const int n = scenario_emitters(opts, solver);
  check_capacity(solver, n);

  json settings = {{"solver", to_string(solver)},   {"n_emitters", n},
                   {"kappa_over_g", kFig1Kappa},     {"gamma_over_g", kFig1Gamma},
                   {"gamma_phi_over_g", opts.gamma_phi.value_or(0.0)},
                   {"t_end_g", kTEnd},               {"n_samples", kSamples},
                   {"scaling_n", kScalingN}};
  RunContext ctx("fig1", opts, settings);

  const Configuration fi = bad_cavity_config(opts, solver, n, FullyInverted{}, kTEnd, kSamples);
  const Configuration dk = bad_cavity_config(opts, solver, n, DickeState{n / 2}, kTEnd, kSamples);
  ctx.note_weak_coupling(weak_coupling(fi.params));

  std::vector<std::pair<std::string, SolverComparison>> comparisons;
  std::mutex cmp_mutex;
  std::vector<std::function<void()>> tasks;
  tasks.emplace_back([&] {
    if (auto c = solve_and_write(ctx, fi, "fig1_correlated")) {
      std::lock_guard lock(cmp_mutex);
      comparisons.emplace_back("fully_inverted", *c);
    }
  });
  tasks.emplace_back([&] {
    if (auto c = solve_and_write(ctx, dk, "fig1_dicke")) {
      std::lock_guard lock(cmp_mutex);
      comparisons.emplace_back("dicke", *c);
    }
  });
  // Switching correlations off is a property of the cluster closure only.
  double peak_on = 0.0, peak_off = 0.0;
  tasks.emplace_back([&] {
    Configuration off = fi;
    off.solver = SolverKind::Cluster;
    off.correlations = false;
    const ClusterTrajectory t = run(off.params, off.initial, off.grid, false);
    std::vector<ObservableRecord> rec;
    for (const auto& s : t.samples) rec.push_back(to_record(s));
    ctx.write("fig1_uncorrelated.csv", timeseries_table(rec, off.params, ""), describe(off, SolverKind::Cluster));
    peak_off = peak_spontaneous_rate(t).value;
  });
  tasks.emplace_back([&] {
    peak_on = peak_spontaneous_rate(run(fi.params, fi.initial, fi.grid, true)).value;
  });
  ScalingFit fit_on, fit_off;
  tasks.emplace_back([&] { fit_on = max_se_rate_scaling(kScalingN, fi.params, fi.grid, true); });
  tasks.emplace_back([&] { fit_off = max_se_rate_scaling(kScalingN, fi.params, fi.grid, false); });
  parallel_for(tasks.size(), opts.jobs, [&](std::size_t i) { tasks[i](); });

  Table scaling;
  scaling.columns = {"n_emitters", "peak_rate_correlated", "peak_rate_uncorrelated"};
  for (std::size_t i = 0; i < kScalingN.size(); ++i) {
    scaling.add({static_cast<double>(kScalingN[i]), fit_on.peak_rates[i], fit_off.peak_rates[i]});
  }
  char fits[96];
  std::snprintf(fits, sizeof fits, "exponent_correlated=%.6f exponent_uncorrelated=%.6f", fit_on.exponent,
                fit_off.exponent);
  ctx.write("fig1_scaling.csv", std::move(scaling), fits);

  std::sort(comparisons.begin(), comparisons.end(), [](const auto& a, const auto& b) { return a.first < b.first; });
  record_comparisons(ctx, "fig1_comparison.csv", comparisons);
  ctx.summary()["cluster_peak_rate_correlated"] = peak_on;
  ctx.summary()["cluster_peak_rate_uncorrelated"] = peak_off;
  ctx.summary()["peak_ratio"] = peak_on / peak_off;
  ctx.summary()["scaling_exponent_correlated"] = fit_on.exponent;
  ctx.summary()["scaling_exponent_uncorrelated"] = fit_off.exponent;
  return ctx.finish();
}

inline RunManifest run_fig2(const RunOptions& opts) {
  constexpr double kTEnd = 10.0;
  constexpr int kSamples = 2001;
  const SolverKind solver = opts.solver.value_or(SolverKind::Cluster);
  const int n = scenario_emitters(opts, solver);
  check_capacity(solver, n);
  json settings = {{"solver", to_string(solver)},   {"n_emitters", n},
                   {"kappa_over_g", kFig1Kappa},     {"gamma_over_g", kFig1Gamma},
                   {"gamma_phi_over_g", opts.gamma_phi.value_or(0.0)},
                   {"t_end_g", kTEnd},               {"n_samples", kSamples}};
  RunContext ctx("fig2", opts, settings);

  const std::vector<std::pair<std::string, InitialCondition>> cases = {
      {"fi", FullyInverted{}}, {"fshi", HalfInvertedProduct{}}, {"dicke", DickeState{n / 2}}};
  std::vector<std::optional<SolverComparison>> cmp(cases.size());
  parallel_for(cases.size(), opts.jobs, [&](std::size_t i) {
    const Configuration c = bad_cavity_config(opts, solver, n, cases[i].second, kTEnd, kSamples);
    cmp[i] = solve_and_write(ctx, c, "fig2_" + cases[i].first);
  });
  ctx.note_weak_coupling(weak_coupling(bad_cavity_config(opts, solver, n, FullyInverted{}, kTEnd, kSamples).params));

  std::vector<std::pair<std::string, SolverComparison>> rows;
  for (std::size_t i = 0; i < cases.size(); ++i) {
    if (cmp[i]) rows.emplace_back(cases[i].first, *cmp[i]);
  }
  record_comparisons(ctx, "fig2_comparison.csv", rows);
  ctx.summary()["witness_lower_bound"] = n >= 2 ? witness_lower_bound(n) : 0.0;
  return ctx.finish();
}

inline RunManifest run_fig3(const RunOptions& opts) {
  constexpr double kTEnd = 5.0;
  constexpr int kSamples = 1001;
  const SolverKind solver = opts.solver.value_or(SolverKind::Exact);
  if (solver != SolverKind::Exact) throw InvalidParameter("fig3 needs the exact solver (density-matrix analytics)");
  const int n = opts.emitters.value_or(kExactDefaultEmitters);
  if (n < 2) throw InvalidParameter("fig3 needs N >= 2");
  check_capacity(solver, n);
  if (n > kMaxNegativityEmitters) {
    throw CapacityError("fig3 negativity table supports N <= " + std::to_string(kMaxNegativityEmitters));
  }
  json settings = {{"solver", "exact"},             {"n_emitters", n},
                   {"kappa_over_g", kFig1Kappa},     {"gamma_over_g", kFig1Gamma},
                   {"gamma_phi_over_g", opts.gamma_phi.value_or(0.0)},
                   {"t_end_g", kTEnd},               {"n_samples", kSamples}};
  RunContext ctx("fig3", opts, settings);

  const Configuration c = bad_cavity_config(opts, SolverKind::Exact, n, FullyInverted{}, kTEnd, kSamples);
  SolveOptions so;
  so.keep_emitter_states = true;
  const SolveResult r = solve(c, SolverKind::Exact, so);
  ctx.note_quality(r);
  ctx.write("fig3_timeseries.csv", timeseries_table(r.records, c.params, ""), describe(c, SolverKind::Exact));

  const DickeDecomposer dec(n);
  const std::vector<JMLabel> labels = all_labels(n);
  Table d;
  d.columns = {"t_g"};
  for (const auto& l : labels) d.columns.push_back(weight_column(l));
  for (const char* extra : {"weight_sum", "c0_sup", "c0_sub", "c0_net", "c0_direct", "czz_reconstructed",
                            "czz_direct", "purity", "purity_lower_bound"}) {
    d.columns.emplace_back(extra);
  }
  double min_purity = 1.0, max_weight_error = 0.0, max_c0_error = 0.0, max_czz_error = 0.0;
  std::optional<double> crossover;
  bool was_positive = false;
  for (std::size_t k = 0; k < r.records.size(); ++k) {
    const auto comps = dec.decompose(r.emitter_states[k]);
    const RadianceSplit s = radiance_split(comps);
    const ObservableRecord& rec = r.records[k];
    std::vector<Cell> row = {rec.time};
    for (const auto& cpt : comps) row.emplace_back(cpt.weight);
    const double wsum = total_weight(comps);
    const double c0r = reconstructed_c0(comps), czzr = reconstructed_czz(comps);
    row.insert(row.end(), {wsum, s.superradiant, s.subradiant, s.net(), rec.c0.real(), czzr, rec.czz,
                           rec.purity.value_or(NAN), purity_lower_bound(comps)});
    d.add(std::move(row));
    min_purity = std::min(min_purity, rec.purity.value_or(1.0));
    max_weight_error = std::max(max_weight_error, std::abs(wsum - 1.0));
    max_c0_error = std::max(max_c0_error, std::abs(c0r - rec.c0.real()));
    max_czz_error = std::max(max_czz_error, std::abs(czzr - rec.czz));
    if (s.net() > 0.0) was_positive = true;
    if (was_positive && !crossover && s.net() < 0.0) crossover = rec.time;
  }
  ctx.write("fig3_decomposition.csv", std::move(d), "weights=p_jm");

  // Negativity of every normalized component for a single-emitter cut and a half/half cut.
  Table neg;
  neg.columns = {"two_j", "two_m", "subset_size", "negativity"};
  std::vector<std::vector<int>> cuts = {{0}};
  if (n / 2 > 1) {
    std::vector<int> half;
    for (int i = 0; i < n / 2; ++i) half.push_back(i);
    cuts.push_back(half);
  }
  double central_negativity = 0.0;
  for (const auto& l : labels) {
    const ComplexMatrix rho = dec.sectors().rho(l);
    for (const auto& cut : cuts) {
      const double v = negativity(rho, n, cut);
      neg.add({static_cast<double>(l.two_j), static_cast<double>(l.two_m), static_cast<double>(cut.size()), v});
      if (l.two_j == n && l.two_m == (n % 2)) central_negativity = std::max(central_negativity, v);
    }
  }
  ctx.write("fig3_negativity.csv", std::move(neg));

  ctx.note_weak_coupling(weak_coupling(c.params));
  ctx.summary()["min_purity"] = min_purity;
  ctx.summary()["max_weight_sum_error"] = max_weight_error;
  ctx.summary()["max_c0_reconstruction_error"] = max_c0_error;
  ctx.summary()["max_czz_reconstruction_error"] = max_czz_error;
  ctx.summary()["net_split_crossover_t_g"] = crossover ? json(*crossover) : json(nullptr);
  ctx.summary()["central_dicke_negativity"] = central_negativity;
  ctx.summary()["n_max"] = r.n_max;
  return ctx.finish();
}

inline RunManifest run_fig4(const RunOptions& opts) {
  constexpr double kTEnd = 10.0;
  constexpr int kSamples = 1001;
  constexpr int kSweepSamples = 401;
  const SolverKind solver = opts.solver.value_or(SolverKind::Exact);
  if (solver != SolverKind::Exact) throw InvalidParameter("fig4 needs the exact solver (photon Fock start)");
  std::vector<int> ns = {2, 4};
  if (opts.emitters) ns = {*opts.emitters};
  for (int n : ns) check_capacity(solver, n);
  const std::string sweep_spec = opts.sweep_gamma.value_or(kDefaultGammaSweep);
  const std::vector<double> gammas = parse_range(sweep_spec);
  const double gamma_phi = opts.gamma_phi.value_or(0.0);

  json settings = {{"solver", "exact"},         {"n_emitters", ns},
                   {"kappa_over_g", kFig4Kappa}, {"gamma_over_g", kFig4Gamma},
                   {"gamma_phi_over_g", gamma_phi},
                   {"t_end_g", kTEnd},           {"n_samples", kSamples},
                   {"sweep_gamma", sweep_spec},  {"sweep_n_samples", kSweepSamples}};
  RunContext ctx("fig4", opts, settings);

  SystemParams base;
  base.kappa = kFig4Kappa;
  base.gamma = kFig4Gamma;
  base.gamma_phi = gamma_phi;

  struct PerN {
    double min_witness = 0.0, max_overlap = 0.0;
    ThresholdResult threshold;
  };
  std::vector<PerN> per(ns.size());
  // Time traces first (one task per N), then each sweep fans out over jobs.
  parallel_for(ns.size(), opts.jobs, [&](std::size_t i) {
    SystemParams p = base;
    p.n_emitters = ns[i];
    TimeGrid g;
    g.t_end = kTEnd;
    g.n_samples = kSamples;
    const Configuration c = validate(p, PhotonFock{ns[i] / 2}, g, SolverKind::Exact).config;
    const SolveResult r = solve(c, SolverKind::Exact);
    ctx.note_quality(r);
    ctx.write("fig4_n" + std::to_string(ns[i]) + ".csv", timeseries_table(r.records, c.params, ""),
              describe(c, SolverKind::Exact));
    per[i].min_witness = witness_trace(r.records).min_value;
    for (const auto& rec : r.records) per[i].max_overlap = std::max(per[i].max_overlap, rec.dicke_overlap.value_or(0));
  });
  TimeGrid sweep_grid;
  sweep_grid.t_end = kTEnd;
  sweep_grid.n_samples = kSweepSamples;
  for (std::size_t i = 0; i < ns.size(); ++i) {
    per[i].threshold = threshold_sweep(base, ns[i], gammas, sweep_grid, opts.jobs);
  }

  Table sweep;
  sweep.columns = {"n_emitters", "gamma_over_g", "min_witness"};
  Table crit;
  crit.columns = {"n_emitters", "critical_gamma_over_g", "monotone"};
  json per_json = json::object();
  for (std::size_t i = 0; i < ns.size(); ++i) {
    const ThresholdResult& t = per[i].threshold;
    for (std::size_t k = 0; k < t.gamma_grid.size(); ++k) {
      sweep.add({static_cast<double>(ns[i]), t.gamma_grid[k], t.min_witness[k]});
    }
    crit.add({static_cast<double>(ns[i]), t.critical_gamma, t.monotone ? 1.0 : 0.0});
    per_json["n" + std::to_string(ns[i])] = {{"min_witness", per[i].min_witness},
                                             {"max_dicke_overlap", per[i].max_overlap},
                                             {"critical_gamma_over_g", t.critical_gamma},
                                             {"monotone", t.monotone}};
  }
  ctx.write("fig4_threshold.csv", std::move(sweep));
  ctx.write("fig4_critical.csv", std::move(crit), "resolution=" + format_number(kThresholdResolution));
  ctx.note_weak_coupling(false);
  ctx.summary()["per_n"] = per_json;
  return ctx.finish();
}

/// Runs a configuration file. Flags override the file's solver and dephasing.
inline RunManifest run_config(const ConfigFile& file, const RunOptions& opts) {
  Configuration raw = file.config;
  if (opts.solver) raw.solver = *opts.solver;
  if (opts.gamma_phi) raw.params.gamma_phi = *opts.gamma_phi;
  if (opts.emitters) raw.params.n_emitters = *opts.emitters;
  check_capacity(raw.solver, raw.params.n_emitters);
  const ValidationReport rep = validate(raw.params, raw.initial, raw.grid, raw.solver, raw.correlations);
  const Configuration& c = rep.config;
  RunContext ctx(file.name, opts, to_json(c, file.photon_cutoff));
  ctx.note_weak_coupling(rep.weak_coupling);
  SolveOptions so;
  so.photon_cutoff = file.photon_cutoff;
  if (auto cmp = solve_and_write(ctx, c, file.name, so)) {
    record_comparisons(ctx, file.name + "_comparison.csv", {{to_string(c.initial), *cmp}});
  }
  json warnings = json::array();
  for (const auto& w : rep.warnings) warnings.push_back(w);
  ctx.summary()["warnings"] = warnings;
  return ctx.finish();
}

inline RunManifest run_scenario(const std::string& name_or_path, const RunOptions& opts) {
  if (name_or_path == "fig1") return run_fig1(opts);
  if (name_or_path == "fig2") return run_fig2(opts);
  if (name_or_path == "fig3") return run_fig3(opts);
  if (name_or_path == "fig4") return run_fig4(opts);
  const fs::path path(name_or_path);
  if (fs::is_regular_file(path)) return run_config(load_config(path), opts);
  throw InvalidParameter("unknown scenario '" + name_or_path + "' (not a built-in name or a readable config file)");
}

// ---------------------------------------------------------------------------
// Parameter sweeps over a configuration file

inline const std::vector<std::string>& sweepable_parameters() {
  static const std::vector<std::string> keys = {"kappa_over_g", "gamma_over_g", "gamma_phi_over_g",
                                                "detuning_over_g", "n_emitters"};
  return keys;
}

/// Re-runs `file` once per value of `param`, writing `<name>_<i>.csv` per point
/// and `<name>_sweep.csv` with per-point extrema.
inline RunManifest run_sweep(const ConfigFile& file, const std::string& param, const std::vector<double>& values,
                             const RunOptions& opts) {
  bool known = false;
  for (const auto& k : sweepable_parameters()) known = known || k == param;
  if (!known) throw InvalidParameter("parameter '" + param + "' cannot be swept");
  if (values.empty()) throw InvalidParameter("sweep needs at least one value");

  std::vector<Configuration> configs;
  for (double v : values) {
    Configuration c = file.config;
    if (opts.solver) c.solver = *opts.solver;
    if (opts.gamma_phi) c.params.gamma_phi = *opts.gamma_phi;
    if (param == "kappa_over_g") c.params.kappa = v;
    if (param == "gamma_over_g") c.params.gamma = v;
    if (param == "gamma_phi_over_g") c.params.gamma_phi = v;
    if (param == "detuning_over_g") c.params.detuning = v;
    if (param == "n_emitters") {
      if (v != std::floor(v)) throw InvalidParameter("n_emitters sweep values must be integers");
      c.params.n_emitters = static_cast<int>(v);
    }
    if (c.solver == SolverKind::Both) throw InvalidParameter("sweep takes a single solver (exact or cluster)");
    check_capacity(c.solver, c.params.n_emitters);
    configs.push_back(validate(c.params, c.initial, c.grid, c.solver, c.correlations).config);
  }
  json settings = to_json(file.config, file.photon_cutoff);
  settings["sweep_parameter"] = param;
  settings["sweep_values"] = values;
  if (opts.solver) settings["solver"] = to_string(*opts.solver);
  if (opts.gamma_phi) settings["gamma_phi_over_g"] = *opts.gamma_phi;
  const std::string name = file.name + "_sweep";
  RunContext ctx(name, opts, settings);

  struct Point {
    double peak_total = 0.0, min_witness = 0.0, min_purity = NAN;
  };
  std::vector<Point> pts(configs.size());
  parallel_for(configs.size(), opts.jobs, [&](std::size_t i) {
    const Configuration& c = configs[i];
    SolveOptions so;
    so.photon_cutoff = file.photon_cutoff;
    so.check_positivity = false;
    const SolveResult r = solve(c, c.solver, so);
    ctx.note_quality(r);
    ctx.note_weak_coupling(weak_coupling(c.params));
    ctx.write(file.name + "_" + std::to_string(i) + ".csv", timeseries_table(r.records, c.params, ""),
              describe(c, c.solver) + " " + param + "=" + format_number(values[i]));
    Point& p = pts[i];
    p.peak_total = -INFINITY;
    for (const auto& rec : r.records) {
      p.peak_total = std::max(p.peak_total, emission_rates(rec, c.params).total());
      if (rec.purity) p.min_purity = std::isnan(p.min_purity) ? *rec.purity : std::min(p.min_purity, *rec.purity);
    }
    p.min_witness = witness_trace(r.records).min_value;
  });
  Table t;
  t.columns = {"index", param, "peak_gamma_tot", "min_witness", "min_purity"};
  for (std::size_t i = 0; i < pts.size(); ++i) {
    t.add({static_cast<double>(i), values[i], pts[i].peak_total, pts[i].min_witness,
           std::isnan(pts[i].min_purity) ? Cell{} : Cell{pts[i].min_purity}});
  }
  ctx.write(name + ".csv", std::move(t));
  return ctx.finish();
}

// ---------------------------------------------------------------------------
// Comparing runs

struct ColumnDiff {
  std::string file;
  std::string column;
  double max_abs = 0.0;
  double rms = 0.0;
  double peak_rel = 0.0;  // |max a - max b| / |max b|
  std::size_t compared = 0;
};

struct DiffReport {
  std::vector<ColumnDiff> columns;
  std::vector<std::string> only_in_a, only_in_b;

  double max_abs() const {
    double m = 0.0;
    for (const auto& c : columns) m = std::max(m, c.max_abs);
    return m;
  }
  const ColumnDiff& find(const std::string& file, const std::string& column) const {
    for (const auto& c : columns) {
      if (c.file == file && c.column == column) return c;
    }
    throw InvalidParameter("diff report has no entry for " + file + ":" + column);
  }
};

/// Per-column differences of two tables with identical schemas and row counts.
/// Rows where either cell is empty are skipped, so exact-only columns compare
/// cleanly against cluster output.
inline std::vector<ColumnDiff> diff_tables(const Table& a, const Table& b, const std::string& label) {
  if (a.columns != b.columns) throw InvalidParameter("schema mismatch in " + label + ": column names differ");
  if (a.rows.size() != b.rows.size()) {
    throw InvalidParameter("schema mismatch in " + label + ": " + std::to_string(a.rows.size()) + " vs " +
                           std::to_string(b.rows.size()) + " rows");
  }
  std::vector<ColumnDiff> out;
  for (std::size_t c = 0; c < a.columns.size(); ++c) {
    ColumnDiff d;
    d.file = label;
    d.column = a.columns[c];
    double sq = 0.0, peak_a = -INFINITY, peak_b = -INFINITY;
    for (std::size_t r = 0; r < a.rows.size(); ++r) {
      const Cell& x = a.rows[r][c];
      const Cell& y = b.rows[r][c];
      if (!x || !y) continue;
      const double diff = std::abs(*x - *y);
      d.max_abs = std::max(d.max_abs, diff);
      sq += diff * diff;
      peak_a = std::max(peak_a, *x);
      peak_b = std::max(peak_b, *y);
      ++d.compared;
    }
    if (d.compared) {
      d.rms = std::sqrt(sq / static_cast<double>(d.compared));
      const double denom = std::abs(peak_b);
      d.peak_rel = denom > 0.0 ? std::abs(peak_a - peak_b) / denom : std::abs(peak_a - peak_b);
    }
    out.push_back(d);
  }
  return out;
}

inline bool is_manifest(const fs::path& p) {
  const std::string s = p.filename().string();
  return s.size() > 14 && s.substr(s.size() - 14) == ".manifest.json";
}

/// Compares two runs given as manifests (files matched by name) or as two CSV files.
inline DiffReport diff_runs(const fs::path& a, const fs::path& b) {
  DiffReport rep;
  const bool ma = is_manifest(a), mb = is_manifest(b);
  if (ma != mb) throw InvalidParameter("diff: compare two manifests or two CSV files");
  if (!ma) {
    rep.columns = diff_tables(read_csv(a), read_csv(b), a.filename().string());
    return rep;
  }
  const RunManifest x = read_manifest(a), y = read_manifest(b);
  std::vector<std::string> common;
  for (const auto& f : x.files) {
    if (std::find(y.files.begin(), y.files.end(), f) != y.files.end()) {
      common.push_back(f);
    } else {
      rep.only_in_a.push_back(f);
    }
  }
  for (const auto& f : y.files) {
    if (std::find(x.files.begin(), x.files.end(), f) == x.files.end()) rep.only_in_b.push_back(f);
  }
  if (common.empty()) throw InvalidParameter("diff: manifests share no output files");
  for (const auto& f : common) {
    const auto cols = diff_tables(read_csv(a.parent_path() / f), read_csv(b.parent_path() / f), f);
    rep.columns.insert(rep.columns.end(), cols.begin(), cols.end());
  }
  return rep;
}

/// Human-readable report: one line per file/column.
inline std::string format_diff(const DiffReport& rep) {
  std::ostringstream out;
  out << "file,column,max_abs,rms,peak_rel\n";
  for (const auto& c : rep.columns) {
    out << c.file << ',' << c.column << ',' << format_number(c.max_abs) << ',' << format_number(c.rms) << ','
        << format_number(c.peak_rel) << '\n';
  }
  for (const auto& f : rep.only_in_a) out << "# only in first run: " << f << '\n';
  for (const auto& f : rep.only_in_b) out << "# only in second run: " << f << '\n';
  return out.str();
}

}  // namespace srw::cli
