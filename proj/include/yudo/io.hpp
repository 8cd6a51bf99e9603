#pragma once

// File formats: particle fields as CSV `x1,x2,weight,value` with a JSON
// sidecar, JSON configs, and JSON/CSV reports. Doubles are written with
// 17 significant digits so files round-trip exactly.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <algorithm>
#include <cmath>
#include <map>
#include <numbers>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "json.hpp"

#include "yudo/error.hpp"
#include "yudo/field.hpp"
#include "yudo/growth.hpp"
#include "yudo/kernel_constants.hpp"
#include "yudo/kernels.hpp"
#include "yudo/norms.hpp"
#include "yudo/solver.hpp"
#include "yudo/uniqueness.hpp"
#include "yudo/velocity.hpp"

namespace yudo::io {

using json = nlohmann::ordered_json;
namespace fs = std::filesystem;

inline std::string fmt17(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

inline json num(double v) {
  if (!std::isfinite(v)) return nullptr;
  return v;
}

inline void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw InvalidInput("cannot write " + path.string());
  out << text;
  if (!out) throw InvalidInput("write failed for " + path.string());
}

inline std::string read_text(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InvalidInput("cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline json read_json(const fs::path& path) {
  try {
    return json::parse(read_text(path));
  } catch (const json::exception& e) {
    throw InvalidInput("malformed JSON in " + path.string() + ": " + e.what());
  }
}

inline void write_json(const fs::path& path, const json& j) { write_text(path, j.dump(2) + "\n"); }

// ---- domain / field ------------------------------------------------------

inline json to_json(const Domain& d) {
  json j;
  j["kind"] = d.is_torus() ? "torus" : "plane";
  if (d.is_torus()) j["side"] = d.side();
  return j;
}

inline Domain domain_from_json(const json& j) {
  const std::string kind = j.value("kind", "plane");
  if (kind == "plane") return Domain::plane();
  if (kind == "torus") {
    if (!j.contains("side")) throw InvalidInput("torus domain needs a side length");
    return Domain::torus(j.at("side").get<double>());
  }
  throw InvalidInput("unknown domain kind '" + kind + "'");
}

inline fs::path sidecar_path(const fs::path& csv) {
  fs::path p = csv;
  return p.replace_extension(".json");
}

/// Writes `<stem>.csv` and the sidecar `<stem>.json`.
inline void write_field(const fs::path& csv, const ParticleField& f) {
  std::string s = "x1,x2,weight,value\n";
  for (std::size_t i = 0; i < f.size(); ++i)
    s += fmt17(f.positions[i].x1) + "," + fmt17(f.positions[i].x2) + "," + fmt17(f.weights[i]) + "," +
         fmt17(f.values[i]) + "\n";
  write_text(csv, s);
  json side;
  side["domain"] = to_json(f.domain);
  side["time_stamp"] = f.time_stamp;
  side["count"] = f.size();
  write_json(sidecar_path(csv), side);
}

/// Reads a field CSV; without a sidecar the domain is the plane and t = 0.
inline ParticleField read_field(const fs::path& csv) {
  std::ifstream in(csv);
  if (!in) throw InvalidInput("cannot open field file " + csv.string());
  Domain d = Domain::plane();
  double t = 0.0;
  if (fs::exists(sidecar_path(csv))) {
    const json side = read_json(sidecar_path(csv));
    if (side.contains("domain")) d = domain_from_json(side.at("domain"));
    t = side.value("time_stamp", 0.0);
  }
  std::string line;
  if (!std::getline(in, line)) throw InvalidInput("empty field file " + csv.string());
  if (!line.empty() && line.back() == '\r') line.pop_back();
  if (line != "x1,x2,weight,value") throw InvalidInput("field file must start with header x1,x2,weight,value");
  std::vector<Point> pos;
  std::vector<double> w, v;
  std::size_t lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    double a[4];
    std::stringstream ss(line);
    std::string cell;
    for (double& x : a) {
      if (!std::getline(ss, cell, ','))
        throw InvalidInput(csv.string() + ":" + std::to_string(lineno) + ": expected 4 columns");
      try {
        std::size_t used = 0;
        x = std::stod(cell, &used);
      } catch (const std::exception&) {
        throw InvalidInput(csv.string() + ":" + std::to_string(lineno) + ": bad number '" + cell + "'");
      }
    }
    pos.push_back({a[0], a[1]});
    w.push_back(a[2]);
    v.push_back(a[3]);
  }
  return make_field(d, std::move(pos), std::move(w), std::move(v), t);
}

// ---- growth functions ------------------------------------------------------

inline json to_json(const GrowthFunction& g) {
  json j;
  j["family"] = g.name();
  switch (g.family()) {
    case GrowthFunction::Family::Constant: j["c"] = g.parameter(); break;
    case GrowthFunction::Family::Power: j["alpha"] = g.parameter(); break;
    case GrowthFunction::Family::IteratedLog: j["m"] = static_cast<int>(g.parameter()); break;
    case GrowthFunction::Family::Log1p: break;
  }
  j["scale"] = g.scale();
  return j;
}

inline GrowthFunction growth_from_json(const json& j) {
  if (j.is_string()) throw InvalidInput("growth function must be an object, e.g. {\"family\": \"power\", \"alpha\": 0.5}");
  const std::string fam = j.value("family", "");
  try {
    if (fam == "constant") return GrowthFunction::constant(j.value("c", 1.0));
    if (fam == "power") return GrowthFunction::power(j.at("alpha").get<double>());
    if (fam == "iterated_log") return GrowthFunction::iterated_log(j.at("m").get<int>());
    if (fam == "log1p") return GrowthFunction::log1p();
  } catch (const json::exception& e) {
    throw InvalidInput(std::string("growth function: ") + e.what());
  } catch (const InvalidParameter& e) {
    throw InvalidInput(e.what());
  }
  throw InvalidInput("unknown growth family '" + fam + "'");
}

/// Command-line form: "constant[:c]", "power:alpha", "iterated_log:m", "log1p".
inline GrowthFunction parse_growth(const std::string& s) {
  const auto colon = s.find(':');
  const std::string fam = s.substr(0, colon);
  const std::string arg = colon == std::string::npos ? "" : s.substr(colon + 1);
  json j{{"family", fam}};
  try {
    if (fam == "constant" && !arg.empty()) j["c"] = std::stod(arg);
    if (fam == "power") j["alpha"] = std::stod(arg);
    if (fam == "iterated_log") j["m"] = std::stoi(arg);
  } catch (const std::exception&) {
    throw InvalidInput("bad growth function '" + s + "'");
  }
  return growth_from_json(j);
}

// ---- kernels and configs -------------------------------------------------

/// {"kind": "biot_savart_plane" | "biot_savart_torus" | "user_tabulated",
///  "side": L, "fourier_cutoff": M, "blob_delta": d, "table": path}
/// Relative table paths resolve against `base`.
inline KernelSpec kernel_from_json(const json& j, const fs::path& base = {}) {
  const std::string kind = j.value("kind", "biot_savart_plane");
  const double delta = j.value("blob_delta", 0.0);
  try {
    if (kind == "biot_savart_plane") return KernelSpec::biot_savart_plane(delta);
    if (kind == "biot_savart_torus")
      return KernelSpec::biot_savart_torus(j.value("side", 1.0), j.value("fourier_cutoff", 64), delta);
    if (kind == "user_tabulated") {
      if (!j.contains("table")) throw InvalidInput("user_tabulated kernel needs a 'table' path");
      fs::path p = j.at("table").get<std::string>();
      if (p.is_relative() && !base.empty()) p = base / p;
      auto table = std::make_shared<const TabulatedKernel>(TabulatedKernel::load_csv(p.string()));
      Domain d = j.contains("domain") ? domain_from_json(j.at("domain")) : Domain::plane();
      return KernelSpec::tabulated(table, d);
    }
  } catch (const InvalidParameter& e) {
    throw InvalidInput(e.what());
  } catch (const json::exception& e) {
    throw InvalidInput(std::string("kernel: ") + e.what());
  }
  throw InvalidInput("unknown kernel kind '" + kind + "'");
}

inline json to_json(const KernelSpec& k) {
  json j;
  j["kind"] = k.name();
  if (k.kind() == KernelSpec::Kind::BiotSavartTorus) {
    j["side"] = k.domain().side();
    j["fourier_cutoff"] = k.fourier_cutoff();
  }
  if (k.kind() == KernelSpec::Kind::UserTabulated) j["domain"] = to_json(k.domain());
  j["blob_delta"] = k.blob_delta();
  return j;
}

/// Initial-field generators usable from configs:
///   {"kind": "disc_patch", "center": [x, y], "radius": R, "rings": K, "value": v}
///   {"kind": "ellipse_patch", "a": a, "b": b, "rings": K, "value": v}
///   {"kind": "log_spike", "alpha": 0.5, "r_min": 1e-120, "r_split": 0.1,
///    "ratio": e, "dr": 0.05, "min_count": 16}   (|log|x||^alpha on the unit disc)
///   {"kind": "lattice_gaussian", "domain": {...}, "box": [lo1, lo2, hi1, hi2],
///    "h": h, "center": [x, y], "width": s, "amplitude": A, "zero_mean": false}
///   {"kind": "file", "path": "field.csv"}
inline ParticleField field_from_json(const json& j, const fs::path& base = {}) {
  const std::string kind = j.value("kind", "");
  auto point = [&](const char* key, Point def) {
    if (!j.contains(key)) return def;
    const auto& a = j.at(key);
    if (!a.is_array() || a.size() != 2) throw InvalidInput(std::string("'") + key + "' must be [x, y]");
    return Point{a[0].get<double>(), a[1].get<double>()};
  };
  try {
    if (kind == "disc_patch")
      return disc_patch(point("center", {0, 0}), j.value("radius", 1.0), j.value("rings", 20), j.value("value", 1.0));
    if (kind == "ellipse_patch")
      return ellipse_patch(j.value("a", 2.0), j.value("b", 1.0), j.value("rings", 20), j.value("value", 1.0));
    if (kind == "log_spike") {
      const double alpha = j.value("alpha", 0.5);
      const auto edges = graded_ring_edges(j.value("r_min", 1e-120), j.value("r_split", 0.1), 1.0,
                                           j.value("ratio", std::numbers::e), j.value("dr", 0.05));
      return polar_lattice({0, 0}, edges,
                           [alpha](const Point& x) { return std::pow(std::abs(std::log(norm(x))), alpha); },
                           j.value("min_count", 16));
    }
    if (kind == "lattice_gaussian") {
      const Domain d = j.contains("domain") ? domain_from_json(j.at("domain")) : Domain::plane();
      Box box{-1, -1, 1, 1};
      if (j.contains("box")) {
        const auto& b = j.at("box");
        box = {b.at(0).get<double>(), b.at(1).get<double>(), b.at(2).get<double>(), b.at(3).get<double>()};
      }
      const Point c = point("center", {0, 0});
      const double s = j.value("width", 0.25), amp = j.value("amplitude", 1.0);
      auto f = uniform_lattice(d, box, j.value("h", 0.05), [&](const Point& x) {
        return amp * std::exp(-norm2(d.displacement(x, c)) / (s * s));
      });
      if (j.value("zero_mean", false)) {
        const double shift = f.mass() / f.area();
        for (auto& v : f.values) v -= shift;
      }
      return f;
    }
    if (kind == "file") {
      fs::path p = j.at("path").get<std::string>();
      if (p.is_relative() && !base.empty()) p = base / p;
      return read_field(p);
    }
  } catch (const InvalidParameter& e) {
    throw InvalidInput(e.what());
  } catch (const json::exception& e) {
    throw InvalidInput(std::string("initial field: ") + e.what());
  }
  throw InvalidInput("unknown initial field kind '" + kind + "'");
}

inline std::vector<double> doubles(const json& j, const char* what) {
  if (!j.is_array()) throw InvalidInput(std::string(what) + " must be an array of numbers");
  std::vector<double> v;
  for (const auto& x : j) v.push_back(x.get<double>());
  return v;
}

inline SimConfig sim_config_from_json(const json& j, const fs::path& base = {}) {
  SimConfig c;
  try {
    if (j.contains("kernel")) c.kernel = kernel_from_json(j.at("kernel"), base);
    c.T = j.value("T", c.T);
    c.n_steps = j.value("n_steps", c.n_steps);
    c.substeps = j.value("substeps", c.substeps);
    c.snapshots = j.value("snapshots", c.snapshots);
    if (j.contains("blob_delta") && !j.at("blob_delta").is_null()) c.blob_delta = j.at("blob_delta").get<double>();
    c.track_jacobian = j.value("track_jacobian", c.track_jacobian);
    c.jacobian_fd_step = j.value("jacobian_fd_step", c.jacobian_fd_step);
    if (j.contains("monitor")) {
      const auto& m = j.at("monitor");
      if (m.contains("p_grid")) c.monitor_p_grid = doubles(m.at("p_grid"), "monitor.p_grid");
      c.monitor_radius = m.value("radius", c.monitor_radius);
      c.monitor_spacing = m.value("spacing", c.monitor_spacing);
      c.probe_points = m.value("probe_points", c.probe_points);
    }
    if (j.contains("theta")) c.theta = growth_from_json(j.at("theta"));
    c.validate();
  } catch (const json::exception& e) {
    throw InvalidInput(std::string("config: ") + e.what());
  } catch (const InvalidParameter& e) {
    throw InvalidInput(e.what());
  }
  return c;
}

inline json to_json(const SimConfig& c) {
  json j;
  j["kernel"] = to_json(c.kernel);
  j["T"] = c.T;
  j["n_steps"] = c.n_steps;
  j["substeps"] = c.substeps;
  j["snapshots"] = c.snapshots;
  j["blob_delta"] = c.blob_delta ? json(*c.blob_delta) : json(nullptr);
  j["track_jacobian"] = c.track_jacobian;
  j["jacobian_fd_step"] = c.jacobian_fd_step;
  j["monitor"] = {{"p_grid", c.monitor_p_grid},
                  {"radius", c.monitor_radius},
                  {"spacing", c.monitor_spacing},
                  {"probe_points", c.probe_points}};
  if (c.theta) j["theta"] = to_json(*c.theta);
  return j;
}

// ---- reports ---------------------------------------------------------------

inline std::string p_label(double p) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%g", p);
  return buf;
}

inline json to_json(const NormReport& r) {
  json j;
  j["l1"] = num(r.l1);
  j["linf"] = num(r.linf);
  json ul = json::object();
  for (const auto& [p, v] : r.lp_ul) ul[p_label(p)] = num(v);
  j["lp_ul"] = ul;
  j["y_theta_ul"] = r.y_theta_ul ? num(*r.y_theta_ul) : json(nullptr);
  j["window_radius"] = r.window_radius;
  j["center_spacing"] = r.center_spacing;
  j["p_grid"] = r.p_grid;
  return j;
}

inline json to_json(const KernelConstants& k) {
  return {{"C1", num(k.C1)},
          {"C2", num(k.C2)},
          {"C3", num(k.C3)},
          {"sample_count", k.sample_count},
          {"min_separation", k.min_separation},
          {"seed", k.seed}};
}

inline json to_json(const ModulusReport& r) {
  json j;
  j["bound_kind"] = to_string(r.bound_kind);
  if (r.bound_kind == BoundKind::Holder) j["p"] = r.p;
  if (r.bound_kind == BoundKind::PhiTheta) j["theta"] = r.theta;
  j["pairs_sampled"] = r.pairs_sampled;
  j["pairs_used"] = r.samples.size();
  j["empirical_constant"] = num(r.empirical_constant);
  return j;
}

inline std::string modulus_csv(const ModulusReport& r) {
  std::string s = "distance,dv,bound,quotient\n";
  for (const auto& q : r.samples)
    s += fmt17(q.distance) + "," + fmt17(q.dv) + "," + fmt17(q.bound) + "," + fmt17(q.quotient) + "\n";
  return s;
}

inline json to_json(const SupNormReport& r) {
  return {{"q", r.q}, {"p", r.p}, {"sup", num(r.sup)}, {"bound", num(r.bound)}, {"ratio", num(r.ratio)},
          {"probes", r.probes}};
}

inline json to_json(const FlowDistanceReport& r) {
  json j;
  j["times"] = r.times;
  j["D"] = r.D;
  j["envelope"] = r.envelope;
  j["fitted_C"] = num(r.fitted_C);
  j["C_source"] = r.C_source;
  j["delta0"] = r.delta0;
  j["theta"] = r.theta;
  j["eta"] = r.eta;
  j["phi_concave"] = r.phi_concave;
  j["verdict"] = r.verdict;
  return j;
}

inline std::string flow_distance_csv(const FlowDistanceReport& r) {
  std::string s = "t,D,envelope\n";
  for (std::size_t k = 0; k < r.times.size(); ++k)
    s += fmt17(r.times[k]) + "," + fmt17(r.D[k]) + "," + (k < r.envelope.size() ? fmt17(r.envelope[k]) : "") + "\n";
  return s;
}

inline json to_json(const OsgoodReport& r) {
  json j;
  j["verdict"] = to_string(r.verdict);
  j["reason"] = r.reason;
  j["p_max"] = r.p_max;
  j["partial_integral"] = num(r.partial_integral);
  json tr = json::array();
  for (const auto& [p, v] : r.trace) tr.push_back({{"p", p}, {"integral", num(v)}});
  j["trace"] = tr;
  return j;
}

inline json to_json(const CascadeReport& r) {
  json j;
  j["levels"] = r.levels;
  j["test_functions"] = r.test_names;
  j["pairings"] = r.pairings;
  j["cauchy_gaps"] = r.cauchy_gaps;
  j["decreasing"] = r.decreasing;
  return j;
}

inline json to_json(const GrowthCheckReport& r) {
  json j;
  j["variant"] = r.variant;
  if (r.p > 0.0) j["p"] = r.p;
  j["norm0"] = num(r.norm0);
  j["A"] = num(r.A);
  j["margin"] = num(r.margin);
  j["within"] = r.within;
  j["times"] = r.times;
  j["R"] = r.R;
  j["comparison"] = r.comparison;
  return j;
}

/// `t,l1,linf,lp_ul_p<p>...,[y_theta_ul,]R`
inline std::string monitors_csv(const std::vector<MonitorRow>& rows, const std::vector<double>& p_grid) {
  std::string s = "t,l1,linf";
  for (double p : p_grid) s += ",lp_ul_p" + p_label(p);
  const bool y = !rows.empty() && rows.front().y_theta_ul.has_value();
  if (y) s += ",y_theta_ul";
  s += ",R\n";
  for (const auto& r : rows) {
    s += fmt17(r.t) + "," + fmt17(r.l1) + "," + fmt17(r.linf);
    for (double v : r.lp_ul) s += "," + fmt17(v);
    if (y) s += "," + fmt17(r.y_theta_ul.value_or(0.0));
    s += "," + fmt17(r.R) + "\n";
  }
  return s;
}

/// Reads back the snapshots of a `simulate` output directory
/// (`snapshot_0000.csv`, ...) as a trajectory with zero flow displacement.
inline Trajectory read_trajectory(const fs::path& dir) {
  if (!fs::is_directory(dir)) throw InvalidInput("not a run directory: " + dir.string());
  std::vector<fs::path> files;
  for (const auto& e : fs::directory_iterator(dir)) {
    const std::string name = e.path().filename().string();
    if (name.rfind("snapshot_", 0) == 0 && e.path().extension() == ".csv") files.push_back(e.path());
  }
  if (files.empty()) throw InvalidInput("no snapshot_*.csv files in " + dir.string());
  std::sort(files.begin(), files.end());
  Trajectory t;
  for (std::size_t k = 0; k < files.size(); ++k) {
    Snapshot s;
    s.step = k;
    s.field = read_field(files[k]);
    s.flow_displacement.assign(s.field.size(), Vec2{});
    t.snapshots.push_back(std::move(s));
  }
  return t;
}

}  // namespace yudo::io
