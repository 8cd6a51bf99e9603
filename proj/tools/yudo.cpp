// yudo: command-line driver for the solver and the verification reports.
//
// Exit codes: 0 success, 1 input error, 2 numerical failure.

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <openssl/evp.h>

#include "CLI11.hpp"
#include "yudo/io.hpp"
#include "yudo/yudo.hpp"

namespace fs = std::filesystem;
using yudo::io::json;

namespace {

constexpr const char* kVersion = "0.1.0";

std::string sha256_file(const fs::path& p) {
  const std::string data = yudo::io::read_text(p);
  unsigned char md[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  EVP_MD_CTX* ctx = EVP_MD_CTX_new();
  EVP_DigestInit_ex(ctx, EVP_sha256(), nullptr);
  EVP_DigestUpdate(ctx, data.data(), data.size());
  EVP_DigestFinal_ex(ctx, md, &len);
  EVP_MD_CTX_free(ctx);
  std::string hex;
  char buf[3];
  for (unsigned int i = 0; i < len; ++i) {
    std::snprintf(buf, sizeof buf, "%02x", md[i]);
    hex += buf;
  }
  return hex;
}

struct Globals {
  std::string config;
  std::string out = "yudo_out";
  std::uint64_t seed = 0;
  unsigned threads = 0;
};

/// Collects what a command read and wrote; always written to manifest.json.
class Manifest {
 public:
  Manifest(std::string command, const Globals& g) : command_(std::move(command)), g_(g) {
    start_ = std::chrono::steady_clock::now();
  }

  void input(const std::string& role, const fs::path& p) {
    json e{{"role", role}, {"path", p.string()}};
    if (fs::is_regular_file(p)) e["sha256"] = sha256_file(p);
    inputs_.push_back(e);
  }
  void config(const json& c) { config_ = c; }
  void output(const fs::path& p) { outputs_.push_back(p); }

  void write(int exit_code, const std::string& error) {
    json m;
    m["tool"] = "yudo";
    m["version"] = kVersion;
    m["command"] = command_;
    m["seed"] = g_.seed;
    m["threads"] = g_.threads;
    m["config"] = config_;
    m["inputs"] = inputs_;
    json outs = json::array();
    for (const auto& p : outputs_) {
      json e{{"path", p.filename().string()}};
      if (fs::is_regular_file(p)) e["sha256"] = sha256_file(p);
      outs.push_back(e);
    }
    m["outputs"] = outs;
    m["exit_code"] = exit_code;
    m["status"] = exit_code == 0 ? "ok" : "failed";
    if (!error.empty()) m["error"] = error;
    m["wall_time_s"] = std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
    try {
      fs::create_directories(g_.out);
      yudo::io::write_json(fs::path(g_.out) / "manifest.json", m);
    } catch (const std::exception& e) {
      std::cerr << "warning: could not write manifest: " << e.what() << "\n";
    }
  }

 private:
  std::string command_;
  Globals g_;
  json config_ = nullptr;
  json inputs_ = json::array();
  std::vector<fs::path> outputs_;
  std::chrono::steady_clock::time_point start_;
};

std::vector<double> parse_list(const std::string& s) {
  std::vector<double> v;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) {
    try {
      v.push_back(std::stod(item));
    } catch (const std::exception&) {
      throw yudo::InvalidInput("bad number '" + item + "' in list '" + s + "'");
    }
  }
  return v;
}

json load_config(const Globals& g, Manifest& m) {
  if (g.config.empty()) return json::object();
  m.input("config", g.config);
  json c = yudo::io::read_json(g.config);
  m.config(c);
  return c;
}

fs::path base_of(const Globals& g) { return g.config.empty() ? fs::path{} : fs::path(g.config).parent_path(); }

fs::path out_file(const Globals& g, Manifest& m, const std::string& name) {
  fs::create_directories(g.out);
  const fs::path p = fs::path(g.out) / name;
  m.output(p);
  return p;
}

void write_json_out(const Globals& g, Manifest& m, const std::string& name, const json& j) {
  yudo::io::write_json(out_file(g, m, name), j);
}

void write_text_out(const Globals& g, Manifest& m, const std::string& name, const std::string& s) {
  yudo::io::write_text(out_file(g, m, name), s);
}

std::string snapshot_name(std::size_t k) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "snapshot_%04zu.csv", k);
  return buf;
}

yudo::ParticleField initial_field(const Globals& g, Manifest& m, const json& cfg, const std::string& field_path) {
  if (!field_path.empty()) {
    m.input("field", field_path);
    if (fs::exists(yudo::io::sidecar_path(field_path))) m.input("field_sidecar", yudo::io::sidecar_path(field_path));
    return yudo::io::read_field(field_path);
  }
  if (cfg.contains("initial")) return yudo::io::field_from_json(cfg.at("initial"), base_of(g));
  throw yudo::InvalidInput("no initial field: pass --field or give 'initial' in the config");
}

// ---- commands ----------------------------------------------------------------

struct SimulateArgs {
  std::string field;
};

void cmd_simulate(const Globals& g, Manifest& m, const SimulateArgs& a) {
  if (g.config.empty()) throw yudo::InvalidInput("simulate needs --config");
  const json cfg_json = load_config(g, m);
  const auto cfg = yudo::io::sim_config_from_json(cfg_json, base_of(g));
  const auto omega0 = initial_field(g, m, cfg_json, a.field);

  std::vector<yudo::MonitorRow> rows;
  std::optional<yudo::Snapshot> last;
  std::size_t k = 0;
  auto on_snapshot = [&](const yudo::Snapshot& s) {
    const auto name = snapshot_name(k++);
    yudo::io::write_field(out_file(g, m, name), s.field);
    m.output(fs::path(g.out) / yudo::io::sidecar_path(name));
    rows.push_back(s.monitor);
    last = s;
  };
  try {
    const auto traj = yudo::run(omega0, cfg, on_snapshot);
    write_text_out(g, m, "monitors.csv", yudo::io::monitors_csv(rows, cfg.monitor_p_grid));
    json summary;
    summary["kernel"] = yudo::io::to_json(traj.kernel);
    summary["particles"] = omega0.size();
    summary["snapshots"] = traj.snapshots.size();
    json R = json::array();
    for (const auto& [t, r] : traj.R_of_t) R.push_back({t, r});
    summary["R_of_t"] = R;
    const double M = yudo::lp_ul_norm(omega0, cfg.monitor_p_grid.empty() ? 4.0 : cfg.monitor_p_grid.back(),
                                      cfg.monitor_radius, cfg.monitor_spacing);
    const double p = cfg.monitor_p_grid.empty() ? 4.0 : cfg.monitor_p_grid.back();
    if (p > 2.0) summary["r_growth"] = yudo::io::to_json(yudo::r_growth_check(traj, M, p));
    write_json_out(g, m, "run.json", summary);
  } catch (const yudo::NumericalBlowup&) {
    if (!rows.empty()) write_text_out(g, m, "monitors.csv", yudo::io::monitors_csv(rows, cfg.monitor_p_grid));
    if (last) {
      yudo::io::write_field(out_file(g, m, "blowup_state.csv"), last->field);
      m.output(fs::path(g.out) / "blowup_state.json");
    }
    throw;
  }
}

struct NormsArgs {
  std::string field;
  std::string p_grid;
  double radius = 1.0;
  double spacing = 0.5;
  std::string theta;
};

void cmd_norms(const Globals& g, Manifest& m, const NormsArgs& a) {
  const json cfg = load_config(g, m);
  const auto f = initial_field(g, m, cfg, a.field);
  const auto grid = a.p_grid.empty() ? yudo::default_p_grid() : parse_list(a.p_grid);
  std::optional<yudo::GrowthFunction> theta;
  if (!a.theta.empty()) theta = yudo::io::parse_growth(a.theta);
  try {
    const auto rep = yudo::norm_report(f, grid, a.radius, a.spacing, theta);
    json j = yudo::io::to_json(rep);
    if (theta) j["theta"] = yudo::io::to_json(*theta);
    j["particles"] = f.size();
    write_json_out(g, m, "norms.json", j);
  } catch (const yudo::InvalidParameter& e) {
    throw yudo::InvalidInput(e.what());
  }
}

struct KernelArgs {
  std::string kernel = "biot-savart-plane";
  double side = 1.0;
  int cutoff = 64;
  double blob = 0.0;
  std::size_t samples = 10000;
  double r_min = 1e-4;
  double r_max = 1.0;
};

yudo::KernelSpec kernel_from_args(const KernelArgs& a, const json& cfg, const Globals& g) {
  if (cfg.contains("kernel")) return yudo::io::kernel_from_json(cfg.at("kernel"), base_of(g));
  try {
    if (a.kernel == "biot-savart-plane") return yudo::KernelSpec::biot_savart_plane(a.blob);
    if (a.kernel == "biot-savart-torus") return yudo::KernelSpec::biot_savart_torus(a.side, a.cutoff, a.blob);
  } catch (const yudo::InvalidParameter& e) {
    throw yudo::InvalidInput(e.what());
  }
  throw yudo::InvalidInput("unknown kernel '" + a.kernel + "' (biot-savart-plane, biot-savart-torus, or a config)");
}

void cmd_verify_kernel(const Globals& g, Manifest& m, const KernelArgs& a) {
  const json cfg = load_config(g, m);
  const auto k = kernel_from_args(a, cfg, g);
  yudo::KernelCheckOptions o;
  o.samples = a.samples;
  o.r_min = a.r_min;
  o.r_max = a.r_max;
  o.seed = g.seed;
  try {
    const auto kc = yudo::verify_kernel(k, o);
    json j;
    j["kernel"] = yudo::io::to_json(k);
    j["constants"] = yudo::io::to_json(kc);
    write_json_out(g, m, "kernel_constants.json", j);
  } catch (const yudo::InvalidParameter& e) {
    throw yudo::InvalidInput(e.what());
  }
}

struct ModulusArgs {
  std::string field;
  std::string kind = "phi_theta";
  double p = 4.0;
  std::string theta = "constant";
  std::size_t samples = 2000;
  double d_min = 1e-4;
  double d_max = 1.0;
  double blob = 0.0;
  int cutoff = 64;
};

void cmd_modulus(const Globals& g, Manifest& m, const ModulusArgs& a) {
  const json cfg = load_config(g, m);
  const auto f = initial_field(g, m, cfg, a.field);
  yudo::KernelSpec k = f.domain.is_torus() ? yudo::KernelSpec::biot_savart_torus(f.domain.side(), a.cutoff, a.blob)
                                           : yudo::KernelSpec::biot_savart_plane(a.blob);
  if (cfg.contains("kernel")) k = yudo::io::kernel_from_json(cfg.at("kernel"), base_of(g));
  try {
    const yudo::VelocityField v(k, f);
    const yudo::Box box = f.domain.is_torus() ? f.domain.cell()
                          : f.empty()         ? yudo::Box{-1, -1, 1, 1}
                                              : yudo::bounding_box(f.positions).padded(0.5);
    const auto pairs = yudo::log_uniform_pairs(f.domain, box, g.seed, a.d_min, a.d_max);
    yudo::ModulusReport rep;
    json extra;
    if (a.kind == "holder") {
      rep = yudo::holder_modulus_report(v, a.p, pairs, a.samples);
    } else if (a.kind == "phi_theta") {
      const auto theta = yudo::io::parse_growth(a.theta);
      rep = yudo::phi_theta_modulus_report(v, theta, pairs, a.samples);
      extra = yudo::io::to_json(theta);
    } else if (a.kind == "ell") {
      rep = yudo::ell_modulus_report(v, pairs, a.samples);
    } else if (a.kind == "lipschitz") {
      rep = yudo::lipschitz_report(v, pairs, a.samples);
    } else {
      throw yudo::InvalidInput("unknown modulus kind '" + a.kind + "' (holder, phi_theta, ell, lipschitz)");
    }
    json j = yudo::io::to_json(rep);
    if (!extra.is_null()) j["theta"] = extra;
    j["kernel"] = yudo::io::to_json(k);
    j["seed"] = g.seed;
    j["distance_range"] = {a.d_min, a.d_max};
    write_json_out(g, m, "modulus.json", j);
    write_text_out(g, m, "modulus.csv", yudo::io::modulus_csv(rep));
  } catch (const yudo::InvalidParameter& e) {
    throw yudo::InvalidInput(e.what());
  }
}

struct UniquenessArgs {
  std::string run_a;
  std::string run_b;
  std::string theta = "constant";
  std::optional<double> C;
};

void cmd_uniqueness(const Globals& g, Manifest& m, const UniquenessArgs& a) {
  load_config(g, m);
  m.input("run_a", a.run_a);
  m.input("run_b", a.run_b);
  const auto ta = yudo::io::read_trajectory(a.run_a);
  const auto tb = yudo::io::read_trajectory(a.run_b);
  const auto theta = yudo::io::parse_growth(a.theta);
  try {
    const auto w = yudo::ComparisonWeight::default_for(ta.snapshots.front().field);
    auto rep = yudo::flow_distance(ta, tb, w);
    rep = yudo::envelope_verdict(rep, theta, a.C);
    write_json_out(g, m, "flow_distance.json", yudo::io::to_json(rep));
    write_text_out(g, m, "flow_distance.csv", yudo::io::flow_distance_csv(rep));
  } catch (const yudo::IncompatibleRuns& e) {
    throw yudo::InvalidInput(e.what());
  } catch (const yudo::InvalidParameter& e) {
    throw yudo::InvalidInput(e.what());
  }
}

struct CascadeArgs {
  std::string field;
  std::string levels = "2,4,8,16";
};

void cmd_cascade(const Globals& g, Manifest& m, const CascadeArgs& a) {
  if (g.config.empty()) throw yudo::InvalidInput("cascade needs --config");
  const json cfg_json = load_config(g, m);
  const auto cfg = yudo::io::sim_config_from_json(cfg_json, base_of(g));
  const auto omega0 = initial_field(g, m, cfg_json, a.field);
  std::vector<double> levels = parse_list(a.levels);
  std::vector<yudo::TestFunction> tests;
  if (cfg_json.contains("cascade")) {
    const auto& c = cfg_json.at("cascade");
    if (c.contains("levels")) levels = yudo::io::doubles(c.at("levels"), "cascade.levels");
    if (c.contains("test_functions"))
      for (const auto& t : c.at("test_functions")) {
        const auto& ctr = t.at("center");
        tests.push_back(yudo::gaussian_test_function({ctr.at(0).get<double>(), ctr.at(1).get<double>()},
                                                     t.value("width", 0.5)));
      }
  }
  if (tests.empty())
    tests = {yudo::gaussian_test_function({0.0, 0.0}, 0.5), yudo::gaussian_test_function({0.5, 0.0}, 0.3),
             yudo::gaussian_test_function({-0.3, 0.4}, 0.4)};
  try {
    const auto rep = yudo::truncation_cascade(omega0, levels, cfg, tests);
    write_json_out(g, m, "cascade.json", yudo::io::to_json(rep));
  } catch (const yudo::InvalidParameter& e) {
    throw yudo::InvalidInput(e.what());
  }
}

struct OsgoodArgs {
  std::string theta = "constant";
  double p_max = 1e6;
  std::optional<double> C;
  double delta0 = 1e-4;
  double t_max = 1.0;
  int t_points = 11;
};

void cmd_osgood(const Globals& g, Manifest& m, const OsgoodArgs& a) {
  load_config(g, m);
  const auto theta = yudo::io::parse_growth(a.theta);
  try {
    json j;
    j["theta"] = yudo::io::to_json(theta);
    j["osgood"] = yudo::io::to_json(yudo::osgood_diverges(theta, a.p_max));
    j["phi_concave"] = yudo::phi_is_concave_on_grid(theta);
    if (a.C) {
      if (a.t_points < 2) throw yudo::InvalidInput("--t-points must be >= 2");
      std::vector<double> t(a.t_points);
      for (int k = 0; k < a.t_points; ++k) t[k] = a.t_max * k / (a.t_points - 1);
      const auto e = yudo::osgood_envelope(theta, *a.C, a.delta0, t);
      j["envelope"] = {{"C", *a.C}, {"delta0", a.delta0}, {"t", t}, {"E", e}};
    }
    write_json_out(g, m, "osgood.json", j);
  } catch (const yudo::InvalidParameter& e) {
    throw yudo::InvalidInput(e.what());
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Frozen-velocity Euler solver and a priori estimate checks"};
  app.require_subcommand(1);
  app.set_version_flag("--version", kVersion);
  Globals g;
  app.add_option("--config", g.config, "JSON config file")->check(CLI::ExistingFile);
  app.add_option("--out", g.out, "output directory");
  app.add_option("--seed", g.seed, "seed for all sampling");
  app.add_option("--threads", g.threads, "worker thread cap (0 = hardware)");
  app.fallthrough();

  SimulateArgs sim;
  auto* simulate = app.add_subcommand("simulate", "run the time-stepping scheme");
  simulate->add_option("--field", sim.field, "initial field CSV (overrides the config's 'initial')");

  NormsArgs na;
  auto* norms = app.add_subcommand("norms", "L^1, L^inf, L^p_ul and Y^Theta_ul norms of a field");
  norms->add_option("--field", na.field, "field CSV");
  norms->add_option("--p-grid", na.p_grid, "comma-separated exponents");
  norms->add_option("--radius", na.radius, "window radius");
  norms->add_option("--spacing", na.spacing, "ball centre spacing");
  norms->add_option("--theta", na.theta, "growth function, e.g. power:0.5");

  KernelArgs ka;
  auto* verify = app.add_subcommand("verify-kernel", "estimate the kernel constants C1, C2, C3");
  verify->add_option("--kernel", ka.kernel, "biot-savart-plane or biot-savart-torus");
  verify->add_option("--side", ka.side, "torus side length");
  verify->add_option("--cutoff", ka.cutoff, "torus Fourier cutoff");
  verify->add_option("--blob", ka.blob, "mollification length");
  verify->add_option("--samples", ka.samples, "samples per estimator");
  verify->add_option("--r-min", ka.r_min, "minimum separation");
  verify->add_option("--r-max", ka.r_max, "maximum separation");

  ModulusArgs ma;
  auto* modulus = app.add_subcommand("modulus", "empirical modulus of continuity of v = K omega");
  modulus->add_option("--field", ma.field, "field CSV");
  modulus->add_option("--kind", ma.kind, "holder, phi_theta, ell or lipschitz");
  modulus->add_option("--p", ma.p, "Holder exponent parameter p > 2");
  modulus->add_option("--theta", ma.theta, "growth function for phi_theta");
  modulus->add_option("--samples", ma.samples, "number of pairs");
  modulus->add_option("--d-min", ma.d_min, "smallest pair distance");
  modulus->add_option("--d-max", ma.d_max, "largest pair distance");
  modulus->add_option("--blob", ma.blob, "mollification length");
  modulus->add_option("--cutoff", ma.cutoff, "torus Fourier cutoff");

  UniquenessArgs ua;
  double ua_C = 0.0;
  auto* uniq = app.add_subcommand("uniqueness", "flow distance between two runs against the Osgood envelope");
  uniq->add_option("--run-a", ua.run_a, "first simulate output directory")->required();
  uniq->add_option("--run-b", ua.run_b, "second simulate output directory")->required();
  uniq->add_option("--theta", ua.theta, "growth function");
  auto* c_opt = uniq->add_option("--C", ua_C, "use this constant instead of fitting one");

  CascadeArgs ca;
  auto* cascade = app.add_subcommand("cascade", "truncation cascade and Cauchy gaps of pairings");
  cascade->add_option("--field", ca.field, "initial field CSV");
  cascade->add_option("--levels", ca.levels, "comma-separated truncation levels");

  OsgoodArgs oa;
  double oa_C = 0.0;
  auto* osgood = app.add_subcommand("osgood", "Osgood classification and envelope");
  osgood->add_option("--theta", oa.theta, "growth function");
  osgood->add_option("--p-max", oa.p_max, "upper limit of the partial integral");
  auto* oc_opt = osgood->add_option("--C", oa_C, "envelope constant (enables the envelope)");
  osgood->add_option("--delta0", oa.delta0, "envelope initial value");
  osgood->add_option("--t-max", oa.t_max, "envelope horizon");
  osgood->add_option("--t-points", oa.t_points, "envelope grid size");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }
  if (*c_opt) ua.C = ua_C;
  if (*oc_opt) oa.C = oa_C;
  yudo::set_worker_count(g.threads);

  const std::string name = app.get_subcommands().front()->get_name();
  Manifest manifest(name, g);
  int code = 0;
  std::string error;
  try {
    if (name == "simulate") cmd_simulate(g, manifest, sim);
    if (name == "norms") cmd_norms(g, manifest, na);
    if (name == "verify-kernel") cmd_verify_kernel(g, manifest, ka);
    if (name == "modulus") cmd_modulus(g, manifest, ma);
    if (name == "uniqueness") cmd_uniqueness(g, manifest, ua);
    if (name == "cascade") cmd_cascade(g, manifest, ca);
    if (name == "osgood") cmd_osgood(g, manifest, oa);
  } catch (const yudo::NumericalBlowup& e) {
    code = 2;
    error = e.what();
  } catch (const yudo::SingularityError& e) {
    code = 2;
    error = e.what();
  } catch (const yudo::Error& e) {
    code = 1;
    error = e.what();
  } catch (const std::exception& e) {
    code = 1;
    error = e.what();
  }
  manifest.write(code, error);
  if (code != 0) std::cerr << "yudo " << name << ": " << error << "\n";
  return code;
}
