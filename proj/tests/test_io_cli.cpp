#include <sys/wait.h>

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <string>

#include <gtest/gtest.h>

#include "yudo/io.hpp"

using namespace yudo;
namespace fs = std::filesystem;
using io::json;

#ifndef YUDO_CLI
#error "YUDO_CLI must name the command-line binary"
#endif

namespace {

fs::path scratch(const std::string& name) {
  const fs::path p = fs::path(testing::TempDir()) / ("yudo_io_" + name);
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

int cli(const std::string& args) {
  const std::string cmd = std::string(YUDO_CLI) + " " + args + " >/dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

json small_sim_config() {
  return json::parse(R"({
    "T": 0.5, "n_steps": 4, "substeps": 2, "snapshots": 2,
    "initial": {"kind": "disc_patch", "radius": 1.0, "rings": 5},
    "monitor": {"p_grid": [2, 4], "probe_points": 4}
  })");
}

}  // namespace

TEST(Io, Fmt17RoundTrips) {
  Rng rng(4);
  for (int i = 0; i < 1000; ++i) {
    const double v = std::ldexp(rng.uniform(-1, 1), static_cast<int>(rng.uniform(-300, 300)));
    EXPECT_EQ(std::stod(io::fmt17(v)), v);
  }
  EXPECT_TRUE(io::num(std::nan("")).is_null());
  EXPECT_EQ(io::num(2.5).get<double>(), 2.5);
}

TEST(Io, FieldRoundTripWithSidecar) {
  const auto dir = scratch("field");
  Rng rng(8);
  std::vector<Point> p;
  std::vector<double> w, v;
  for (int i = 0; i < 200; ++i) {
    p.push_back({rng.uniform(0, 2), rng.uniform(0, 2)});
    w.push_back(rng.uniform(1e-3, 1e-2));
    v.push_back(rng.uniform(-1, 1) * 1e-7);
  }
  const auto f = make_field(Domain::torus(2.0), p, w, v, 0.375);
  io::write_field(dir / "f.csv", f);
  ASSERT_TRUE(fs::exists(dir / "f.json"));
  const auto g = io::read_field(dir / "f.csv");
  EXPECT_TRUE(g.domain.is_torus());
  EXPECT_EQ(g.domain.side(), 2.0);
  EXPECT_EQ(g.time_stamp, 0.375);
  EXPECT_EQ(g.positions, f.positions);
  EXPECT_EQ(g.weights, f.weights);
  EXPECT_EQ(g.values, f.values);
  fs::remove(dir / "f.json");
  const auto plane = io::read_field(dir / "f.csv");
  EXPECT_FALSE(plane.domain.is_torus());
  EXPECT_EQ(plane.time_stamp, 0.0);
}

TEST(Io, MalformedFieldFiles) {
  const auto dir = scratch("bad");
  EXPECT_THROW(io::read_field(dir / "missing.csv"), InvalidInput);
  io::write_text(dir / "a.csv", "x,y,w,v\n0,0,1,1\n");
  EXPECT_THROW(io::read_field(dir / "a.csv"), InvalidInput);
  io::write_text(dir / "b.csv", "x1,x2,weight,value\n0,0,1\n");
  EXPECT_THROW(io::read_field(dir / "b.csv"), InvalidInput);
  io::write_text(dir / "c.csv", "x1,x2,weight,value\n0,zero,1,1\n");
  EXPECT_THROW(io::read_field(dir / "c.csv"), InvalidInput);
  io::write_text(dir / "d.csv", "x1,x2,weight,value\n0,0,-1,1\n");
  EXPECT_THROW(io::read_field(dir / "d.csv"), InvalidInput);
  io::write_text(dir / "e.csv", "x1,x2,weight,value\r\n0,0,1,1\r\n\r\n");
  EXPECT_EQ(io::read_field(dir / "e.csv").size(), 1u);
  io::write_text(dir / "f.json", "{not json");
  EXPECT_THROW(io::read_json(dir / "f.json"), InvalidInput);
}

TEST(Io, GrowthFunctions) {
  for (const auto& g : {GrowthFunction::constant(2.0), GrowthFunction::power(0.5), GrowthFunction::iterated_log(2),
                        GrowthFunction::log1p()}) {
    const auto back = io::growth_from_json(io::to_json(g));
    EXPECT_EQ(back.name(), g.name());
    EXPECT_EQ(back(7.5), g(7.5));
  }
  EXPECT_EQ(io::parse_growth("constant")(100.0), 1.0);
  EXPECT_EQ(io::parse_growth("power:1")(9.0), GrowthFunction::power(1.0)(9.0));
  EXPECT_EQ(io::parse_growth("iterated_log:3").name(), GrowthFunction::iterated_log(3).name());
  EXPECT_THROW(io::parse_growth("power:x"), InvalidInput);
  EXPECT_THROW(io::parse_growth("cubic"), InvalidInput);
  EXPECT_THROW(io::parse_growth("power:-1"), InvalidInput);
  EXPECT_THROW(io::growth_from_json(json("power")), InvalidInput);
}

TEST(Io, Kernels) {
  const auto t = io::kernel_from_json(io::to_json(KernelSpec::biot_savart_torus(2.0, 16, 0.1)));
  EXPECT_EQ(t.kind(), KernelSpec::Kind::BiotSavartTorus);
  EXPECT_EQ(t.domain().side(), 2.0);
  EXPECT_EQ(t.fourier_cutoff(), 16);
  EXPECT_EQ(t.blob_delta(), 0.1);
  EXPECT_EQ(io::kernel_from_json(json::object()).kind(), KernelSpec::Kind::BiotSavartPlane);
  EXPECT_THROW(io::kernel_from_json(json{{"kind", "stokeslet"}}), InvalidInput);
  EXPECT_THROW(io::kernel_from_json(json{{"kind", "biot_savart_plane"}, {"blob_delta", -1}}), InvalidInput);
  EXPECT_THROW(io::kernel_from_json(json{{"kind", "user_tabulated"}}), InvalidInput);

  const auto dir = scratch("table");
  io::write_text(dir / "k.csv",
                 "x1,x2,y1,y2,k1,k2\n-1,-1,0,0,1,2\n1,-1,0,0,1,2\n-1,1,0,0,1,2\n1,1,0,0,1,2\n");
  const auto k = io::kernel_from_json(json{{"kind", "user_tabulated"}, {"table", "k.csv"}}, dir);
  EXPECT_EQ(k.kind(), KernelSpec::Kind::UserTabulated);
  EXPECT_EQ(k.table()->eval({0.5, 0.5}, {0, 0}), (Vec2{1, 2}));
}

TEST(Io, SimConfigRoundTrip) {
  auto j = small_sim_config();
  j["blob_delta"] = 0.05;
  j["theta"] = {{"family", "power"}, {"alpha", 0.5}};
  const auto c = io::sim_config_from_json(j);
  EXPECT_EQ(c.T, 0.5);
  EXPECT_EQ(c.n_steps, 4);
  EXPECT_EQ(c.monitor_p_grid, (std::vector<double>{2, 4}));
  EXPECT_EQ(c.probe_points, 4);
  ASSERT_TRUE(c.blob_delta);
  const auto back = io::sim_config_from_json(io::to_json(c));
  EXPECT_EQ(io::to_json(back).dump(), io::to_json(c).dump());
  EXPECT_EQ(io::sim_config_from_json(json::object()).n_steps, SimConfig{}.n_steps);
  EXPECT_THROW(io::sim_config_from_json(json{{"T", -1}}), InvalidInput);
  EXPECT_THROW(io::sim_config_from_json(json{{"n_steps", "many"}}), InvalidInput);
  EXPECT_THROW(io::sim_config_from_json(json{{"monitor", {{"p_grid", 2}}}}), InvalidInput);
}

TEST(Io, FieldGenerators) {
  const auto d = io::field_from_json(json{{"kind", "disc_patch"}, {"rings", 6}, {"center", {1, 2}}});
  const auto ref = disc_patch({1, 2}, 1.0, 6);
  EXPECT_EQ(d.positions, ref.positions);
  EXPECT_NEAR(io::field_from_json(json{{"kind", "ellipse_patch"}, {"rings", 20}}).area(), 2 * std::acos(-1.0), 1e-2);
  const auto spike = io::field_from_json(json{{"kind", "log_spike"}, {"r_min", 1e-20}});
  for (std::size_t i = 0; i < spike.size(); ++i) EXPECT_LE(norm(spike.positions[i]), 1.0);
  const auto g = io::field_from_json(
      json{{"kind", "lattice_gaussian"}, {"domain", {{"kind", "torus"}, {"side", 1.0}}}, {"h", 0.125}});
  EXPECT_EQ(g.size(), 64u);
  EXPECT_GT(g.mass(), 0.0);
  const auto z = io::field_from_json(json{{"kind", "lattice_gaussian"},
                                          {"domain", {{"kind", "torus"}, {"side", 1.0}}},
                                          {"h", 0.125},
                                          {"zero_mean", true}});
  EXPECT_NEAR(z.mass(), 0.0, 1e-15);
  EXPECT_THROW(io::field_from_json(json{{"kind", "spiral"}}), InvalidInput);
  EXPECT_THROW(io::field_from_json(json{{"kind", "disc_patch"}, {"center", {1}}}), InvalidInput);
  EXPECT_THROW(io::field_from_json(json{{"kind", "disc_patch"}, {"radius", -1}}), InvalidInput);
}

TEST(Io, ReportsAndTrajectories) {
  MonitorRow r;
  r.t = 0.5;
  r.l1 = 1;
  r.linf = 2;
  r.lp_ul = {3, 4};
  r.R = 5;
  EXPECT_EQ(io::monitors_csv({r}, {2, 4}), "t,l1,linf,lp_ul_p2,lp_ul_p4,R\n0.5,1,2,3,4,5\n");

  const auto dir = scratch("traj");
  EXPECT_THROW(io::read_trajectory(dir / "nope"), InvalidInput);
  EXPECT_THROW(io::read_trajectory(dir), InvalidInput);
  const auto f = disc_patch({0, 0}, 1.0, 3);
  auto g = f;
  g.time_stamp = 0.25;
  io::write_field(dir / "snapshot_0001.csv", g);
  io::write_field(dir / "snapshot_0000.csv", f);
  const auto t = io::read_trajectory(dir);
  EXPECT_EQ(t.times(), (std::vector<double>{0.0, 0.25}));

  FlowDistanceReport rep;
  rep.times = {0, 1};
  rep.D = {0, 0.5};
  rep.envelope = {0.1, 1};
  EXPECT_EQ(io::flow_distance_csv(rep), "t,D,envelope\n0,0,0.10000000000000001\n1,0.5,1\n");
  EXPECT_EQ(io::to_json(rep)["verdict"], false);
}

TEST(Cli, ExitCodes) {
  const auto dir = scratch("codes");
  EXPECT_EQ(cli("--version"), 0);
  EXPECT_EQ(cli(""), 1);
  EXPECT_EQ(cli("frobnicate"), 1);
  EXPECT_EQ(cli("--out " + dir.string() + " simulate"), 1);
  EXPECT_EQ(cli("--out " + dir.string() + " osgood --theta power:-2"), 1);
  const json m = io::read_json(dir / "manifest.json");
  EXPECT_EQ(m["exit_code"], 1);
  EXPECT_EQ(m["status"], "failed");
  EXPECT_TRUE(m.contains("error"));

  // two huge coincident-scale values overflow the velocity on the first step
  io::write_text(dir / "hot.csv", "x1,x2,weight,value\n0,0,1,1e308\n0.001,0,1,1e308\n");
  io::write_json(dir / "hot.json", json{{"T", 1.0}, {"n_steps", 2}, {"blob_delta", 0.0},
                                        {"monitor", {{"p_grid", {2}}, {"probe_points", 0}}}});
  EXPECT_EQ(cli("--out " + (dir / "hot").string() + " --config " + (dir / "hot.json").string() +
                " simulate --field " + (dir / "hot.csv").string()),
            2);
  EXPECT_EQ(io::read_json(dir / "hot" / "manifest.json")["exit_code"], 2);
}

TEST(Cli, OsgoodAndVerifyKernel) {
  const auto dir = scratch("osgood");
  ASSERT_EQ(cli("--out " + dir.string() + " osgood --theta power:1"), 0);
  EXPECT_EQ(io::read_json(dir / "osgood.json")["osgood"]["verdict"], "converges");
  ASSERT_EQ(cli("--out " + dir.string() + " osgood --theta constant --C 1 --delta0 1e-4 --t-max 0.5 --t-points 3"), 0);
  const json o = io::read_json(dir / "osgood.json");
  EXPECT_EQ(o["osgood"]["verdict"], "diverges");
  EXPECT_EQ(o["envelope"]["E"].size(), 3u);
  const double e1 = o["envelope"]["E"][2].get<double>();
  EXPECT_NEAR(e1, std::exp(1.0 - (1.0 - std::log(1e-4)) * std::exp(-0.5)), 1e-6 * e1);

  ASSERT_EQ(cli("--out " + dir.string() + " --seed 3 verify-kernel --samples 2000"), 0);
  const json k = io::read_json(dir / "kernel_constants.json");
  EXPECT_NEAR(k["constants"]["C1"].get<double>(), 1.0 / (2.0 * std::acos(-1.0)), 1e-12);
  EXPECT_EQ(k["constants"]["seed"], 3);
  const json m = io::read_json(dir / "manifest.json");
  EXPECT_EQ(m["command"], "verify-kernel");
  EXPECT_EQ(m["seed"], 3);
  EXPECT_EQ(m["outputs"][0]["path"], "kernel_constants.json");
  EXPECT_EQ(m["outputs"][0]["sha256"].get<std::string>().size(), 64u);
}

TEST(Cli, SimulateNormsModulusAndUniqueness) {
  const auto dir = scratch("sim");
  io::write_json(dir / "sim.json", small_sim_config());
  const std::string cfg = " --config " + (dir / "sim.json").string();
  ASSERT_EQ(cli("--out " + (dir / "a").string() + cfg + " simulate"), 0);
  for (const char* f : {"snapshot_0000.csv", "snapshot_0000.json", "snapshot_0002.csv", "monitors.csv", "run.json",
                        "manifest.json"})
    EXPECT_TRUE(fs::exists(dir / "a" / f)) << f;
  const std::string monitors = io::read_text(dir / "a" / "monitors.csv");
  EXPECT_EQ(monitors.substr(0, monitors.find('\n')), "t,l1,linf,lp_ul_p2,lp_ul_p4,R");
  const json m = io::read_json(dir / "a" / "manifest.json");
  EXPECT_EQ(m["inputs"][0]["role"], "config");
  EXPECT_EQ(m["config"]["n_steps"], 4);

  ASSERT_EQ(cli("--out " + (dir / "u").string() + " uniqueness --run-a " + (dir / "a").string() + " --run-b " +
                (dir / "a").string()),
            0);
  const json u = io::read_json(dir / "u" / "flow_distance.json");
  EXPECT_EQ(u["verdict"], true);
  for (const auto& d : u["D"]) EXPECT_EQ(d.get<double>(), 0.0);
  EXPECT_TRUE(fs::exists(dir / "u" / "flow_distance.csv"));
  EXPECT_EQ(cli("--out " + (dir / "u").string() + " uniqueness --run-a " + (dir / "a").string() + " --run-b " +
                dir.string()),
            1);

  const std::string field = (dir / "a" / "snapshot_0000.csv").string();
  ASSERT_EQ(cli("--out " + (dir / "n").string() + " norms --field " + field + " --p-grid 2,4 --theta constant"), 0);
  const json n = io::read_json(dir / "n" / "norms.json");
  EXPECT_NEAR(n["l1"].get<double>(), std::acos(-1.0), 1e-12);
  EXPECT_EQ(n["linf"], 1.0);
  EXPECT_EQ(cli("--out " + (dir / "n").string() + " norms --field " + field + " --p-grid 2,x"), 1);

  ASSERT_EQ(cli("--out " + (dir / "q").string() + " modulus --field " + field + " --kind ell --samples 200 --blob 0.3"), 0);
  EXPECT_GT(io::read_json(dir / "q" / "modulus.json")["pairs_used"].get<int>(), 0);
  EXPECT_EQ(cli("--out " + (dir / "q").string() + " modulus --field " + field + " --kind sobolev"), 1);
}

TEST(Cli, SimulateIsByteIdenticalAcrossThreadCounts) {
  const auto dir = scratch("threads");
  auto j = small_sim_config();
  j["theta"] = {{"family", "constant"}};
  io::write_json(dir / "sim.json", j);
  const std::string cfg = " --config " + (dir / "sim.json").string();
  ASSERT_EQ(cli("--threads 1 --out " + (dir / "one").string() + cfg + " simulate"), 0);
  ASSERT_EQ(cli("--threads 4 --out " + (dir / "four").string() + cfg + " simulate"), 0);
  EXPECT_EQ(io::read_text(dir / "one" / "monitors.csv"), io::read_text(dir / "four" / "monitors.csv"));
  EXPECT_EQ(io::read_text(dir / "one" / "snapshot_0002.csv"), io::read_text(dir / "four" / "snapshot_0002.csv"));
}
