#include "anomalykit/config.hpp"
#include "anomalykit/error.hpp"
#include "anomalykit/experiment.hpp"
#include "anomalykit/io.hpp"

#include <doctest.h>

#include <cstdlib>
#include <fstream>
#include <sstream>

using namespace anomalykit;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("anomalykit_test_" + name);
  fs::remove_all(p);
  return p;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

}  // namespace

TEST_CASE("shipped config file equals the built-in defaults") {
  const Json file = load_config(fs::path(ANOMALYKIT_SOURCE_DIR) / "configs" / "default.json");
  CHECK(file == default_config());
  CHECK(config_hash(file) == config_hash(default_config()));
}

TEST_CASE("dotted overrides") {
  Json cfg = default_config();
  apply_override(cfg, "grid.nx=128");
  apply_override(cfg, "inclusion.center=[0.4,0.6]");
  apply_override(cfg, "boundary=dirichlet");
  apply_override(cfg, "new.section.flag=true");
  apply_override(cfg, "probe.corners.0.radius=0.5");
  CHECK(cfg["grid"]["nx"] == 128);
  CHECK(cfg["inclusion"]["center"][1] == 0.6);
  CHECK(cfg["boundary"] == "dirichlet");
  CHECK(cfg["new"]["section"]["flag"] == true);
  CHECK(cfg["probe"]["corners"][0]["radius"] == 0.5);
  CHECK_THROWS_AS(apply_override(cfg, "no_equals_sign"), ConfigError);
  CHECK_THROWS_AS(apply_override(cfg, "=3"), ConfigError);
}

TEST_CASE("hash is stable and sensitive") {
  const Json a = default_config();
  Json b = Json::parse(a.dump());
  CHECK(config_hash(a) == config_hash(b));
  CHECK(config_hash(a).size() == 16);
  apply_override(b, "solver.dt=0.002");
  CHECK(config_hash(a) != config_hash(b));
}

TEST_CASE("missing and malformed keys name the path") {
  Json cfg = default_config();
  cfg["grid"].erase("nx");
  try {
    make_grid(cfg);
    CHECK(false);
  } catch (const ConfigError& e) {
    CHECK(std::string(e.what()).find("grid.nx") != std::string::npos);
  }
  Json bad = default_config();
  bad["inclusion"]["kind"] = "ellipse";
  CHECK_THROWS_AS(make_inclusion(bad["inclusion"]), ConfigError);
  Json neg = default_config();
  neg["model"]["d"] = Json::array({1.0, -0.5});
  CHECK_THROWS_AS(make_params(neg), ConfigError);
  CHECK_THROWS_AS(require(default_config(), "solver.nothing"), ConfigError);
}

TEST_CASE("builders reflect the config") {
  const Json cfg = default_config();
  CHECK(make_corners(cfg).size() == 4);
  CHECK(make_tau_ladder(cfg) == std::vector<double>{20, 40, 80, 160});
  const ModelParams p = make_params(cfg);
  CHECK(p.chemicals == 2);
  CHECK(p.prey == 1);
  const Inclusion inc = make_inclusion(cfg["inclusion"]);
  CHECK(inc.as_circle()->radius == 0.18);
  const PiecewiseReaction r = make_reaction(cfg, inc);
  CHECK(check_admissibility(r).admissible());
}

TEST_CASE("measurement JSON round-trips exactly") {
  Json cfg = default_config();
  cfg["grid"]["nx"] = 16;
  cfg["grid"]["ny"] = 16;
  cfg["model"]["final_time"] = 0.01;
  const ForwardModel fm(cfg);
  const MeasurementSet m = fm.simulate(fm.inclusion());
  const Json j = measurements_to_json(m, config_hash(cfg));
  CHECK(measurements_from_json(Json::parse(j.dump())) == m);
  Json broken = j;
  broken.erase("traces");
  CHECK_THROWS_AS(measurements_from_json(broken), ConfigError);
  CHECK(format_double(0.1) == "0.10000000000000001");
}

TEST_CASE("artifacts carry format version and hash") {
  const fs::path dir = scratch("writer");
  ArtifactWriter w(dir, "00ff");
  w.json("a.json", {{"x", 1}});
  w.csv("sub/b.csv", "p,q", {{"1", "2"}});
  CHECK(w.files().size() == 2);
  const Json a = Json::parse(slurp(dir / "a.json"));
  CHECK(a["format_version"] == kFormatVersion);
  CHECK(a["config_hash"] == "00ff");
  CHECK(slurp(dir / "sub/b.csv") == "# format_version=1 config_hash=00ff\np,q\n1,2\n");
  CHECK(w.files()[1].bytes == fs::file_size(dir / "sub/b.csv"));
  fs::remove_all(dir);
}

TEST_CASE("output directory precedence") {
  Json cfg = default_config();
  cfg["output"]["dir"] = "from_config";
  RunOptions opt;
  ::unsetenv("ANOMALYKIT_OUT");
  CHECK(resolve_output_dir(cfg, opt, "probe") == fs::path("from_config") / "probe");
  ::setenv("ANOMALYKIT_OUT", "from_env", 1);
  CHECK(resolve_output_dir(cfg, opt, "probe") == fs::path("from_env") / "probe");
  opt.out_dir = "explicit";
  CHECK(resolve_output_dir(cfg, opt, "probe") == fs::path("explicit") / "probe");
  ::unsetenv("ANOMALYKIT_OUT");
}

TEST_CASE("forward run lists every file in the manifest") {
  Json cfg = default_config();
  cfg["grid"]["nx"] = 20;
  cfg["grid"]["ny"] = 20;
  RunOptions opt;
  opt.out_dir = scratch("forward");
  const RunManifest m = run_forward(cfg, opt);
  const Json man = Json::parse(slurp(m.dir / "manifest.json"));
  CHECK(man["config_hash"] == config_hash(cfg));
  std::set<std::string> listed;
  for (const auto& f : man["files"]) {
    listed.insert(f["path"].get<std::string>());
    CHECK(fs::file_size(m.dir / f["path"].get<std::string>()) == f["bytes"].get<std::uintmax_t>());
  }
  for (const auto& e : fs::recursive_directory_iterator(m.dir)) {
    if (!e.is_regular_file() || e.path().filename() == "manifest.json") continue;
    CHECK(listed.count(fs::relative(e.path(), m.dir).string()) == 1);
  }
  const MeasurementSet back = load_measurements(m.dir / "measurements.json");
  CHECK(back.chemicals == 2);
  // manifest is the newest file
  const auto man_time = fs::last_write_time(m.dir / "manifest.json");
  for (const auto& name : listed) CHECK(fs::last_write_time(m.dir / name) <= man_time);
  fs::remove_all(opt.out_dir);
}

TEST_CASE("probe run writes per-corner tables") {
  RunOptions opt;
  opt.out_dir = scratch("probe");
  const RunManifest m = run_probe(default_config(), opt);
  CHECK(fs::exists(m.dir / "probe_sector_pi6.csv"));
  CHECK(fs::exists(m.dir / "probe_octant.json"));
  const std::string csv = slurp(m.dir / "probe_sector_pi6.csv");
  CHECK(csv.find("tau,re,im,abs,exponent_so_far") != std::string::npos);
  CHECK(m.warnings.empty());
  fs::remove_all(opt.out_dir);
}
