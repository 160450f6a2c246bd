#include "doctest.h"
#include "geotrack/cli.hpp"
#include "geotrack/io.hpp"

#include <filesystem>
#include <map>
#include <sstream>

using namespace geotrack;
namespace fs = std::filesystem;

namespace {

struct Result {
  int code;
  std::string out;
  std::string err;
};

Result run(std::vector<std::string> args) {
  std::ostringstream out, err;
  const int code = cli::run(args, out, err);
  return {code, out.str(), err.str()};
}

fs::path fresh_dir(const std::string& name) {
  const auto d = fs::temp_directory_path() / "geotrack_cli_tests" / name;
  fs::remove_all(d);
  fs::create_directories(d);
  return d;
}

std::map<std::string, std::string> tree(const fs::path& dir) {
  std::map<std::string, std::string> files;
  for (const auto& e : fs::recursive_directory_iterator(dir)) {
    if (e.is_regular_file()) files[fs::relative(e.path(), dir).string()] = io::read_text(e.path());
  }
  return files;
}

void write(const fs::path& p, const io::json& j) { io::write_atomic(p, io::dump(j)); }

}  // namespace

TEST_CASE("phantom bundle contents") {
  const auto d = fresh_dir("bundle");
  const auto r = run({"phantom", "--shape", "cross", "--angle", "70", "--order", "4", "--out", (d / "a").string()});
  REQUIRE_MESSAGE(r.code == 0, r.err);
  const auto files = tree(d / "a");
  for (const char* name : {"phantom_dt.json", "phantom_t4.json", "phantom.json", "scheme.json", "signals_order4.json",
                           "fitted_t4.json", "track_config.json"}) {
    CHECK_MESSAGE(files.count(name), name);
  }
  CHECK(files.count("fitted_dt.json") == 0);
  CHECK(io::field_order(io::read_json(d / "a" / "fitted_t4.json")) == 4);

  // Order list gives both signal sets.
  write(d / "both.json", {{"shape", "line"}, {"order", {2, 4}}});
  REQUIRE(run({"phantom", "--config", (d / "both.json").string(), "--out", (d / "b").string()}).code == 0);
  CHECK(fs::exists(d / "b" / "signals_order2.json"));
  CHECK(fs::exists(d / "b" / "fitted_t4.json"));
}

TEST_CASE("noiseless fit reproduces the phantom") {
  const auto d = fresh_dir("fit");
  REQUIRE(run({"phantom", "--shape", "sine", "--out", d.string()}).code == 0);
  REQUIRE(run({"fit", "--signals", (d / "signals_order2.json").string(), "--scheme", (d / "scheme.json").string(),
               "--out", (d / "refit").string()})
              .code == 0);
  const auto truth = io::field_from_json(io::read_json(d / "phantom_dt.json"));
  const auto fitted = io::field_from_json(io::read_json(d / "refit" / "fitted_dt.json"));
  double worst = 0.0;
  for (std::size_t i = 0; i < truth.size(); ++i) {
    worst = std::max(worst, (fitted.at(i).matrix() - truth.at(i).matrix()).norm() / truth.at(i).matrix().norm());
  }
  CHECK(worst < 1e-9);
  CHECK(tree(d / "refit").at("fitted_dt.json") == tree(d).at("fitted_dt.json"));
}

TEST_CASE("every command is deterministic") {
  const auto d = fresh_dir("determinism");
  auto twice = [&](std::vector<std::string> args, const std::string& tag) {
    for (const char* run_id : {"1", "2"}) {
      auto a = args;
      a.push_back("--out");
      a.push_back((d / (tag + run_id)).string());
      const auto r = run(a);
      REQUIRE_MESSAGE(r.code == 0, r.err);
    }
    CHECK_MESSAGE(tree(d / (tag + "1")) == tree(d / (tag + "2")), tag);
  };
  twice({"phantom", "--shape", "ushape", "--noise", "0.1", "--seed", "7"}, "phantom");
  twice({"track", "--config", (d / "phantom1" / "track_config.json").string(), "--threads", "3"}, "track");
  twice({"cost-profile"}, "cost");
  twice({"angle-sweep", "--from", "80", "--to", "100", "--noise", "0.02"}, "sweep");
  twice({"plot", "--field", (d / "phantom1" / "fitted_dt.json").string(), "--tracks",
         (d / "track1" / "tracks.json").string()},
        "plot");
  twice({"fit", "--signals", (d / "phantom1" / "signals_order2.json").string(), "--scheme",
         (d / "phantom1" / "scheme.json").string()},
        "fit");

  // Thread count does not change the result.
  REQUIRE(run({"track", "--config", (d / "phantom1" / "track_config.json").string(), "--out", (d / "t1").string()})
              .code == 0);
  CHECK(tree(d / "t1") == tree(d / "track1"));
}

TEST_CASE("config validation happens before any write") {
  const auto d = fresh_dir("validation");
  auto rejected = [&](const io::json& cfg, const std::string& command, const std::string& fragment) {
    write(d / "cfg.json", cfg);
    const auto r = run({command, "--config", (d / "cfg.json").string(), "--out", (d / "out").string()});
    CHECK(r.code == 1);
    CHECK_MESSAGE(r.err.find(fragment) != std::string::npos, r.err);
    CHECK_FALSE(fs::exists(d / "out"));
  };
  rejected({{"shape", "line"}, {"typo", 1}}, "phantom", "unknown phantom key 'typo'");
  rejected({{"shape", "spiral"}}, "phantom", "unknown preset");
  rejected({{"order", 3}}, "phantom", "order must be 2 or 4");
  rejected({{"noise", -0.1}}, "phantom", "noise");
  rejected({{"angles", {{"from", 50}, {"to", 40}}}}, "angle-sweep", "angle range");
  rejected({{"samples", 2}}, "cost-profile", "at least 3 samples");
  rejected({{"endpoints", {{"start", {1.0, 2.0}}}}}, "cost-profile", "unique entries");

  REQUIRE(run({"phantom", "--shape", "line", "--out", (d / "ph").string()}).code == 0);
  io::json cfg = io::read_json(d / "ph" / "track_config.json");
  cfg["field"] = (d / "ph" / "fitted_dt.json").string();
  cfg["phantom"] = (d / "ph" / "phantom.json").string();
  auto moved = cfg;
  moved["seeds"][0]["apex"] = {100.0, 3.0};
  rejected(moved, "track", "seeds outside the field: 0 [100.0,3.0]");
  auto bad_metric = cfg;
  bad_metric["tracking"]["metric"] = "euclid";
  rejected(bad_metric, "track", "");
  auto bad_key = cfg;
  bad_key["tracking"]["stepsize"] = 0.1;
  rejected(bad_key, "track", "unknown tracking key 'stepsize'");

  CHECK(run({"launch"}).code != 0);
  CHECK(run({}).code != 0);
  CHECK(run({"track", "--threads", "0"}).code != 0);
}

TEST_CASE("flags override the config and paths resolve against it") {
  const auto d = fresh_dir("override");
  REQUIRE(run({"phantom", "--shape", "ushape", "--out", (d / "bundle").string()}).code == 0);
  // track_config.json names its inputs relative to its own folder.
  const auto cfg = (d / "bundle" / "track_config.json").string();
  REQUIRE(run({"track", "--config", cfg, "--out", (d / "h").string()}).code == 0);
  REQUIRE(run({"track", "--config", cfg, "--mode", "pure", "--metric", "adjugate", "--out", (d / "p").string()}).code ==
          0);
  const auto h = io::read_json(d / "h" / "summary.json");
  const auto p = io::read_json(d / "p" / "summary.json");
  CHECK(h["mode"] == "hybrid");
  CHECK(h["metric"] == "beta_p2_n2");
  CHECK(h["hit_fraction"].get<double>() == 1.0);
  CHECK(p["mode"] == "pure");
  CHECK(p["metric"] == "adjugate");
  CHECK(p["hit_fraction"].get<double>() < h["hit_fraction"].get<double>());
  CHECK(io::read_json(d / "p" / "tracks.json")["params"]["mode"] == "pure");

  io::json sweep{{"angles", {60, 90}}, {"noise", 0.0}};
  write(d / "sweep.json", sweep);
  REQUIRE(run({"angle-sweep", "--config", (d / "sweep.json").string(), "--out", (d / "s").string()}).code == 0);
  const auto csv = io::read_text(d / "s" / "angle_sweep.csv");
  CHECK(csv.rfind("theta_deg,err_layer1_deg,err_layer2_deg\n60,", 0) == 0);
  CHECK(csv.find("\n90,0,0\n") != std::string::npos);
}

TEST_CASE("plot refuses tracks from another grid") {
  const auto d = fresh_dir("plot");
  REQUIRE(run({"phantom", "--shape", "line", "--out", (d / "a").string()}).code == 0);
  REQUIRE(run({"phantom", "--shape", "sine", "--out", (d / "b").string()}).code == 0);
  REQUIRE(run({"track", "--config", (d / "a" / "track_config.json").string(), "--out", (d / "ta").string()}).code == 0);
  const auto ok = run({"plot", "--field", (d / "a" / "fitted_dt.json").string(), "--tracks",
                       (d / "ta" / "tracks.json").string(), "--out", (d / "pa").string()});
  CHECK(ok.code == 0);
  const auto bad = run({"plot", "--field", (d / "b" / "fitted_dt.json").string(), "--tracks",
                        (d / "ta" / "tracks.json").string(), "--out", (d / "pb").string()});
  CHECK(bad.code == 1);
  CHECK(bad.err.find("different grid") != std::string::npos);
  CHECK_FALSE(fs::exists(d / "pb"));
}

TEST_CASE("cost profile outputs") {
  const auto d = fresh_dir("cost");
  REQUIRE(run({"cost-profile", "--samples", "31", "--out", d.string()}).code == 0);
  const auto csv = io::read_text(d / "cost_profile.csv");
  CHECK(csv.rfind("t,ha,fa,cost_inverse,cost_adjugate,cost_beta_p2_n2\n", 0) == 0);
  CHECK(std::count(csv.begin(), csv.end(), '\n') == 32);
  const auto gaps = io::read_text(d / "gap_cases.csv");
  CHECK(gaps.rfind("case,lambda,cost_inverse,cost_adjugate,cost_beta_p2_n2\n1,0.0003,", 0) == 0);
  CHECK(fs::exists(d / "cost_profile.svg"));
}
