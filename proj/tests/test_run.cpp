#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include <json.hpp>

#include "orbipart/run.hpp"

using namespace orbipart;
using json = nlohmann::ordered_json;
namespace fs = std::filesystem;

namespace {
std::string slurp(const fs::path& p) {
  std::ifstream is(p);
  std::stringstream ss;
  ss << is.rdbuf();
  return ss.str();
}

std::string without_timing(const std::string& report) {
  json j = json::parse(report);
  j.erase("timing");
  return j.dump(2);
}
}  // namespace

TEST_CASE("config parsing: flags, schedule, defaults") {
  RunConfig c = parse_config({"--m", "2", "--n", "2", "--M", "3", "--mode", "partition"});
  CHECK(c.m == 2);
  CHECK(c.M == 3);
  CHECK(c.mode == RunMode::Partition);
  CHECK(c.K == 512);

  RunConfig s = parse_config({"--lambda", "-1,-10,-100"});
  REQUIRE(s.lambda_schedule.size() == 3);
  CHECK(s.lambda_schedule[1] == -10.0);

  CHECK_THROWS_AS(parse_config({"--m", "1", "--n", "4"}), std::invalid_argument);
  CHECK_THROWS_AS(parse_config({"--lambda", "-10,-1"}), std::invalid_argument);
  CHECK_THROWS_AS(parse_config({"--M", "1", "--mode", "system"}), std::invalid_argument);
  CHECK_THROWS_AS(parse_config({"--bogus"}), std::invalid_argument);

  // every violation is listed
  try {
    parse_config({"--m", "1", "--n", "0", "--K", "8"});
    CHECK(false);
  } catch (const std::invalid_argument& e) {
    std::string msg = e.what();
    CHECK(msg.find("m >= 2") != std::string::npos);
    CHECK(msg.find("n >= 2") != std::string::npos);
    CHECK(msg.find("K >= 32") != std::string::npos);
  }
}

TEST_CASE("config file with flag overrides and PARTITION_OUT") {
  fs::path dir = fs::temp_directory_path() / "orbipart_cfg_test";
  fs::create_directories(dir);
  fs::path cfgfile = dir / "c.json";
  {
    std::ofstream os(cfgfile);
    os << R"({"m": 2, "n": 3, "K": 64, "mode": "scalar", "out": "fromfile"})";
  }
  RunConfig c = parse_config({"--config", cfgfile.string(), "--K", "96"});
  CHECK(c.n == 3);
  CHECK(c.K == 96);  // flag wins
  CHECK(c.mode == RunMode::Scalar);
  CHECK(c.output_dir == "fromfile");

  setenv("PARTITION_OUT", "/tmp/envdir", 1);
  RunConfig e = parse_config({"--out", "flagdir"});
  CHECK(e.output_dir == "/tmp/envdir");
  unsetenv("PARTITION_OUT");
}

TEST_CASE("scalar run writes report and profile, deterministic reruns") {
  fs::path dir1 = fs::temp_directory_path() / "orbipart_run1";
  fs::path dir2 = fs::temp_directory_path() / "orbipart_run2";
  fs::remove_all(dir1);
  fs::remove_all(dir2);
  RunConfig c = parse_config({"--mode", "scalar", "--K", "64", "--out", dir1.string()});
  RunReport r1 = run(c);
  CHECK(r1.all_verifications_pass);
  CHECK(fs::exists(dir1 / "report.json"));
  CHECK(fs::exists(dir1 / "scalar_profile.csv"));
  CHECK(fs::exists(dir1 / "plotdata.csv"));

  json j = json::parse(r1.report_json);
  CHECK(j["schema_version"] == 1);
  CHECK(j.contains("config"));
  CHECK(j.contains("grid"));
  CHECK(j.contains("scalar"));
  CHECK(j.contains("timing"));
  CHECK(j["config"]["N"] == 3);

  c.output_dir = dir2.string();
  RunReport r2 = run(c);
  CHECK(without_timing(slurp(dir1 / "report.json")) ==
        without_timing(slurp(dir2 / "report.json")));
}

TEST_CASE("verify-all smoke run at desk scale") {
  fs::path dir = fs::temp_directory_path() / "orbipart_verify";
  fs::remove_all(dir);
  RunConfig c = parse_config({"--mode", "verify-all", "--K", "96", "--M", "2",
                              "--lambda", "-1,-10", "--out", dir.string()});
  RunReport r = run(c);
  json j = json::parse(r.report_json);
  REQUIRE(j.contains("verification"));
  CHECK(j["verification"]["all_pass"] == true);
  CHECK(r.all_verifications_pass);
  CHECK(j.contains("partition"));
  CHECK(j.contains("stages"));
  CHECK(j.contains("nodal"));
  CHECK(j["partition"]["boundary_radii"].size() == 1);
  // plot data carries one column per component plus t and the signed sum
  std::ifstream is(dir / "plotdata.csv");
  std::string header;
  std::getline(is, header);
  CHECK(header == "t,w_1,w_2,signed");
}
