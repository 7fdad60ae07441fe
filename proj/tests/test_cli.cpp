#include <sys/wait.h>

#include <algorithm>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include "doctest.h"

namespace fs = std::filesystem;

namespace {

const fs::path kRoot = fs::temp_directory_path() / "iol_cli_test";

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

struct Result {
  int code;
  std::string err;
};

Result iolnet(const std::string& args) {
  fs::create_directories(kRoot);
  const fs::path err = kRoot / "stderr.txt";
  const std::string cmd = std::string(IOLNET_PATH) + " " + args + " > " + (kRoot / "stdout.txt").string() + " 2> " + err.string();
  const int status = std::system(cmd.c_str());
  return {WIFEXITED(status) ? WEXITSTATUS(status) : -1, slurp(err)};
}

std::string out_dir(const std::string& name) {
  const fs::path p = kRoot / name;
  fs::remove_all(p);
  return p.string();
}

}  // namespace

TEST_CASE("simulate is deterministic and writes a manifest") {
  const std::string a = out_dir("sim_a"), b = out_dir("sim_b");
  REQUIRE(iolnet("simulate --seed 7 -n 1000 --out " + a).code == 0);
  REQUIRE(iolnet("simulate --seed 7 -n 1000 --out " + b).code == 0);
  const std::string ca = slurp(fs::path(a) / "cohort.csv");
  CHECK(ca.size() > 1000);
  CHECK(ca == slurp(fs::path(b) / "cohort.csv"));
  const std::string manifest = slurp(fs::path(a) / "manifest.txt");
  CHECK(manifest.find("config_hash") != std::string::npos);
  CHECK(manifest.find("cohort.csv") != std::string::npos);
  CHECK(fs::exists(fs::path(a) / "config.ini"));

  // The written configuration reproduces the run.
  const std::string c = out_dir("sim_c");
  REQUIRE(iolnet("simulate -n 1000 --config " + (fs::path(a) / "config.ini").string() + " --out " + c).code == 0);
  CHECK(slurp(fs::path(c) / "cohort.csv") == ca);
}

TEST_CASE("configuration errors exit with 2") {
  const Result bad_key = iolnet("simulate -n 5 --set training.nope=1 --out " + out_dir("bad"));
  CHECK(bad_key.code == 2);
  CHECK(bad_key.err.rfind("error category=config", 0) == 0);
  CHECK(std::count(bad_key.err.begin(), bad_key.err.end(), '\n') == 1);

  const fs::path cfg = kRoot / "bad.ini";
  std::ofstream(cfg) << "[training]\nepochs = -\n";
  CHECK(iolnet("simulate -n 5 --config " + cfg.string() + " --out " + out_dir("bad2")).code == 2);
  CHECK(iolnet("no_such_command").code == 2);
}

TEST_CASE("solve lists non-bracketing cases and exits with 3") {
  const fs::path cohort = kRoot / "cohort.csv";
  fs::create_directories(kRoot);
  std::ofstream(cohort) << "id,al_mm,cct_mm,acd_iol_mm,k_max_mm,k_min_mm,ref_target_d\n"
                        << "good,23.6,0.55,4.5,7.7,7.7,0\n"
                        << "short,10.5,0.55,4.5,7.7,7.7,0\n";
  const std::string out = out_dir("solve");
  const Result r = iolnet("solve --cohort " + cohort.string() + " --out " + out);
  CHECK(r.code == 3);
  CHECK(r.err.rfind("error category=no_solution", 0) == 0);
  const std::string errors = slurp(fs::path(out) / "solve_errors.csv");
  CHECK(errors.find("short") != std::string::npos);
  CHECK(errors.find("good") == std::string::npos);
  CHECK(slurp(fs::path(out) / "solutions.csv").find("good,") != std::string::npos);
}

TEST_CASE("damaged inputs exit with 3") {
  const fs::path cohort = kRoot / "broken.csv";
  fs::create_directories(kRoot);
  std::ofstream(cohort) << "id,al_mm,cct_mm,acd_iol_mm,k_max_mm,k_min_mm,ref_target_d\nx,-1,0.55,4.5,7.7,7.7,0\n";
  const Result r = iolnet("solve --cohort " + cohort.string() + " --out " + out_dir("broken"));
  CHECK(r.code == 3);
  CHECK(r.err.rfind("error category=parse", 0) == 0);

  const fs::path weights = kRoot / "weights.txt";
  std::ofstream(weights) << "# iolnet weights\nformat_version = 1\n";
  const Result w = iolnet("evaluate --weights " + weights.string() + " --out " + out_dir("w"));
  CHECK(w.code == 3);
  CHECK(w.err.rfind("error category=corrupt_file", 0) == 0);
}
