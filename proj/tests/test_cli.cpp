#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <string>

#include "doctest.h"
#include "rigidity/io.hpp"

namespace fs = std::filesystem;

namespace {

const fs::path kTmp = RIGIDITY_TEST_TMP;

int run(const std::string& args) {
  const std::string cmd = std::string(RIGIDITY_CLI_PATH) + " " + args + " > /dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

fs::path write_config(const std::string& name, const std::string& body) {
  fs::create_directories(kTmp);
  const fs::path p = kTmp / name;
  std::ofstream(p) << body;
  return p;
}

rigidity::Json read_json(const fs::path& p) {
  std::ifstream in(p);
  return rigidity::Json::parse(in);
}

}  // namespace

TEST_CASE("cli verbs produce their outputs") {
  const fs::path out = kTmp / "cli_out";
  fs::remove_all(out);
  const auto cfg = write_config("small.json", R"({"domain": "rectangle", "nx": 12, "ny": 12, "a": 2,
      "eps": 0.12, "eps_grid": [0.5, 10.0], "n_starts": 6, "green_samples": 2})");
  const std::string common = "--config " + cfg.string() + " --out " + out.string();

  REQUIRE(run("constants " + common) == 0);
  const auto constants = read_json(out / "constants.json");
  CHECK(constants.contains("constants"));
  CHECK(constants.contains("green"));

  REQUIRE(run("eigen " + common) == 0);
  CHECK(fs::exists(out / "eigen.json"));
  CHECK(fs::exists(out / "mesh.txt"));

  REQUIRE(run("solve " + common + " --start eig:0.3") == 0);
  CHECK(fs::exists(out / "solution.field"));
  const auto sol = read_json(out / "solution.json");
  CHECK(sol.at("classification").get<std::string>() == "nonconstant");

  REQUIRE(run("check " + common + " --field " + (out / "solution.field").string()) == 0);
  CHECK(read_json(out / "check.json").contains("all_pass"));

  REQUIRE(run("sweep " + common + " --seed 3 --threads 2") == 0);
  CHECK(fs::exists(out / "sweep.csv"));
  CHECK(fs::exists(out / "starts.csv"));

  REQUIRE(run("bifurcate " + common) == 0);
  const auto bif = read_json(out / "bifurcation.json");
  CHECK(bif.at("relative_gap").get<double>() < 1e-6);
  CHECK(fs::exists(out / "branch.csv"));
}

TEST_CASE("cli exit codes") {
  const auto good = write_config("good.json", R"({"domain": "rectangle", "nx": 6, "ny": 6, "a": 2, "eps": 0.5})");
  const auto bad = write_config("bad.json", R"({"domain": "rectangle", "nx": 6, "ny": 6, "a": 0.5})");
  const auto bracket = write_config("bracket.json",
                                    R"({"domain": "rectangle", "nx": 6, "ny": 6, "a": 2, "eps_lo": 0.5, "eps_hi": 0.6})");
  const std::string out = " --out " + (kTmp / "codes").string();
  CHECK(run("") != 0);
  CHECK(run("solve" + out) == 2);
  CHECK(run("solve --config " + bad.string() + out) == 2);
  CHECK(run("solve --config " + (kTmp / "missing.json").string() + out) == 4);
  CHECK(run("bifurcate --config " + bracket.string() + out) == 3);
  CHECK(run("check --config " + good.string() + " --field " + (kTmp / "missing.field").string() + out) == 4);
  CHECK(run("solve --config " + good.string() + " --start bogus:1" + out) == 2);
}
