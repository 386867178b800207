#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <string>

#include "damplqr/json_io.hpp"
#include "test_fixtures.hpp"

using namespace damplqr;
namespace fx = damplqr::testing;
namespace fs = std::filesystem;

namespace {

const char* cli_path() { return DAMPLQR_CLI_PATH; }

struct WorkDir {
  fs::path dir;
  WorkDir() {
    dir = fs::temp_directory_path() / "damplqr_cli_test";
    fs::remove_all(dir);
    fs::create_directories(dir);
  }
  ~WorkDir() { fs::remove_all(dir); }
  std::string path(const char* name) const { return (dir / name).string(); }
};

int run_cli(const std::string& args) {
  const std::string cmd = std::string(cli_path()) + " " + args + " > /dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  return WEXITSTATUS(status);
}

void write_bench_system(const std::string& path) {
  Json j;
  j["schema_version"] = 1;
  j["A"] = matrix_to_json(fx::bench_system().A);
  j["B"] = matrix_to_json(fx::bench_system().B);
  j["Q"] = matrix_to_json(6.0 * Matrix::Identity(2, 2));
  j["R"] = matrix_to_json(Matrix::Identity(1, 1));
  save_json(j, path);
}

std::string slurp(const std::string& path) {
  std::ifstream in(path);
  return std::string((std::istreambuf_iterator<char>(in)),
                     std::istreambuf_iterator<char>());
}

}  // namespace

TEST_CASE("command-line pipeline") {
  WorkDir work;
  const std::string sys_path = work.path("system.json");
  write_bench_system(sys_path);

  SUBCASE("collect then run emits deterministic artifacts") {
    const std::string pool = work.path("pool.json");
    REQUIRE(run_cli("collect --system " + sys_path +
                    " --samples 40 --noise uniform:-1:1 --reset-every 10 "
                    "--seed 7 --out " + pool) == 0);
    const RankCheck rc = rank_condition_pi(load_pool(pool));
    CHECK(rc.ok);
    CHECK(rc.margin > 0.0);

    // Same seed, same bytes.
    const std::string pool2 = work.path("pool2.json");
    REQUIRE(run_cli("collect --system " + sys_path +
                    " --samples 40 --noise uniform:-1:1 --reset-every 10 "
                    "--seed 7 --out " + pool2) == 0);
    CHECK(slurp(pool) == slurp(pool2));

    const std::string report = work.path("report.json");
    const std::string trace = work.path("trace.csv");
    REQUIRE(run_cli("run pi --pool " + pool + " --weights " + sys_path +
                    " --beta-init 0.1 --out " + report + " --trace " + trace) ==
            0);
    const Json j = load_json(report);
    CHECK(j["phase2_steps"].get<int>() == 12);
    CHECK(j["diagnostics"].get<bool>() == false);

    // Identical invocation reproduces the report byte for byte.
    const std::string report2 = work.path("report2.json");
    REQUIRE(run_cli("run pi --pool " + pool + " --weights " + sys_path +
                    " --beta-init 0.1 --out " + report2) == 0);
    CHECK(slurp(report) == slurp(report2));

    // Diagnostics appear only when the model is passed explicitly.
    const std::string report3 = work.path("report3.json");
    REQUIRE(run_cli("run pi --pool " + pool + " --weights " + sys_path +
                    " --beta-init 0.1 --system " + sys_path + " --out " +
                    report3) == 0);
    const Json j3 = load_json(report3);
    CHECK(j3["diagnostics"].get<bool>() == true);
    bool saw_rho = false;
    for (const auto& row : j3["trace"])
      if (row.contains("spectral_radius")) saw_rho = true;
    CHECK(saw_rho);
  }

  SUBCASE("undersized pools exit with the rank code") {
    const std::string pool = work.path("thin.json");
    REQUIRE(run_cli("collect --system " + sys_path +
                    " --samples 5 --seed 7 --out " + pool) == 0);
    CHECK(run_cli("run pi --pool " + pool + " --weights " + sys_path) == 2);
    CHECK(run_cli("run qlearn --pool " + pool + " --weights " + sys_path) == 2);
  }

  SUBCASE("config problems exit with the config code") {
    CHECK(run_cli("run pi --pool /missing.json --weights " + sys_path) == 4);
    CHECK(run_cli("oracle --system /missing.json") == 4);
    CHECK(run_cli("bogus-subcommand") == 4);

    const std::string pool = work.path("pool.json");
    REQUIRE(run_cli("collect --system " + sys_path + " --samples 40 --seed 7"
                    " --out " + pool) == 0);
    CHECK(run_cli("run pi --pool " + pool + " --weights " + sys_path +
                  " --frac-a 2.0") == 4);
  }

  SUBCASE("oracle matches the library solution") {
    const std::string out = work.path("oracle.json");
    REQUIRE(run_cli("oracle --system " + sys_path + " --out " + out) == 0);
    const Json j = load_json(out);
    CHECK((matrix_from_json(j["P"]) - fx::bench_p_star()).cwiseAbs().maxCoeff() <
          5e-5);
    CHECK((matrix_from_json(j["K"]) - fx::bench_k_star()).cwiseAbs().maxCoeff() <
          5e-5);
    CHECK((matrix_from_json(j["H"]) - fx::bench_h_star()).cwiseAbs().maxCoeff() <
          5e-5);
  }

  SUBCASE("compare reports agreement on a shared pool") {
    const std::string pool = work.path("pool.json");
    REQUIRE(run_cli("collect --system " + sys_path +
                    " --samples 40 --seed 7 --out " + pool) == 0);
    const std::string out = work.path("compare.json");
    REQUIRE(run_cli("compare --pool " + pool + " --weights " + sys_path +
                    " --beta-init 0.1 --system " + sys_path + " --out " + out) ==
            0);
    const Json j = load_json(out);
    CHECK(j["comparable"].get<bool>());
    CHECK(j["phase2_max_gain_deviation"].get<double>() <= 1e-8);
    CHECK(j["spectral_radius_pi"].get<double>() < 1.0);

    const std::string out2 = work.path("compare2.json");
    REQUIRE(run_cli("compare --pool " + pool + " --weights " + sys_path +
                    " --beta-init 0.1 --frac-a-pi 0.3 --frac-a-qlearn 0.6 "
                    "--out " + out2) == 0);
    CHECK_FALSE(load_json(out2)["comparable"].get<bool>());
  }

  SUBCASE("sweep writes one row per combination") {
    Json cfg;
    cfg["schema_version"] = 1;
    cfg["system"] = sys_path;
    cfg["samples"] = 40;
    cfg["seed"] = 7;
    cfg["weights"] = sys_path;
    cfg["algo"] = "pi";
    cfg["beta_init"] = Json::array({0.1, 0.9});
    cfg["frac_a"] = Json::array({0.2, 0.8});
    cfg["diagnostics"] = true;
    const std::string out_csv = work.path("sweep.csv");
    cfg["out_csv"] = out_csv;
    const std::string cfg_path = work.path("sweep.json");
    save_json(cfg, cfg_path);

    REQUIRE(run_cli("sweep --config " + cfg_path + " --jobs 2") == 0);
    const std::string text = slurp(out_csv);
    int lines = 0;
    for (char ch : text)
      if (ch == '\n') ++lines;
    CHECK(lines == 5);  // header + 4 combos

    // Schema violations exit with the config code.
    Json bad = cfg;
    bad.erase("schema_version");
    const std::string bad_path = work.path("bad.json");
    save_json(bad, bad_path);
    CHECK(run_cli("sweep --config " + bad_path) == 4);
  }
}
