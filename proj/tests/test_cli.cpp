#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>
#include <string>

#include "doctest.h"

#ifndef CLI_BINARY_PATH
#error "CLI_BINARY_PATH must be defined by the build"
#endif

namespace {

int run_cli(const std::string& args) {
  std::string cmd = std::string(CLI_BINARY_PATH) + " " + args +
                    " > cli_stdout.txt 2> cli_stderr.txt";
  int status = std::system(cmd.c_str());
#ifdef _WIN32
  return status;
#else
  return WEXITSTATUS(status);
#endif
}

std::string slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

bool exists(const std::string& path) {
  return std::ifstream(path).good();
}

}  // namespace

TEST_CASE("list-problems prints the registry") {
  REQUIRE(run_cli("list-problems") == 0);
  std::string out = slurp("cli_stdout.txt");
  for (const char* name : {"goldstein-price", "rastrigin", "rosenbrock",
                           "toy-hydrology", "rosen-suzuki", "colville"}) {
    CHECK(out.find(name) != std::string::npos);
  }
}

TEST_CASE("bad invocations exit with the usage status") {
  CHECK(run_cli("run --problem no-such-problem --budget 5 --no-oracle") == 2);
  CHECK(run_cli("run") == 2);                  // missing required --problem
  CHECK(run_cli("no-such-subcommand") == 2);
  CHECK(run_cli("run --problem rastrigin --budget 1 --no-oracle") ==
        2);  // budget below the initial design
}

TEST_CASE("run writes a record and reruns byte-identically") {
  std::remove("cli_rec_a.json");
  std::remove("cli_rec_b.json");
  REQUIRE(run_cli("run --problem rastrigin --variant random --budget 6 "
                  "--seed 4 --no-oracle --out cli_rec_a.json") == 0);
  REQUIRE(exists("cli_rec_a.json"));
  REQUIRE(exists("cli_rec_a.json.timings.json"));
  REQUIRE(run_cli("run --problem rastrigin --variant random --budget 6 "
                  "--seed 4 --no-oracle --out cli_rec_b.json") == 0);
  // core records are byte-identical across reruns; timings may differ
  CHECK(slurp("cli_rec_a.json") == slurp("cli_rec_b.json"));

  for (const char* f : {"cli_rec_a.json", "cli_rec_b.json",
                        "cli_rec_a.json.timings.json",
                        "cli_rec_b.json.timings.json"}) {
    std::remove(f);
  }
}

TEST_CASE("config file supplies defaults and flags override them") {
  {
    std::ofstream cfg("cli_cfg.json");
    cfg << "{\"budget\": 6, \"variant\": \"random\", \"seed\": 4}\n";
  }
  REQUIRE(run_cli("run --problem rastrigin --config cli_cfg.json "
                  "--no-oracle --out cli_cfg_rec.json") == 0);
  REQUIRE(run_cli("run --problem rastrigin --variant random --budget 6 "
                  "--seed 4 --no-oracle --out cli_rec_direct.json") == 0);
  CHECK(slurp("cli_cfg_rec.json") == slurp("cli_rec_direct.json"));

  // an explicit flag wins over the config value
  REQUIRE(run_cli("run --problem rastrigin --config cli_cfg.json --seed 9 "
                  "--no-oracle --out cli_cfg_rec2.json") == 0);
  CHECK(slurp("cli_cfg_rec2.json") != slurp("cli_cfg_rec.json"));

  for (const char* f :
       {"cli_cfg.json", "cli_cfg_rec.json", "cli_cfg_rec.json.timings.json",
        "cli_rec_direct.json", "cli_rec_direct.json.timings.json",
        "cli_cfg_rec2.json", "cli_cfg_rec2.json.timings.json"}) {
    std::remove(f);
  }
}

TEST_CASE("replicate, aggregate, and plot chain end to end") {
  REQUIRE(run_cli("replicate --problem rastrigin --variant random --budget 5 "
                  "--replicates 3 --base-seed 1 --jobs 1 --no-oracle "
                  "--out-dir cli_reps") == 0);
  std::string r1 = "cli_reps/rec_rastrigin_random_1.json";
  std::string r2 = "cli_reps/rec_rastrigin_random_2.json";
  std::string r3 = "cli_reps/rec_rastrigin_random_3.json";
  REQUIRE(exists(r1));
  REQUIRE(exists(r2));
  REQUIRE(exists(r3));

  REQUIRE(run_cli("aggregate " + r1 + " " + r2 + " " + r3 +
                  " --out cli_agg.csv") == 0);
  std::string csv = slurp("cli_agg.csv");
  CHECK(csv.find("problem,variant,iteration") != std::string::npos);
  CHECK(csv.find("rastrigin,random") != std::string::npos);

  REQUIRE(run_cli("plot cli_agg.csv --out cli_plot.svg") == 0);
  std::string svg = slurp("cli_plot.svg");
  CHECK(svg.rfind("<svg", 0) == 0);

  REQUIRE(run_cli("timing " + r1) == 0);
  std::string timing_out = slurp("cli_stdout.txt");
  CHECK(timing_out.find("t_eval") != std::string::npos);

  for (const std::string& f :
       {r1, r2, r3, r1 + ".timings.json", r2 + ".timings.json",
        r3 + ".timings.json", std::string("cli_agg.csv"),
        std::string("cli_plot.svg")}) {
    std::remove(f.c_str());
  }
}
