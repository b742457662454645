#include <doctest.h>

#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <string>

#include "support/dataset.hpp"

// FEC_CLI_PATH is injected by the build as the absolute path of the binary.

namespace fs = std::filesystem;

namespace {

fs::path test_root() {
  const fs::path dir = fs::temp_directory_path() / "fec_cli_tests";
  fs::create_directories(dir);
  return dir;
}

int run_cli(const std::string& args) {
  const std::string cmd =
      std::string(FEC_CLI_PATH) + " " + args + " >/dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  REQUIRE(WIFEXITED(status));
  return WEXITSTATUS(status);
}

}  // namespace

TEST_CASE("cli usage errors exit 2") {
  CHECK(run_cli("") == 2);
  CHECK(run_cli("warp") == 2);
  CHECK(run_cli("bench --set run.bogus=1") == 2);
  CHECK(run_cli("bench --set target.kind=gaussian") == 2);  // no dim, no span
  CHECK(run_cli("sample --config /definitely/not/here.cfg") == 2);
}

TEST_CASE("cli help exits 0") {
  CHECK(run_cli("--help") == 0);
  CHECK(run_cli("bench --help") == 0);
}

TEST_CASE("cli runtime failures exit 3") {
  const fs::path out = test_root() / "missing_dataset";
  CHECK(run_cli("sample --set target.kind=logistic"
                " --set target.dataset=/no/such/table.csv"
                " --set run.time=1 --out " +
                (out.string())) == 3);
}

TEST_CASE("cli runs a config file end to end") {
  const fs::path dir = test_root();
  const fs::path cfg = dir / "tiny.cfg";
  const fs::path out = dir / "bench_out";
  fs::remove_all(out);
  {
    std::ofstream f(cfg);
    f << "# tiny smoke configuration\n"
         "target.kind = gaussian\n"
         "target.dim = 2\n"
         "sampler.preset = forward-all-ref\n"
         "run.delta = 0.5\n"
         "run.samples = 60\n"
         "run.seed = 3\n";
  }
  CHECK(run_cli("bench --config " + cfg.string() + " --out " + out.string()) == 0);
  CHECK(fs::exists(out / "summary.csv"));
  CHECK(fs::exists(out / "replicas.csv"));

  // Flag overrides beat the file.
  const fs::path out2 = dir / "bench_out2";
  fs::remove_all(out2);
  CHECK(run_cli("bench --config " + cfg.string() + " --replicas 2 --out " +
                out2.string()) == 0);
  std::ifstream in(out2 / "replicas.csv");
  std::string line;
  int data_rows = 0;
  while (std::getline(in, line)) {
    if (!line.empty() && line[0] != '#') ++data_rows;
  }
  CHECK(data_rows == 1 + 2 * 3);  // header + 2 replicas x 3 observables
}
