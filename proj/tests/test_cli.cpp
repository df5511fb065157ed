#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include "doctest.h"

namespace fs = std::filesystem;

namespace {

struct Result {
  int code;
  std::string output;
};

Result sh(const std::string& cmd) {
  const fs::path log = fs::temp_directory_path() / "sausage_cli_test.log";
  const int status = std::system((cmd + " > " + log.string() + " 2>&1").c_str());
  std::ifstream in(log);
  std::stringstream s;
  s << in.rdbuf();
  return {WIFEXITED(status) ? WEXITSTATUS(status) : -1, s.str()};
}

std::string lab() { return SAUSAGE_LAB_BIN; }

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream s;
  s << in.rdbuf();
  return s.str();
}

fs::path fresh_dir(const std::string& name) {
  const fs::path d = fs::temp_directory_path() / ("sausage_cli_" + name);
  fs::remove_all(d);
  fs::create_directories(d);
  return d;
}

void write(const fs::path& p, const std::string& text) { std::ofstream(p) << text; }

const char* kCapacity =
    "experiment = capacity\nshape = ball\nball_radius_meters = 1\nbase_seed = 5\nreplicas = 100\n"
    "n_trials = 200\nhorizon_seconds = 10000\n";

}  // namespace

TEST_CASE("run writes samples, reports and manifest") {
  const fs::path d = fresh_dir("run");
  write(d / "cap.cfg", "experiment = capacity\nreplicas = 1\nn_trials = 2000\noutput_dir = out\n");
  const Result r = sh(lab() + " run " + (d / "cap.cfg").string());
  CHECK(r.code == 0);
  CHECK(fs::exists(d / "out" / "samples.csv"));
  CHECK(fs::exists(d / "out" / "manifest.json"));
  const std::string reports = slurp(d / "out" / "reports.json");
  CHECK(reports.find("capacity_closed_form") != std::string::npos);
  CHECK(reports.find("6.28318") != std::string::npos);
  const std::string manifest = slurp(d / "out" / "manifest.json");
  CHECK(manifest.find("\"config_hash\"") != std::string::npos);
  CHECK(manifest.find("\"status\": \"complete\"") != std::string::npos);
}

TEST_CASE("invalid configs exit 2 with a line number") {
  const fs::path d = fresh_dir("invalid");
  write(d / "bad.cfg", "experiment = mean_expansion\nreplicas = 2\nt_grid_seconds = 40, 20, 10\n");
  const Result r = sh(lab() + " run " + (d / "bad.cfg").string());
  CHECK(r.code == 2);
  CHECK(r.output.find("bad.cfg:3:") != std::string::npos);
  CHECK(sh(lab() + " run " + (d / "missing.cfg").string()).code == 2);
  CHECK(sh(lab() + " frobnicate").code == 2);
}

TEST_CASE("reruns, thread counts and interrupted runs give identical samples") {
  const fs::path d = fresh_dir("resume");
  write(d / "a.cfg", std::string(kCapacity) + "output_dir = a\n");
  write(d / "b.cfg", std::string(kCapacity) + "output_dir = b\n");
  REQUIRE(sh("SAUSAGE_LAB_THREADS=1 " + lab() + " run " + (d / "a.cfg").string()).code == 0);
  const std::string reference = slurp(d / "a" / "samples.csv");
  REQUIRE_FALSE(reference.empty());

  REQUIRE(sh("SAUSAGE_LAB_THREADS=4 " + lab() + " run " + (d / "a.cfg").string()).code == 0);
  CHECK(slurp(d / "a" / "samples.csv") == reference);

  const Result part = sh(lab() + " run --stop-after 50 " + (d / "b.cfg").string());
  CHECK(part.code == 0);
  CHECK_FALSE(fs::exists(d / "b" / "samples.csv"));
  CHECK(slurp(d / "b" / "manifest.json").find("\"status\": \"partial\"") != std::string::npos);
  const Result rest = sh(lab() + " resume --threads 3 " + (d / "b" / "manifest.json").string());
  CHECK(rest.code == 0);
  CHECK(slurp(d / "b" / "samples.csv") == reference);

  const Result again = sh(lab() + " resume " + (d / "b" / "manifest.json").string());
  CHECK(again.code == 0);
  CHECK(again.output.find("nothing to do") != std::string::npos);

  const std::string reports = slurp(d / "b" / "reports.json");
  CHECK(sh(lab() + " report " + (d / "b" / "samples.csv").string()).code == 0);
  CHECK(slurp(d / "b" / "reports.json") == reports);

  write(d / "b.cfg", std::string(kCapacity) + "output_dir = b\nmin_step_seconds = 0.001\n");
  CHECK(sh(lab() + " resume " + (d / "b" / "manifest.json").string()).code == 2);
}

TEST_CASE("failed verdicts exit 1") {
  const fs::path d = fresh_dir("fail");
  // At small t the volume grows much faster than C t, so the slope check fails.
  write(d / "short.cfg",
        "experiment = mean_expansion\nreplicas = 4\nt_grid_seconds = 1, 2, 3\nn_samples_volume = 2000\n");
  CHECK(sh(lab() + " run " + (d / "short.cfg").string()).code == 1);
}
