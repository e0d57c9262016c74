#include <doctest.h>

#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>
#include <string>

#ifndef RDSURV_BIN
#define RDSURV_BIN "rdsurv"
#endif

namespace {

struct RunResult {
  int exit_code;
  std::string output;  // stdout only
};

RunResult run(const std::string& args) {
  const std::string out_path = "cli_test_stdout.tmp";
  const std::string cmd =
      std::string(RDSURV_BIN) + " " + args + " > " + out_path + " 2> cli_test_stderr.tmp";
  const int status = std::system(cmd.c_str());
  std::ifstream in(out_path);
  std::stringstream ss;
  ss << in.rdbuf();
  int code = -1;
  if (status != -1) code = WEXITSTATUS(status);
  return {code, ss.str()};
}

std::string slurp(const std::string& path) {
  std::ifstream in(path);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file(const std::string& path, const std::string& text) {
  std::ofstream out(path);
  out << text;
}

}  // namespace

TEST_CASE("help exits zero") {
  CHECK(run("--help").exit_code == 0);
  CHECK(run("estimate --help").exit_code == 0);
}

TEST_CASE("unknown flags are rejected") {
  CHECK(run("kernel-constants --kernel uniform --p 1 --bogus 3").exit_code != 0);
}

TEST_CASE("missing required flag names the flag and exits 1") {
  const std::string cmd = std::string(RDSURV_BIN) +
                          " estimate --cutoff 0 --horizon 1 --h 0.5 --grid 1.0 "
                          "> cli_miss_out.tmp 2> cli_miss_err.tmp";
  const int status = std::system(cmd.c_str());
  CHECK(WEXITSTATUS(status) != 0);
  const std::string err = slurp("cli_miss_err.tmp");
  CHECK(err.find("--input") != std::string::npos);
}

TEST_CASE("validation and numeric exit codes") {
  write_file("cli_bad.csv", "time,event,forcing\n-1,1,0.2\n");
  const std::string cmd = std::string(RDSURV_BIN) +
                          " estimate --input cli_bad.csv --cutoff 0 --horizon 1 --h 0.5 "
                          "--grid 0.5 > /dev/null 2> cli_bad_err.tmp";
  const int status = std::system(cmd.c_str());
  CHECK(WEXITSTATUS(status) == 1);
  CHECK(slurp("cli_bad_err.tmp").find("error[validation]") != std::string::npos);
}

TEST_CASE("kernel constants emits json") {
  const RunResult r = run("kernel-constants --kernel uniform --p 1");
  CHECK(r.exit_code == 0);
  CHECK(r.output.find("\"gamma\"") != std::string::npos);
  CHECK(r.output.find("\"bias_constant\"") != std::string::npos);
  CHECK(r.output.find("-0.0833333") != std::string::npos);  // -1/12
}

TEST_CASE("seeded pipeline simulate -> estimate -> infer is byte stable") {
  write_file("cli_spec.cfg",
             "baseline_c0 = 0.8\nbaseline_c2 = 0.3\neffect_d0 = 0.5\n"
             "frailty_mode = both\nfrailty_var = 0.25\ncensor_rate = 0.2\n"
             "horizon = 1.0\ncutoff = 0.0\nforcing_halfwidth = 1.0\nseed = 2024\n");
  CHECK(run("--log-level quiet simulate --spec cli_spec.cfg --n 500 --out cli_data.csv")
            .exit_code == 0);
  CHECK(run("--log-level quiet simulate --spec cli_spec.cfg --n 500 --out cli_data2.csv")
            .exit_code == 0);
  CHECK(slurp("cli_data.csv") == slurp("cli_data2.csv"));

  CHECK(run("estimate --input cli_data.csv --cutoff 0 --horizon 1 --p 1 --nu 0 --h 0.35 "
            "--kernel uniform --grid 0.25,0.5,1.0 --out cli_est.csv")
            .exit_code == 0);
  CHECK(run("estimate --input cli_data.csv --cutoff 0 --horizon 1 --p 1 --nu 0 --h 0.35 "
            "--kernel uniform --grid 0.25,0.5,1.0 --out cli_est2.csv")
            .exit_code == 0);
  const std::string est = slurp("cli_est.csv");
  CHECK(est == slurp("cli_est2.csv"));
  CHECK(est.find("t,theta_hat") != std::string::npos);

  CHECK(run("infer --input cli_data.csv --cutoff 0 --horizon 1 --p 1 --nu 0 --q 2 --h 0.35 "
            "--b 0.7 --kernel uniform --alpha 0.05 --mode robust --grid 0.5,1.0 "
            "--out cli_inf.csv")
            .exit_code == 0);
  const std::string inf = slurp("cli_inf.csv");
  CHECK(inf.find("ci_lo") != std::string::npos);
  CHECK(inf.find("# mode = robust") != std::string::npos);

  // Golden hash of the full pipeline output, generated once by the reference
  // run of this seeded configuration.
  std::uint64_t hash = 1469598103934665603ULL;
  for (const std::string& path : {std::string("cli_data.csv"), std::string("cli_est.csv"),
                                  std::string("cli_inf.csv")}) {
    for (unsigned char c : slurp(path)) {
      hash ^= c;
      hash *= 1099511628211ULL;
    }
  }
  char hex[32];
  std::snprintf(hex, sizeof(hex), "%016llx", static_cast<unsigned long long>(hash));
  CHECK(std::string(hex) == "df3fe7b517beb5d3");
}

TEST_CASE("montecarlo runs from a plan file and matches across thread counts") {
  write_file("cli_plan.cfg",
             "baseline_c0 = 0.8\nbaseline_c2 = 0.3\neffect_d0 = 0.5\n"
             "frailty_mode = both\nfrailty_var = 0.0\ncensor_rate = 0.2\n"
             "horizon = 1.0\ncutoff = 0.0\nforcing_halfwidth = 1.0\n"
             "sample_sizes = 300\nbandwidths = 0.4\np = 1\nq = 2\nb_factor = 2\n"
             "replications = 6\neval_times = 1.0\nseed = 5\n");
  CHECK(run("--log-level quiet montecarlo --plan cli_plan.cfg --threads 1 --out cli_mc1.csv")
            .exit_code == 0);
  CHECK(run("--log-level quiet montecarlo --plan cli_plan.cfg --threads 4 --out cli_mc4.csv")
            .exit_code == 0);
  CHECK(slurp("cli_mc1.csv") == slurp("cli_mc4.csv"));
  CHECK(slurp("cli_mc1.csv").find("coverage_robust") != std::string::npos);
}
