// Drives the built ffalign executable. Runs are cold (0 K) so each takes well under a second.

#include <gtest/gtest.h>
#include <sys/wait.h>
#include <unistd.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#ifndef FFALIGN_CLI
#error "FFALIGN_CLI must name the ffalign executable"
#endif

namespace fs = std::filesystem;

namespace {

struct Result {
  int code = -1;
  std::string out, err;
};

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

class Cli : public ::testing::Test {
 protected:
  void SetUp() override {
    const auto* info = ::testing::UnitTest::GetInstance()->current_test_info();
    dir_ = fs::temp_directory_path() / (std::string("ffalign_cli_") + info->name() + "_" + std::to_string(::getpid()));
    fs::remove_all(dir_);
    fs::create_directories(dir_);
  }
  void TearDown() override { fs::remove_all(dir_); }

  Result run(const std::string& args) {
    const auto out = dir_ / "stdout.txt", err = dir_ / "stderr.txt";
    const std::string cmd =
        std::string("\"") + FFALIGN_CLI + "\" " + args + " >\"" + out.string() + "\" 2>\"" + err.string() + "\"";
    const int status = std::system(cmd.c_str());
    Result r;
    r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
    r.out = slurp(out);
    r.err = slurp(err);
    return r;
  }

  fs::path write(const std::string& name, const std::string& text) {
    const auto p = dir_ / name;
    std::ofstream(p) << text;
    return p;
  }

  fs::path dir_;
};

const char* kCold = R"(molecule.preset = co2
pulse.intensity = 5 TW/cm2
pulse.a2 = 0.25
ensemble.temperature = 0 K
grid.t_end = 25 ps
output.artifacts = trace, signal, peaks, superposition
)";

}  // namespace

TEST_F(Cli, Version) {
  const auto r = run("--version");
  EXPECT_EQ(r.code, 0);
  EXPECT_NE(r.out.find("0.1.0"), std::string::npos);
}

TEST_F(Cli, TablesDump) {
  const auto r = run("tables --j-max 4 --axis z");
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_NE(r.out.find("axis,j,m,jp,mp,value\n"), std::string::npos);
  // <2,0|cos^2 z|2,0> = 11/21
  EXPECT_NE(r.out.find("z,2,0,2,0,0.52380952380952"), std::string::npos) << r.out;
  EXPECT_EQ(r.out.find("\nx,"), std::string::npos);
  EXPECT_EQ(run("tables --axis q").code, 2);
  EXPECT_EQ(run("tables --j-max 1").code, 2);
}

TEST_F(Cli, UsageErrorsExitWithTwo) {
  EXPECT_EQ(run("").code, 2);
  EXPECT_EQ(run("launch").code, 2);
  EXPECT_EQ(run("simulate " + (dir_ / "missing.cfg").string()).code, 2);
}

TEST_F(Cli, ConfigErrorNamesTheKey) {
  const auto cfg = write("bad.cfg", "molecule.preset = co2\npulse.intensity = 25 TW/cm2\npulse.a2 = 0.75\n");
  const auto r = run("--output-dir " + (dir_ / "out").string() + " simulate " + cfg.string());
  EXPECT_EQ(r.code, 2);
  EXPECT_NE(r.err.find("pulse.a2"), std::string::npos) << r.err;
  EXPECT_NE(r.err.find("line 3"), std::string::npos) << r.err;
  EXPECT_FALSE(fs::exists(dir_ / "out" / "trace.csv"));
}

TEST_F(Cli, TruncatedBasisExitsWithThree) {
  const auto cfg = write("small.cfg", std::string(kCold) + "grid.j_max = 4\n");
  const auto r = run("--output-dir " + (dir_ / "out").string() + " simulate " + cfg.string());
  EXPECT_EQ(r.code, 3) << r.err;
  EXPECT_NE(r.err.find("physics error"), std::string::npos) << r.err;
}

TEST_F(Cli, SimulateIsByteIdenticalAcrossRunsAndThreadCounts) {
  const auto cfg = write("cold.cfg", kCold);
  const auto a = run("--threads 1 --output-dir " + (dir_ / "a").string() + " simulate " + cfg.string());
  const auto b = run("--threads 3 --output-dir " + (dir_ / "b").string() + " simulate " + cfg.string());
  ASSERT_EQ(a.code, 0) << a.err;
  ASSERT_EQ(b.code, 0) << b.err;
  EXPECT_EQ(a.out.find("wrote") != std::string::npos, true);
  for (const char* name : {"trace.csv", "signal.csv", "peaks.csv", "superposition.csv"}) {
    const std::string x = slurp(dir_ / "a" / name), y = slurp(dir_ / "b" / name);
    ASSERT_FALSE(x.empty()) << name;
    EXPECT_EQ(x, y) << name;
    EXPECT_EQ(x.rfind("# ffalign 0.1.0\n# artifact: ", 0), 0u) << name;
    EXPECT_NE(x.find("# pulse.a2 = 0.25\n"), std::string::npos) << name;
    EXPECT_NE(x.find("# ensemble.temperature = 0 K\n"), std::string::npos) << name;
  }
  EXPECT_NE(a.err.find("default: probe.fwhm"), std::string::npos) << a.err;
}

TEST_F(Cli, FitSelfAndNoisyMeasurement) {
  const auto cfg = write("cold.cfg", kCold);
  ASSERT_EQ(run("--output-dir " + (dir_ / "clean").string() + " simulate " + cfg.string()).code, 0);
  const auto self = run("--output-dir " + (dir_ / "fit").string() + " fit " + cfg.string() + " " +
                        (dir_ / "clean" / "signal.csv").string());
  ASSERT_EQ(self.code, 0) << self.err;
  EXPECT_NE(self.out.find("Sy: scale 1,"), std::string::npos) << self.out;
  EXPECT_TRUE(fs::exists(dir_ / "fit" / "fit.csv"));

  ASSERT_EQ(run("--seed 11 --output-dir " + (dir_ / "noisy").string() + " simulate --noise 0.05 " + cfg.string()).code,
            0);
  const auto strict = write("strict.cfg", std::string(kCold) + "fit.threshold = 0.001\n");
  const auto r = run("--output-dir " + (dir_ / "fit2").string() + " fit " + strict.string() + " " +
                     (dir_ / "noisy" / "signal.csv").string());
  EXPECT_EQ(r.code, 4) << r.out << r.err;
  // the default threshold accepts 5 % noise
  EXPECT_EQ(run("--output-dir " + (dir_ / "fit3").string() + " fit " + cfg.string() + " " +
                (dir_ / "noisy" / "signal.csv").string())
                .code,
            0);
}

TEST_F(Cli, ScanWritesOneRowPerEllipticity) {
  const auto cfg = write("cold.cfg", kCold);
  const auto r = run("--output-dir " + dir_.string() + " scan " + cfg.string() + " --a2 0.5,1/3");
  ASSERT_EQ(r.code, 0) << r.err;
  const std::string csv = slurp(dir_ / "scan.csv");
  EXPECT_NE(csv.find("a2,Sy_norm,Sx_norm,Sy_peak,Sx_peak,Sy_superposition,Sx_superposition\n"), std::string::npos);
  // a2 = 0 is added for the normalization
  EXPECT_NE(csv.find("\n0,1,1,"), std::string::npos) << csv;
  EXPECT_EQ(run("--output-dir " + dir_.string() + " scan " + cfg.string() + " --a2 0.7").code, 2);
}
