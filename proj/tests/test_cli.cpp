#include <gtest/gtest.h>

#include <sys/wait.h>

#include <cstdlib>

#include "test_support.hpp"

using namespace navsort;
using namespace navsort::testing;

namespace {

// Runs the CLI with `args`, output discarded; returns its exit status.
int run(const std::string& args) {
  const std::string cmd = std::string(NAVSORT_CLI_PATH) + " " + args + " > /dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::string quoted(const std::filesystem::path& p) { return "'" + p.string() + "'"; }

class Cli : public ::testing::Test {
 protected:
  static void SetUpTestSuite() {
    dir_ = new TempDir();
    const PhantomSpec spec = small_spec();
    write_text(*dir_ / "spec.json", to_json(spec).dump());
    ASSERT_EQ(run("phantom --spec " + quoted(*dir_ / "spec.json") + " --seed 4 --out " + quoted(*dir_ / "data")), 0);
  }
  static void TearDownTestSuite() {
    delete dir_;
    dir_ = nullptr;
  }
  static std::string data() { return quoted(*dir_ / "data"); }
  static std::filesystem::path path(const std::string& name) { return *dir_ / name; }

  static TempDir* dir_;
};

TempDir* Cli::dir_ = nullptr;

}  // namespace

TEST_F(Cli, PhantomWritesDatasetAndGroundTruth) {
  for (const char* name : {"dataset.json", "rois.json", "rois_ref2.json", "ground_truth.csv", "phantom.json"})
    EXPECT_TRUE(std::filesystem::exists(path("data") / name)) << name;
  EXPECT_EQ(run("validate --dataset " + data()), 0);
}

TEST_F(Cli, ReconstructWritesVolume) {
  ASSERT_EQ(run("reconstruct --dataset " + data() + " --threshold 1.5 --out " + quoted(path("rec"))), 0);
  EXPECT_TRUE(std::filesystem::exists(path("rec") / "volume4d.json"));
  EXPECT_TRUE(std::filesystem::exists(path("rec") / "t0001.u16le"));
  const auto report = nlohmann::json::parse(read_file(path("rec") / "report.json"));
  EXPECT_EQ(report.at("config").at("threshold_px").get<double>(), 1.5);
  EXPECT_FALSE(report.contains("seconds"));
}

TEST_F(Cli, ReconstructOptionsReachTheConfig) {
  ASSERT_EQ(run("reconstruct --dataset " + data() +
                " --method baseline --measure ccorr --reference 2 --aggregation mean --report-timing --jobs 1 --out " +
                quoted(path("rec2"))),
            0);
  const auto report = nlohmann::json::parse(read_file(path("rec2") / "report.json"));
  EXPECT_EQ(report.at("config").at("method"), "baseline");
  EXPECT_EQ(report.at("config").at("measure"), "ccorr");
  EXPECT_EQ(report.at("config").at("reference"), 2);
  EXPECT_EQ(report.at("config").at("aggregation"), "mean");
  EXPECT_TRUE(report.contains("seconds"));
}

TEST_F(Cli, TrackWritesTrace) {
  ASSERT_EQ(run("track --dataset " + data() + " --out " + quoted(path("trk"))), 0);
  const std::string csv = read_file(path("trk") / "trace.csv");
  EXPECT_EQ(std::count(csv.begin(), csv.end(), '\n'), 1 + 21);
}

TEST_F(Cli, SweepWritesRatesAndTiming) {
  ASSERT_EQ(run("sweep --dataset " + data() + " --compare-timing --out " + quoted(path("sweep"))), 0);
  const std::string rates = read_file(path("sweep") / "rates.csv");
  EXPECT_EQ(std::count(rates.begin(), rates.end(), '\n'), 25);
  EXPECT_TRUE(std::filesystem::exists(path("sweep") / "timing.csv"));
}

TEST_F(Cli, UsageErrorsExitWith64) {
  EXPECT_EQ(run(""), 64);
  EXPECT_EQ(run("reconstruct --dataset " + data()), 64);
  EXPECT_EQ(run("reconstruct --dataset " + data() + " --method nope --out x"), 64);
  EXPECT_EQ(run("reconstruct --dataset " + data() + " --threshold -1 --out x"), 64);
  EXPECT_EQ(run("frobnicate"), 64);
}

TEST_F(Cli, InputErrorsExitWith1) {
  EXPECT_EQ(run("validate --dataset " + quoted(path("absent"))), 1);
  write_text(path("bad_rois.json"), R"([{"label":"v","x":60,"y":60,"w":15,"h":15}])");
  EXPECT_EQ(run("reconstruct --dataset " + data() + " --rois " + quoted(path("bad_rois.json")) + " --out " +
                quoted(path("never"))),
            1);
  write_text(path("bad_spec.json"), R"({"vessels":[{"x":1,"y":1}]})");
  EXPECT_EQ(run("phantom --spec " + quoted(path("bad_spec.json")) + " --out " + quoted(path("never"))), 1);
}

TEST_F(Cli, ProcessingErrorsExitWith2) {
  // A flat ROI has no usable template.
  write_text(path("flat_rois.json"), R"([{"label":"corner","x":0,"y":0,"w":5,"h":5}])");
  EXPECT_EQ(run("reconstruct --dataset " + data() + " --rois " + quoted(path("flat_rois.json")) + " --out " +
                quoted(path("never"))),
            2);
}

TEST_F(Cli, RepeatedRunsAreByteIdentical) {
  ASSERT_EQ(run("reconstruct --dataset " + data() + " --out " + quoted(path("det_a"))), 0);
  ASSERT_EQ(run("reconstruct --dataset " + data() + " --jobs 3 --out " + quoted(path("det_b"))), 0);
  EXPECT_TRUE(identical_trees(path("det_a"), path("det_b")));
}
