#include <gtest/gtest.h>
#include <sys/wait.h>

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "oracles.hpp"
#include "trajcd/csv.hpp"
#include "trajcd/synth.hpp"

namespace fs = std::filesystem;
using namespace trajcd;

namespace {

class Cli : public ::testing::Test {
 protected:
  void SetUp() override {
    dir_ = fs::path(::testing::TempDir()) /
           ("trajcd_cli_" + std::string(::testing::UnitTest::GetInstance()->current_test_info()->name()));
    fs::remove_all(dir_);
    fs::create_directories(dir_);
  }
  void TearDown() override { fs::remove_all(dir_); }

  std::string path(const std::string& name) const { return (dir_ / name).string(); }

  // Runs the binary with stdout/stderr captured into files; returns the exit code.
  int run(const std::string& args) {
    const std::string cmd = std::string(TRAJCD_BIN) + ' ' + args + " >" + path("stdout.txt") +
                            " 2>" + path("stderr.txt");
    const int status = std::system(cmd.c_str());
    return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  }

  std::string read(const std::string& name) const {
    std::ifstream in(path(name), std::ios::binary);
    std::ostringstream s;
    s << in.rdbuf();
    return s.str();
  }
  void write(const std::string& name, const std::string& text) const {
    std::ofstream(path(name), std::ios::binary) << text;
  }

  void write_coefficients(const std::string& name, const std::vector<CoefficientVector>& coeffs) const {
    std::vector<std::string> ids;
    for (std::size_t i = 0; i < coeffs.size(); ++i) ids.push_back("p" + std::to_string(i));
    std::ostringstream out;
    csv::write_coefficients(out, ids, coeffs);
    write(name, out.str());
  }

  // Column `column` of every data row of a report CSV.
  std::vector<std::string> report_column(const std::string& name, std::size_t column) const {
    std::istringstream in(read(name));
    std::vector<std::string> out;
    std::string line;
    std::getline(in, line);
    while (std::getline(in, line)) {
      std::vector<std::string> cells;
      std::stringstream row(line);
      for (std::string cell; std::getline(row, cell, ',');) cells.push_back(cell);
      out.push_back(column < cells.size() ? cells[column] : std::string());
    }
    return out;
  }
  std::vector<double> cds(const std::string& name) const {
    std::vector<double> out;
    for (const auto& s : report_column(name, 1)) out.push_back(std::stod(s));
    return out;
  }

  std::string synth(int example, int samples, int seed, const std::string& prefix) {
    EXPECT_EQ(run("synth --example " + std::to_string(example) + " --samples " + std::to_string(samples) +
                  " --seed " + std::to_string(seed) + " --output " + path(prefix)),
              0)
        << read("stderr.txt");
    return path(prefix);
  }

  fs::path dir_;
};

}  // namespace

TEST_F(Cli, FitExampleOnePrintsDimensionSeventy) {
  const auto prefix = synth(1, 1000, 11, "ex1");
  ASSERT_EQ(run("fit --degree-d 4 --degree-n 4 --input " + prefix + "_data.csv --output " + path("m.txt")), 0);
  EXPECT_NE(read("stdout.txt").find("m=70 N=1000"), std::string::npos) << read("stdout.txt");
  // run header states the defaults
  const auto header = read("stderr.txt");
  EXPECT_NE(header.find("quantile(0.999)"), std::string::npos);
  EXPECT_NE(header.find("quad_points=256"), std::string::npos);
  EXPECT_NE(header.find("epsilon=auto"), std::string::npos);
}

TEST_F(Cli, TrainingMeanIsTheDimensionWithoutRegularization) {
  const auto prefix = synth(1, 1000, 12, "ex1");
  ASSERT_EQ(run("fit --epsilon 0 --input " + prefix + "_data_coef.csv --output " + path("m.txt")), 0);
  ASSERT_EQ(run("score --model " + path("m.txt") + " --input " + prefix + "_data_coef.csv --output " +
                path("r.csv") + " --histogram-out " + path("h.csv")),
            0);
  const auto values = cds("r.csv");
  ASSERT_EQ(values.size(), 1000u);
  double sum = 0.0;
  for (double v : values) sum += v;
  EXPECT_NEAR(sum / 1000.0, 70.0, 70.0 * 1e-8);
  EXPECT_NE(read("stderr.txt").find("probes=1000"), std::string::npos);
  const auto histogram = read("h.csv");
  EXPECT_EQ(histogram.rfind("bin_lo,bin_hi,count\n", 0), 0u);
  EXPECT_EQ(std::count(histogram.begin(), histogram.end(), '\n'), 31);
}

TEST_F(Cli, OutlierIsFlaggedUnderDefaultCalibration) {
  const auto prefix = synth(1, 1000, 13, "ex1");
  ASSERT_EQ(run("fit --epsilon 0 --input " + prefix + "_data.csv --output " + path("m.txt")), 0);
  ASSERT_EQ(run("score --model " + path("m.txt") + " --input " + prefix + "_outlier.csv --output " +
                path("r.csv")),
            0);
  EXPECT_EQ(report_column("r.csv", 4), std::vector<std::string>{"outlier"});
}

TEST_F(Cli, EmptyInputs) {
  write("empty.csv", "");
  write("header.csv", "t\n");
  EXPECT_EQ(run("fit --input " + path("empty.csv") + " --output " + path("m.txt")), 2);
  EXPECT_EQ(run("fit --input " + path("header.csv") + " --output " + path("m.txt")), 2);
  EXPECT_FALSE(fs::exists(path("m.txt")));

  const auto prefix = synth(1, 50, 1, "ex1");
  ASSERT_EQ(run("fit --degree-d 2 --degree-n 3 --input " + prefix + "_data.csv --output " + path("m.txt")), 0);
  ASSERT_EQ(run("score --model " + path("m.txt") + " --input " + path("header.csv")), 0);
  EXPECT_EQ(read("stdout.txt"), "id,cd,christoffel,threshold,verdict,baseline_l2\n");
}

TEST_F(Cli, ExitCodes) {
  const auto prefix = synth(1, 60, 2, "ex1");
  ASSERT_EQ(run("fit --degree-d 2 --degree-n 4 --input " + prefix + "_data_coef.csv --output " + path("m.txt")), 0);

  EXPECT_EQ(run("fit --no-such-flag"), 2);
  EXPECT_EQ(run("frobnicate"), 2);
  EXPECT_EQ(run("fit --input " + path("missing.csv") + " --output " + path("x.txt")), 2);
  write("bad.csv", "t,a\n0,1\n0.5,x\n");
  EXPECT_EQ(run("fit --input " + path("bad.csv") + " --output " + path("x.txt")), 2);
  EXPECT_NE(read("stderr.txt").find("row 3"), std::string::npos);
  EXPECT_EQ(run("fit --degree-n 0 --input " + prefix + "_data.csv --output " + path("x.txt")), 2);
  EXPECT_EQ(run("fit --threshold-quantile 0.9 --threshold-multiple 2 --input " + prefix +
                "_data.csv --output " + path("x.txt")),
            2);
  EXPECT_EQ(run("info --model " + path("bad.csv")), 2);

  // constant curves make the moment matrix singular
  write("flat.csv", "t,a,b\n-1,1,1\n1,1,1\n");
  EXPECT_EQ(run("fit --epsilon 0 --degree-d 1 --degree-n 2 --input " + path("flat.csv") + " --output " +
                path("x.txt")),
            3);
  EXPECT_NE(read("stderr.txt").find("smallest eigenvalue"), std::string::npos);

  // harmonic mismatch: three coefficient rows against an n = 4 model
  write_coefficients("short.csv", {CoefficientVector{0.1, 0.2, 0.3}});
  EXPECT_EQ(run("score --model " + path("m.txt") + " --input " + path("short.csv")), 4);
  EXPECT_EQ(run("score --degree-n 5 --model " + path("m.txt") + " --input " + prefix + "_outlier.csv"), 4);
  // domain mismatch: samples outside the model's interval
  write("wide.csv", "t,a\n-1,0\n2,0\n");
  EXPECT_EQ(run("score --model " + path("m.txt") + " --input " + path("wide.csv")), 4);
  EXPECT_EQ(run("score --domain=0:2 --model " + path("m.txt") + " --input " + prefix + "_outlier.csv"), 4);
}

TEST_F(Cli, DeterministicRunsAreByteIdentical) {
  const auto a = synth(1, 200, 5, "a");
  const auto b = synth(1, 200, 5, "b");
  for (const char* suffix : {"_data.csv", "_data_coef.csv", "_outlier.csv", "_outlier_coef.csv",
                             "_nominal.csv", "_overlay.csv"}) {
    EXPECT_EQ(read(std::string("a") + suffix), read(std::string("b") + suffix)) << suffix;
  }
  for (const char* model : {"m1.txt", "m2.txt"}) {
    ASSERT_EQ(run("fit --deterministic --degree-d 3 --degree-n 4 --input " + a + "_data.csv --output " +
                  path(model)),
              0);
  }
  EXPECT_EQ(read("m1.txt"), read("m2.txt"));
  for (const char* report : {"r1.csv", "r2.csv"}) {
    ASSERT_EQ(run("score --deterministic --model " + path("m1.txt") + " --input " + a +
                  "_data.csv --output " + path(report) + " --histogram-out " + path(report) + ".h"),
              0);
  }
  EXPECT_EQ(read("r1.csv"), read("r2.csv"));
  EXPECT_EQ(read("r1.csv.h"), read("r2.csv.h"));
}

TEST_F(Cli, SynthLayouts) {
  const auto prefix = synth(1, 1000, 3, "ex1");
  const auto data = read("ex1_data.csv");
  const auto header = data.substr(0, data.find('\n'));
  EXPECT_EQ(std::count(header.begin(), header.end(), ','), 1000);
  EXPECT_EQ(std::count(data.begin(), data.end(), '\n'), 1 + synth::kCurvePoints);
  const auto overlay = read("ex1_overlay.csv");
  EXPECT_EQ(std::count(overlay.begin(), overlay.end(), '\n'), 202);

  synth(2, 100, 3, "ex2");
  const auto table = csv::read_table_file(path("ex2_outlier_coef.csv"));
  ASSERT_EQ(table.coeffs.size(), 1u);
  EXPECT_NE(table.coeffs[0][4], 0.0);
}

TEST_F(Cli, UpdateMatchesRefitOnTheUnion) {
  const auto base = test::gaussian_dataset(120, 4, 21, 0.5);
  const auto extra = test::gaussian_dataset(7, 4, 22, 0.5);
  auto all = base;
  all.insert(all.end(), extra.begin(), extra.end());
  write_coefficients("base.csv", base);
  write_coefficients("extra.csv", extra);
  write_coefficients("all.csv", all);
  write_coefficients("probes.csv", test::gaussian_dataset(100, 4, 23, 0.8));
  write("none.csv", "coef\n1\n2\n3\n4\n");

  const std::string options = " --degree-d 2 --degree-n 4 --epsilon 1e-6 --deterministic";
  ASSERT_EQ(run("fit" + options + " --input " + path("base.csv") + " --output " + path("base.txt")), 0);
  ASSERT_EQ(run("fit" + options + " --input " + path("all.csv") + " --output " + path("all.txt")), 0);
  ASSERT_EQ(run("update --model " + path("base.txt") + " --input " + path("extra.csv") + " --output " +
                path("updated.txt")),
            0);
  EXPECT_NE(read("stdout.txt").find("N=127"), std::string::npos);

  const auto score = [&](const std::string& model, const std::string& out) {
    EXPECT_EQ(run("score --threshold-multiple 1 --model " + path(model) + " --input " + path("probes.csv") +
                  " --output " + path(out)),
              0)
        << read("stderr.txt");
    return cds(out);
  };
  const auto refit = score("all.txt", "refit.csv");
  const auto updated = score("updated.txt", "updated.csv");
  ASSERT_EQ(refit.size(), 100u);
  for (std::size_t i = 0; i < refit.size(); ++i) EXPECT_LE(test::rel_diff(updated[i], refit[i]), 1e-8);

  // an updated model has no stored calibration
  EXPECT_EQ(run("score --model " + path("updated.txt") + " --input " + path("probes.csv")), 2);
  EXPECT_EQ(run("score --model " + path("updated.txt") + " --reference " + path("all.csv") + " --input " +
                path("probes.csv")),
            0);

  ASSERT_EQ(run("downdate --model " + path("updated.txt") + " --input " + path("extra.csv") + " --output " +
                path("back.txt")),
            0);
  const auto original = score("base.txt", "base.csv");
  const auto back = score("back.txt", "back.csv");
  for (std::size_t i = 0; i < original.size(); ++i) EXPECT_LE(test::rel_diff(back[i], original[i]), 1e-8);

  const auto before = read("base.txt");
  ASSERT_EQ(run("update --model " + path("base.txt") + " --input " + path("none.csv")), 0);
  EXPECT_EQ(read("base.txt"), before);
  ASSERT_EQ(run("downdate --model " + path("base.txt") + " --input " + path("none.csv")), 0);
  EXPECT_EQ(read("base.txt"), before);
}

TEST_F(Cli, BaselineColumns) {
  const auto prefix = synth(1, 80, 4, "ex1");
  ASSERT_EQ(run("fit --degree-d 2 --degree-n 4 --input " + prefix + "_data.csv --output " + path("m.txt")), 0);
  // probes: the first two database members
  std::ifstream in(prefix + "_data.csv");
  std::ostringstream members;
  for (std::string line; std::getline(in, line);) {
    std::stringstream row(line);
    std::string c0, c1, c2;
    std::getline(row, c0, ',');
    std::getline(row, c1, ',');
    std::getline(row, c2, ',');
    members << c0 << ',' << c1 << ',' << c2 << '\n';
  }
  write("members.csv", members.str());

  ASSERT_EQ(run("baseline --model " + path("m.txt") + " --reference " + prefix + "_data.csv --input " +
                path("members.csv") + " --output " + path("b.csv")),
            0)
      << read("stderr.txt");
  EXPECT_EQ(read("b.csv").substr(0, read("b.csv").find('\n')),
            "id,cd,christoffel,threshold,verdict,baseline_l2,naive_fraction");
  EXPECT_EQ(report_column("b.csv", 0), (std::vector<std::string>{"g1", "g2"}));
  EXPECT_EQ(report_column("b.csv", 5), (std::vector<std::string>{"0", "0"}));
  EXPECT_EQ(report_column("b.csv", 6), (std::vector<std::string>{"0", "0"}));

  ASSERT_EQ(run("baseline --naive-delta 0 --model " + path("m.txt") + " --reference " + prefix +
                "_data.csv --input " + prefix + "_outlier.csv --output " + path("o.csv")),
            0);
  EXPECT_EQ(report_column("o.csv", 6), std::vector<std::string>{"0"});
  EXPECT_GT(std::stod(report_column("o.csv", 5)[0]), 0.0);
  EXPECT_EQ(run("baseline --model " + path("m.txt") + " --input " + prefix + "_outlier.csv"), 2);
}

TEST_F(Cli, InfoListsMetadata) {
  const auto prefix = synth(1, 40, 6, "ex1");
  ASSERT_EQ(run("fit --degree-d 1 --degree-n 3 --input " + prefix + "_data_coef.csv --output " + path("m.txt")), 0);
  ASSERT_EQ(run("info --model " + path("m.txt")), 0);
  const auto out = read("stdout.txt");
  EXPECT_NE(out.find("m=4 N=40"), std::string::npos) << out;
  EXPECT_NE(out.find("input_format=coefficient"), std::string::npos);
  EXPECT_NE(out.find("calibration_quantile=0.999"), std::string::npos);
  EXPECT_NE(out.find("created="), std::string::npos);
}
