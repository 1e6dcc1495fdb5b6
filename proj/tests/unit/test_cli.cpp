#include <gtest/gtest.h>

#include <fstream>
#include <sstream>

#include "cli/commands.hpp"
#include "cli/config.hpp"
#include "json.hpp"

namespace {

namespace fs = std::filesystem;
using namespace cci::cli;

const fs::path kGolden = fs::path(CCI_TEST_DATA_DIR) / "golden";

int cli(std::vector<std::string> args) {
  args.insert(args.begin(), "cci");
  std::vector<char*> argv;
  for (auto& a : args) argv.push_back(a.data());
  std::ostringstream out, err;
  return run_cli(static_cast<int>(argv.size()), argv.data(), out, err);
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream s;
  s << in.rdbuf();
  return s.str();
}

class CliTest : public ::testing::Test {
 protected:
  void SetUp() override {
    dir_ = fs::temp_directory_path() /
           ("cci_cli_" + std::string(::testing::UnitTest::GetInstance()->current_test_info()->name()));
    fs::remove_all(dir_);
    fs::create_directories(dir_);
  }
  void TearDown() override { fs::remove_all(dir_); }

  fs::path write_config(const std::string& text, const std::string& name = "cfg.json") {
    const auto p = dir_ / name;
    std::ofstream(p) << text;
    return p;
  }

  fs::path dir_;
};

TEST_F(CliTest, GenerateWithoutConfigIsUsageError) { EXPECT_EQ(cli({"generate"}), kUsageError); }

TEST_F(CliTest, MissingConfigFileIsUsageError) {
  EXPECT_EQ(cli({"run", "--config", (dir_ / "nope.json").string()}), kUsageError);
}

TEST_F(CliTest, UnknownConfigKeyIsUsageError) {
  auto cfg = write_config(R"({"output_dir": "out", "experiment": {"n_runz": 3}})");
  EXPECT_EQ(cli({"generate", "--config", cfg.string()}), kUsageError);
}

TEST_F(CliTest, UnknownSubcommandIsUsageError) { EXPECT_EQ(cli({"frobnicate"}), kUsageError); }

TEST_F(CliTest, FeaturesOnEmptyDirectoryIsRuntimeError) {
  fs::create_directories(dir_ / "empty");
  EXPECT_EQ(cli({"features", "--logs", (dir_ / "empty").string(), "--output", (dir_ / "f.csv").string()}),
            kRuntimeError);
}

TEST_F(CliTest, FeaturesReproduceGoldenCsvByteForByte) {
  const auto out = dir_ / "features.csv";
  ASSERT_EQ(cli({"features", "--logs", (kGolden / "logs").string(), "--labels", (kGolden / "labels.csv").string(),
                 "--output", out.string()}),
            kOk);
  EXPECT_EQ(slurp(out), slurp(kGolden / "expected_features.csv"));
  const auto again = dir_ / "again.csv";
  ASSERT_EQ(cli({"features", "--logs", (kGolden / "logs").string(), "--labels", (kGolden / "labels.csv").string(),
                 "--output", again.string()}),
            kOk);
  EXPECT_EQ(slurp(out), slurp(again));
}

TEST_F(CliTest, GenerateIsSeedDeterministic) {
  auto cfg = write_config(R"({"output_dir": "a"})");
  ASSERT_EQ(cli({"generate", "--config", cfg.string(), "--seed", "7"}), kOk);
  ASSERT_EQ(cli({"generate", "--config", cfg.string(), "--seed", "7", "--out", (dir_ / "b").string()}), kOk);
  ASSERT_EQ(cli({"generate", "--config", cfg.string(), "--seed", "8", "--out", (dir_ / "c").string()}), kOk);
  EXPECT_EQ(slurp(dir_ / "a" / "features.csv"), slurp(dir_ / "b" / "features.csv"));
  EXPECT_EQ(slurp(dir_ / "a" / "logs" / "P01.csv"), slurp(dir_ / "b" / "logs" / "P01.csv"));
  EXPECT_NE(slurp(dir_ / "a" / "features.csv"), slurp(dir_ / "c" / "features.csv"));
  EXPECT_TRUE(fs::exists(dir_ / "a" / "labels.csv"));
}

TEST_F(CliTest, RunWritesTableRowsAndHonoursOverrides) {
  auto cfg = write_config(R"({"output_dir": "out", "train": {"forest": {"n_trees": 10}}})");
  ASSERT_EQ(cli({"run", "--config", cfg.string(), "--runs", "1", "--alpha", "0.2"}), kOk);
  const auto table = slurp(dir_ / "out" / "table1.txt");
  for (const char* name : {"random_guess", "base", "naive", "cci"}) EXPECT_NE(table.find(name), std::string::npos);
  auto report = nlohmann::json::parse(slurp(dir_ / "out" / "report.json"));
  ASSERT_EQ(report["methods"].size(), 4u);
  for (const auto& m : report["methods"]) {
    EXPECT_EQ(m["alpha"].get<double>(), 0.2);
    EXPECT_EQ(m["n_runs"].get<int>(), 1);
    EXPECT_EQ(m["aggregate"]["accuracy"]["std"].get<double>(), 0.0);
  }
  EXPECT_TRUE(fs::exists(dir_ / "out" / "predictions" / "cci_run00.csv"));
}

TEST_F(CliTest, StagedCommandsChain) {
  auto cfg = write_config(R"({"output_dir": "out"})");
  ASSERT_EQ(cli({"generate", "--config", cfg.string()}), kOk);
  ASSERT_EQ(cli({"train", "--config", cfg.string()}), kOk);
  ASSERT_EQ(cli({"calibrate", "--config", cfg.string()}), kOk);
  ASSERT_EQ(cli({"predict", "--config", cfg.string()}), kOk);
  EXPECT_TRUE(fs::exists(dir_ / "out" / "model.json"));
  EXPECT_TRUE(fs::exists(dir_ / "out" / "calibration.json"));
  ASSERT_TRUE(fs::exists(dir_ / "out" / "predictions.csv"));
  ASSERT_EQ(cli({"plot", "--config", cfg.string(), "--predictions", (dir_ / "out" / "predictions.csv").string()}),
            kOk);
  EXPECT_TRUE(fs::exists(dir_ / "out" / "plots"));
}

TEST_F(CliTest, PlotRejectsMalformedPredictions) {
  const auto bad = dir_ / "bad.csv";
  std::ofstream(bad) << "participant_id,date,p_hat,lo,hi,outcome,label\nP01,2024-01-01,2.0,0.1,0.2,UTI,1\n";
  EXPECT_EQ(cli({"plot", "--predictions", bad.string(), "--out", (dir_ / "plots").string()}), kRuntimeError);
}

TEST(ParseConfig, DefaultsAndOverrides) {
  auto c = parse_config(R"({
    "output_dir": "o",
    "synth": {"seed": 3, "effect_sizes": {"f03": 1.5}},
    "train": {"model": "forest", "forest": {"n_trees": 7}},
    "experiment": {"alpha": 0.05, "n_runs": 4, "quantile_rule": "paper_eq4"}
  })",
                        "/base");
  EXPECT_EQ(c.output_dir, fs::path("/base/o"));
  EXPECT_EQ(c.synth.seed, 3u);
  EXPECT_EQ(c.synth.effect("f03"), 1.5);
  EXPECT_EQ(c.experiment.alpha, 0.05);
  EXPECT_EQ(c.experiment.n_runs, 4u);
  EXPECT_EQ(c.experiment.quantile_rule, cci::QuantileRule::kPaperEq4);
  EXPECT_EQ(c.experiment.train.forest.n_trees, 7u);
}

TEST(ParseConfig, RejectsBadValues) {
  EXPECT_THROW(parse_config(R"({"experiment": {"alpha": 1.5}})", "."), ConfigError);
  EXPECT_THROW(parse_config(R"({"train": {"model": "svm"}})", "."), ConfigError);
  EXPECT_THROW(parse_config(R"({"synth": {"effect_sizes": {"f99": 1}}})", "."),
               ConfigError);
  EXPECT_THROW(parse_config(R"([1, 2])", "."), ConfigError);
}

}  // namespace
