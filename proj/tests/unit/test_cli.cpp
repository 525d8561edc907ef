#include <gtest/gtest.h>

#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <random>

#include <nlohmann/json.hpp>

#include "archgen/fileio.hpp"
#include "archgen/synth.hpp"

namespace fs = std::filesystem;

namespace {

struct CliRun {
  int code;
  std::string out;
};

class CliTest : public ::testing::Test {
 protected:
  void SetUp() override {
    std::mt19937_64 rng(std::random_device{}());
    dir_ = fs::temp_directory_path() / ("archgen-cli-" + std::to_string(rng()));
    fs::create_directories(dir_);
  }
  void TearDown() override { fs::remove_all(dir_); }

  // Runs the CLI with an isolated store and output directory.
  CliRun cli(const std::string& args) {
    const fs::path log = dir_ / "stdout.txt";
    const std::string cmd = "env -u ARCHGEN_CONFIG " + std::string(ARCHGEN_CLI) + " --store " + (dir_ / "store").string() +
                            " --out " + (dir_ / "out").string() + " " + args + " > " + log.string() + " 2>&1";
    const int status = std::system(cmd.c_str());
    return {WIFEXITED(status) ? WEXITSTATUS(status) : -1, archgen::read_file(log)};
  }

  fs::path dir_;
};

}  // namespace

TEST_F(CliTest, GenerateWritesReports) {
  ASSERT_EQ(cli("seed").code, 0);
  const CliRun r = cli("generate --dataset cifar-10 --n 2 --count 10 --seed 4");
  ASSERT_EQ(r.code, 0) << r.out;
  const auto j = nlohmann::json::parse(archgen::read_file(dir_ / "out" / "report.json"));
  EXPECT_EQ(j["requested"], 10);
  EXPECT_EQ(j["identities_hold"], true);
  EXPECT_TRUE(fs::exists(dir_ / "out" / "report.csv"));
  EXPECT_TRUE(fs::exists(dir_ / "out" / "run_log.jsonl"));
  EXPECT_NE(r.out.find("identities             hold"), std::string::npos);
}

TEST_F(CliTest, GenerateUsageErrors) {
  ASSERT_EQ(cli("seed").code, 0);
  const CliRun bad_n = cli("generate --dataset mnist --n 7");
  EXPECT_EQ(bad_n.code, 2);
  EXPECT_NE(bad_n.out.find("1..6"), std::string::npos);
  EXPECT_EQ(cli("generate --dataset mnist --n 3 --count 0").code, 0);
  EXPECT_EQ(cli("generate").code, 2);
  EXPECT_EQ(cli("frobnicate").code, 2);
  EXPECT_EQ(cli("generate --dataset atlantis --count 1").code, 2);
}

TEST_F(CliTest, GenerateOnEmptyStoreFails) {
  const CliRun r = cli("generate --dataset mnist --count 1");
  EXPECT_EQ(r.code, 1);
  EXPECT_NE(r.out.find("seed"), std::string::npos) << r.out;
}

TEST_F(CliTest, StatsOnFixture) {
  const CliRun r = cli("stats --input " + std::string(ARCHGEN_TEST_DIR) + "/data/published_means.csv --min-samples 2");
  ASSERT_EQ(r.code, 0) << r.out;
  const std::string overall = archgen::read_file(dir_ / "out" / "overall.csv");
  EXPECT_NE(overall.find("alt-nn3"), std::string::npos);
  EXPECT_NE(overall.find("alt-nn3,3,6,6,53.0667"), std::string::npos);
  EXPECT_TRUE(fs::exists(dir_ / "out" / "per_dataset.txt"));
  EXPECT_TRUE(fs::exists(dir_ / "out" / "significance.csv"));
}

TEST_F(CliTest, StatsErrors) {
  archgen::write_file_atomic(dir_ / "empty.csv", "variant,dataset,accuracy\n");
  EXPECT_EQ(cli("stats --input " + (dir_ / "empty.csv").string()).code, 1);
  archgen::write_file_atomic(dir_ / "bad.csv", "variant,dataset,accuracy\nalt-nn1,mnist,0.5\nalt-nn1,mnist,oops\n");
  const CliRun bad = cli("stats --input " + (dir_ / "bad.csv").string());
  EXPECT_EQ(bad.code, 1);
  EXPECT_NE(bad.out.find(":3"), std::string::npos) << bad.out;
  const CliRun missing = cli("stats --input " + std::string(ARCHGEN_TEST_DIR) + "/data/published_means.csv --baseline alt-nn9");
  EXPECT_NE(missing.code, 0);
  EXPECT_EQ(cli("stats --input /nonexistent/file.csv").code, 1);
}

TEST_F(CliTest, CheckAcceptsRejectsAndReportsRules) {
  ASSERT_EQ(cli("seed").code, 0);
  const std::string fresh = archgen::synth::architecture(424242, 2000);
  archgen::write_file_atomic(dir_ / "fresh.py", fresh);
  const CliRun a = cli("check " + (dir_ / "fresh.py").string());
  EXPECT_EQ(a.code, 0);
  EXPECT_NE(a.out.find("ACCEPT unique"), std::string::npos) << a.out;

  // A whitespace variant of a seeded model.
  const auto line = archgen::read_file(std::string(ARCHGEN_ASSET_DIR) + "/seed_models.jsonl");
  const std::string seeded = nlohmann::json::parse(line.substr(0, line.find('\n')))["code"];
  archgen::write_file_atomic(dir_ / "dup.py", archgen::synth::mutate_whitespace(seeded, 3));
  const CliRun d = cli("check " + (dir_ / "dup.py").string());
  EXPECT_EQ(d.code, 0);
  EXPECT_NE(d.out.find("REJECT duplicate of"), std::string::npos) << d.out;

  archgen::write_file_atomic(dir_ / "tv.py", "import torchvision\n" + fresh);
  const CliRun tv = cli("check " + (dir_ / "tv.py").string());
  EXPECT_NE(tv.out.find("INVALID R4"), std::string::npos) << tv.out;
}

TEST_F(CliTest, BenchCorpusHandling) {
  EXPECT_EQ(cli("bench --corpus " + (dir_ / "nope").string()).code, 2);
  archgen::write_file_atomic(dir_ / "one.py", archgen::synth::architecture(1, 2000));
  const CliRun one = cli("bench --corpus " + (dir_ / "one.py").string());
  EXPECT_EQ(one.code, 0) << one.out;
  EXPECT_TRUE(fs::exists(dir_ / "out" / "bench.csv"));
  EXPECT_EQ(cli("bench --synthetic 50 --seed 3").code, 0);
}

TEST_F(CliTest, ExportImportRoundTrip) {
  ASSERT_EQ(cli("seed").code, 0);
  ASSERT_EQ(cli("export --file " + (dir_ / "all.jsonl").string()).code, 0);
  fs::remove_all(dir_ / "store");
  const CliRun r = cli("import --file " + (dir_ / "all.jsonl").string());
  EXPECT_EQ(r.code, 0);
  EXPECT_NE(r.out.find("imported 12"), std::string::npos) << r.out;
}

TEST_F(CliTest, ConfigErrors) {
  archgen::write_file_atomic(dir_ / "bad.json", "{\n  \"pipeline\": {\"pool_sise\": 4}\n}\n");
  const CliRun typo = cli("--config " + (dir_ / "bad.json").string() + " show-config");
  EXPECT_EQ(typo.code, 2);
  EXPECT_NE(typo.out.find("pool_sise"), std::string::npos);
  archgen::write_file_atomic(dir_ / "ok.json", "{\"pipeline\": {\"pool_size\": 4}}\n");
  const CliRun ok = cli("--config " + (dir_ / "ok.json").string() + " show-config");
  EXPECT_EQ(ok.code, 0);
  EXPECT_NE(ok.out.find("\"pool_size\": 4"), std::string::npos);
}
