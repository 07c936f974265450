#include <gtest/gtest.h>

#include <cstdlib>
#include <filesystem>
#include <regex>
#include <sstream>

#include "respscreen/audio_io.hpp"
#include "respscreen/cli.hpp"
#include "respscreen/io.hpp"

using namespace respscreen;
namespace fs = std::filesystem;

namespace {

struct Result {
  int code;
  std::string out;
  std::string err;
};

Result run(std::vector<std::string> args) {
  std::ostringstream out, err;
  const int code = cli::run(args, out, err);
  return {code, out.str(), err.str()};
}

class CliTest : public ::testing::Test {
 protected:
  void SetUp() override {
    dir = fs::temp_directory_path() / ("respscreen_cli_" + std::string(::testing::UnitTest::GetInstance()->current_test_info()->name()));
    fs::remove_all(dir);
    fs::create_directories(dir);
  }
  void TearDown() override { fs::remove_all(dir); }

  std::string path(const std::string& name) const { return (dir / name).string(); }

  // 5 sessions x 2 modalities = 10 recordings.
  void small_cohort() {
    const auto r = run({"synth-manifest", "--out", path("c"), "--seed", "1", "--positive", "3:3", "--healthy", "2:2",
                        "--duration", "0.8"});
    ASSERT_EQ(r.code, 0) << r.err;
  }

  void task1_cohort(bool scramble = false) {
    std::vector<std::string> args = {"synth-manifest", "--out", path("c"), "--seed", "2", "--positive", "25:30",
                                     "--healthy", "25:30", "--duration", "1"};
    if (scramble) args.push_back("--scramble");
    const auto r = run(args);
    ASSERT_EQ(r.code, 0) << r.err;
  }

  fs::path dir;
};

std::size_t count_lines(const std::string& s) { return static_cast<std::size_t>(std::count(s.begin(), s.end(), '\n')); }

}  // namespace

TEST_F(CliTest, ExtractWritesOneRowPerRecording) {
  small_cohort();
  const auto r = run({"extract", "--manifest", path("c/manifest.csv"), "--out", path("f.csv")});
  ASSERT_EQ(r.code, 0) << r.err;
  const auto csv = parse_csv(read_file_text(path("f.csv")));
  EXPECT_EQ(csv.rows.size(), 10u);
  EXPECT_EQ(csv.header.size(), 478u);
  EXPECT_EQ(csv.header[0], "sample_id");
  EXPECT_EQ(count_lines(read_file_text(path("f.csv.skipped.csv"))), 1u);
}

TEST_F(CliTest, ExtractSkipsSilentRecordings) {
  small_cohort();
  const auto wav = read_wav(path("c/audio/s00001@cough.wav"));
  write_wav(path("c/audio/s00001@cough.wav"), AudioSegment{std::vector<double>(wav.size(), 0.0), wav.sample_rate});
  const auto r = run({"extract", "--manifest", path("c/manifest.csv"), "--out", path("f.csv")});
  EXPECT_EQ(r.code, 0);
  EXPECT_EQ(parse_csv(read_file_text(path("f.csv"))).rows.size(), 9u);
  const auto log = parse_csv(read_file_text(path("f.csv.skipped.csv")));
  ASSERT_EQ(log.rows.size(), 1u);
  EXPECT_EQ(log.rows[0][0], "s00001@cough");
  EXPECT_NE(r.err.find("1 recordings skipped"), std::string::npos);
}

TEST_F(CliTest, ExtractIsByteIdenticalAcrossRunsAndJobCounts) {
  small_cohort();
  ASSERT_EQ(run({"extract", "--manifest", path("c/manifest.csv"), "--out", path("a.csv")}).code, 0);
  ASSERT_EQ(run({"extract", "--manifest", path("c/manifest.csv"), "--out", path("b.csv"), "--jobs", "3"}).code, 0);
  EXPECT_EQ(read_file_text(path("a.csv")), read_file_text(path("b.csv")));
  for (const auto& e : fs::directory_iterator(dir)) EXPECT_NE(e.path().extension(), ".tmp");
}

TEST_F(CliTest, ExtractMissingAudioIsIoError) {
  small_cohort();
  fs::remove(path("c/audio/s00002@breath.wav"));
  EXPECT_EQ(run({"extract", "--manifest", path("c/manifest.csv"), "--out", path("f.csv")}).code, cli::kExitIo);
  EXPECT_FALSE(fs::exists(path("f.csv")));
}

TEST_F(CliTest, SynthIsReproducible) {
  ASSERT_EQ(run({"synth-manifest", "--out", path("a"), "--seed", "4", "--preset", "all-tasks", "--embeddings"}).code, 0);
  ASSERT_EQ(run({"synth-manifest", "--out", path("b"), "--seed", "4", "--preset", "all-tasks", "--embeddings"}).code, 0);
  EXPECT_EQ(read_file_text(path("a/manifest.csv")), read_file_text(path("b/manifest.csv")));
  EXPECT_EQ(read_file_text(path("a/embeddings.csv")), read_file_text(path("b/embeddings.csv")));
  EXPECT_EQ(read_file_text(path("a/audio/s00007@breath.wav")), read_file_text(path("b/audio/s00007@breath.wav")));
}

TEST_F(CliTest, EvaluatePrintsTableAndIsDeterministic) {
  task1_cohort();
  const auto a = run({"evaluate", "--manifest", path("c/manifest.csv"), "--task", "1", "--seed", "3", "--out", path("a.json")});
  ASSERT_EQ(a.code, 0) << a.err;
  const std::regex auc_line(R"(Mean \(std\)\s+(0|1)\.\d\d \(0\.\d\d\))");
  EXPECT_TRUE(std::regex_search(a.out, auc_line)) << a.out;
  EXPECT_NE(a.out.find("ROC-AUC"), std::string::npos);
  std::smatch m;
  ASSERT_TRUE(std::regex_search(a.out, m, std::regex(R"(Mean \(std\)\s+(\d\.\d\d))")));
  EXPECT_GE(std::stod(m[1]), 0.95);

  const auto b = run({"evaluate", "--manifest", path("c/manifest.csv"), "--task", "1", "--seed", "3", "--out",
                      path("b.json"), "-j", "2"});
  ASSERT_EQ(b.code, 0);
  EXPECT_EQ(read_file_text(path("a.json")), read_file_text(path("b.json")));
  EXPECT_EQ(a.out, b.out);
}

TEST_F(CliTest, EvaluateErrorsMapToExitCodes) {
  small_cohort();
  const auto m = path("c/manifest.csv");
  const auto c = run({"evaluate", "--manifest", m, "--feature-type", "combined-C", "--out", path("r.json")});
  EXPECT_EQ(c.code, cli::kExitConfig);
  EXPECT_NE(c.err.find("--embeddings"), std::string::npos);
  EXPECT_EQ(run({"evaluate", "--manifest", m, "--task", "1", "--augment", "--out", path("r.json")}).code,
            cli::kExitConfig);
  EXPECT_EQ(run({"evaluate", "--manifest", m, "--task", "3", "--out", path("r.json")}).code, cli::kExitEmptyCohort);
  EXPECT_EQ(run({"evaluate", "--manifest", path("missing.csv"), "--out", path("r.json")}).code, cli::kExitIo);
  EXPECT_EQ(run({"evaluate", "--manifest", m, "--modality", "voice", "--out", path("r.json")}).code, cli::kExitConfig);
  EXPECT_EQ(run({"evaluate", "--out", path("r.json")}).code, cli::kExitConfig);
  EXPECT_EQ(run({"frobnicate"}).code, cli::kExitConfig);
  EXPECT_EQ(run({"--help"}).code, cli::kExitOk);
  EXPECT_FALSE(fs::exists(path("r.json")));
}

TEST_F(CliTest, ConfigFileFromEnvironmentWithFlagOverride) {
  task1_cohort();
  write_file_atomic(path("cfg.toml"), "[evaluate]\nmodality = \"cough\"\npca-cutoff = 0.7\nouter-folds = 2\n");
  ::setenv(cli::kConfigEnv, path("cfg.toml").c_str(), 1);
  const auto a = run({"evaluate", "--manifest", path("c/manifest.csv"), "--out", path("a.json")});
  const auto b = run({"evaluate", "--manifest", path("c/manifest.csv"), "--out", path("b.json"), "--pca-cutoff", "0.8"});
  ::unsetenv(cli::kConfigEnv);
  ASSERT_EQ(a.code, 0) << a.err;
  ASSERT_EQ(b.code, 0) << b.err;
  EXPECT_NE(a.out.find("cough | handcrafted | PCA 0.70"), std::string::npos) << a.out;
  EXPECT_NE(b.out.find("cough | handcrafted | PCA 0.80"), std::string::npos) << b.out;
  EXPECT_NE(a.out.find("2 folds"), std::string::npos);
  const auto c = run({"--config", path("cfg.toml"), "evaluate", "--manifest", path("c/manifest.csv"), "--out", path("c.json")});
  EXPECT_EQ(read_file_text(path("a.json")), read_file_text(path("c.json")));
}

TEST_F(CliTest, EvaluateFromPrecomputedFeatures) {
  task1_cohort();
  ASSERT_EQ(run({"extract", "--manifest", path("c/manifest.csv"), "--out", path("f.csv")}).code, 0);
  const auto r = run({"evaluate", "--manifest", path("c/manifest.csv"), "--features", path("f.csv"), "--out",
                      path("r.json"), "--outer-folds", "3"});
  ASSERT_EQ(r.code, 0) << r.err;
  write_file_atomic(path("bad.csv"), "sample_id,x\na,1\n");
  EXPECT_EQ(run({"evaluate", "--manifest", path("c/manifest.csv"), "--features", path("bad.csv"), "--out",
                 path("r2.json")}).code,
            cli::kExitIo);
}

TEST_F(CliTest, TrainWritesLoadableModel) {
  task1_cohort();
  const auto r = run({"train", "--manifest", path("c/manifest.csv"), "--out", path("m.json"), "--classifier", "svm"});
  ASSERT_EQ(r.code, 0) << r.err;
  const auto text = read_file_text(path("m.json"));
  EXPECT_NE(text.find("respscreen-pipeline"), std::string::npos);
  const auto again = run({"train", "--manifest", path("c/manifest.csv"), "--out", path("m2.json"), "--classifier", "svm"});
  EXPECT_EQ(read_file_text(path("m2.json")), text);
}

TEST_F(CliTest, AugmentWritesSixCopiesWithProvenance) {
  small_cohort();
  const auto r = run({"augment", "--manifest", path("c/manifest.csv"), "--out", path("aug"), "--seed", "2"});
  ASSERT_EQ(r.code, 0) << r.err;
  const auto prov = parse_csv(read_file_text(path("aug/provenance.csv")));
  EXPECT_EQ(prov.rows.size(), 60u);
  EXPECT_EQ(prov.header, (std::vector<std::string>{"sample_id", "parent_id", "method", "parameter", "seed"}));
  for (const auto& row : prov.rows) EXPECT_TRUE(fs::exists(path("aug/" + row[0] + ".wav")));
  EXPECT_EQ(run({"augment", "--manifest", path("c/manifest.csv"), "--out", path("aug2"), "--task", "1"}).code,
            cli::kExitConfig);
}

TEST_F(CliTest, SweepWritesEveryCell) {
  small_cohort();
  ASSERT_EQ(run({"synth-manifest", "--out", path("c"), "--seed", "1", "--positive", "8:8", "--healthy", "8:8",
                 "--duration", "0.8"}).code,
            0);
  const auto r = run({"sweep", "--manifest", path("c/manifest.csv"), "--out", path("s.csv"), "--outer-folds", "2"});
  ASSERT_EQ(r.code, 0) << r.err;
  const auto csv = parse_csv(read_file_text(path("s.csv")));
  EXPECT_EQ(csv.rows.size(), 60u);
  EXPECT_EQ(csv.header.size(), 11u);
  std::size_t skipped = 0;
  for (const auto& row : csv.rows) skipped += row.back() == "skipped: no embeddings";
  EXPECT_EQ(skipped, 48u);
}
