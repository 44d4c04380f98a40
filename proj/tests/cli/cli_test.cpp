#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "cli.hpp"
#include "commands.hpp"
#include "config.hpp"
#include "liwuda/error.hpp"
#include "liwuda/io.hpp"
#include "liwuda/settings.hpp"
#include "liwuda/synth.hpp"
#include "liwuda/training.hpp"

namespace liwuda::cli {
namespace {

namespace fs = std::filesystem;

struct Run {
  int code;
  std::string out;
  std::string err;
};

Run invoke(std::vector<std::string> args) {
  args.insert(args.begin(), "liwuda");
  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  std::ostringstream out, err;
  const int code = run(static_cast<int>(argv.size()), argv.data(), out, err);
  return {code, out.str(), err.str()};
}

class CliTest : public ::testing::Test {
 protected:
  void SetUp() override {
    dir_ = fs::temp_directory_path() /
           ("liwuda_cli_" + std::string(::testing::UnitTest::GetInstance()->current_test_info()->name()));
    fs::remove_all(dir_);
    fs::create_directories(dir_);
  }
  void TearDown() override { fs::remove_all(dir_); }

  fs::path write_config(const std::string& text) {
    const fs::path p = dir_ / "experiment.ini";
    std::ofstream(p) << text;
    return p;
  }

  fs::path dir_;
};

const std::string kSmallPda =
    "[experiment]\n"
    "setting = PDA\n"
    "seed = 3\n"
    "[synth_data]\n"
    "n_common = 3\n"
    "n_source_private = 2\n"
    "n_target_private = 0\n"
    "n_source = 80\n"
    "n_target = 64\n"
    "dim = 5\n"
    "rotation = 0.4\n"
    "translation = 0.5 0.5\n"
    "[training]\n"
    "epochs = 2\n"
    "batch_size = 16\n"
    "hidden_width = 12\n"
    "feature_dim = 6\n";

TEST_F(CliTest, OtCheckPassesAndWritesMatrices) {
  const auto r = invoke({"ot-check", "--out", dir_.string(), "--n", "5", "--seed", "9"});
  EXPECT_EQ(r.code, kOk) << r.out << r.err;
  EXPECT_NE(r.out.find("PASS exact vs permutation oracle"), std::string::npos);
  for (const char* f : {kCostCsv, kExactCouplingCsv, kSinkhornCouplingCsv, "ot-check_manifest.json"})
    EXPECT_TRUE(fs::exists(dir_ / f)) << f;
  std::istringstream cost(io::read_file(dir_ / kCostCsv));
  std::string line;
  int rows = 0;
  while (std::getline(cost, line)) {
    EXPECT_EQ(io::split(line, ',').size(), 5u);
    ++rows;
  }
  EXPECT_EQ(rows, 5);
}

TEST_F(CliTest, OtCheckZeroCost) {
  const auto r = invoke({"ot-check", "--out", dir_.string(), "--zero-cost"});
  EXPECT_EQ(r.code, kOk);
  EXPECT_NE(r.out.find("exact    0\n"), std::string::npos) << r.out;
  EXPECT_NE(r.out.find("oracle   0\n"), std::string::npos) << r.out;
}

TEST_F(CliTest, OtCheckReportsToleranceBreach) {
  const auto cfg = write_config("[ot_check]\nreg = 0.5\nsinkhorn_tol = 1e-9\n");
  const auto r = invoke({"ot-check", "--config", cfg.string(), "--out", dir_.string()});
  EXPECT_EQ(r.code, kCheckFailed) << r.out;
  EXPECT_NE(r.out.find("FAIL sinkhorn vs exact"), std::string::npos);
}

TEST_F(CliTest, GenerateIsDeterministic) {
  const auto cfg = write_config(kSmallPda);
  const auto a = dir_ / "a", b = dir_ / "b";
  ASSERT_EQ(invoke({"generate", "--config", cfg.string(), "--out", a.string()}).code, kOk);
  ASSERT_EQ(invoke({"generate", "--config", cfg.string(), "--out", b.string()}).code, kOk);
  for (const char* f : {kSourceFile, kTargetFile}) {
    EXPECT_EQ(io::read_file(a / f), io::read_file(b / f)) << f;
  }
  EXPECT_TRUE(fs::exists(a / "generate_manifest.json"));
  const auto target = data::load_dataset(a / kTargetFile);
  EXPECT_EQ(target.size(), 64u);
  EXPECT_EQ(target.seed, 3u);

  ASSERT_EQ(invoke({"generate", "--config", cfg.string(), "--out", b.string(), "--seed", "4"}).code, kOk);
  EXPECT_NE(io::read_file(a / kSourceFile), io::read_file(b / kSourceFile));
}

TEST_F(CliTest, GenerateRejectsSplitBeforeWriting) {
  std::string text = kSmallPda;
  text.replace(text.find("n_target_private = 0"), 20, "n_target_private = 1");
  const auto cfg = write_config(text);
  const auto r = invoke({"generate", "--config", cfg.string(), "--out", (dir_ / "run").string()});
  EXPECT_EQ(r.code, kConfig);
  EXPECT_NE(r.err.find("synth_data"), std::string::npos) << r.err;
  EXPECT_FALSE(fs::exists(dir_ / "run" / kSourceFile));
  EXPECT_FALSE(fs::exists(dir_ / "run" / "generate_manifest.json"));
}

TEST_F(CliTest, ConfigErrorsNameTheField) {
  auto r = invoke({"generate", "--config", write_config("[training]\nepochs = ten\n").string(), "--out",
                   dir_.string()});
  EXPECT_EQ(r.code, kConfig);
  EXPECT_NE(r.err.find("training.epochs"), std::string::npos) << r.err;

  r = invoke({"generate", "--config", write_config("[training]\nepoch = 3\n").string()});
  EXPECT_EQ(r.code, kConfig);
  EXPECT_NE(r.err.find("training.epoch"), std::string::npos) << r.err;

  r = invoke({"generate", "--config", write_config("[liwuda_losses]\nbeta = -1\n").string()});
  EXPECT_EQ(r.code, kConfig);

  r = invoke({"generate", "--config", write_config("[experiment]\nsetting = semi\n").string()});
  EXPECT_EQ(r.code, kConfig);
  EXPECT_NE(r.err.find("experiment.setting"), std::string::npos) << r.err;

  r = invoke({"generate", "--config", (dir_ / "missing.ini").string()});
  EXPECT_EQ(r.code, kConfig);
  r = invoke({"bogus"});
  EXPECT_EQ(r.code, kConfig);
}

TEST_F(CliTest, TrainAndEvalEndToEnd) {
  const auto cfg = write_config(kSmallPda);
  const std::string out = dir_.string();
  ASSERT_EQ(invoke({"generate", "--config", cfg.string(), "--out", out}).code, kOk);
  const auto t = invoke({"train", "--config", cfg.string(), "--out", out});
  ASSERT_EQ(t.code, kOk) << t.err;
  for (const char* f : {kCheckpointFile, kHistoryFile, "train_manifest.json"})
    EXPECT_TRUE(fs::exists(dir_ / f)) << f;

  std::ifstream history_file(dir_ / kHistoryFile);
  const auto history = train::TrainHistory::read_csv(history_file);
  ASSERT_EQ(history.steps.size(), 2u * 5u);
  const auto plan = plan_for_setting(UdaSetting::kPDA);
  for (const auto& r : history.steps)
    EXPECT_NEAR(r.total, r.l_c + plan.beta * r.l_wot + plan.eta * r.l_sa + plan.epsilon * r.l_iot, 1e-10);

  const auto e = invoke({"eval", "--config", cfg.string(), "--out", out});
  ASSERT_EQ(e.code, kOk) << e.err;
  const std::string json = io::read_file(dir_ / kReportJson);
  EXPECT_NE(json.find("\"setting\": \"pda\""), std::string::npos) << json;
  EXPECT_EQ(json.find("\"wasserstein_uniform\": null"), std::string::npos) << json;
  const std::string csv = io::read_file(dir_ / kReportCsv);
  EXPECT_EQ(csv.substr(0, csv.find('\n')),
            "setting,samples,common_acc,unk_acc,h_score,os,os_star,wasserstein_uniform,wasserstein_learned");
}

TEST_F(CliTest, TrainWithoutDatasetsFails) {
  const auto r = invoke({"train", "--out", (dir_ / "empty").string()});
  EXPECT_EQ(r.code, kIo);
  EXPECT_FALSE(fs::exists(dir_ / "empty" / kCheckpointFile));
}

TEST_F(CliTest, DivergedTrainingLeavesNoCheckpoint) {
  std::string text = kSmallPda + "learning_rate = 1e200\nmomentum = 0\n";
  const auto cfg = write_config(text);
  const std::string out = dir_.string();
  ASSERT_EQ(invoke({"generate", "--config", cfg.string(), "--out", out}).code, kOk);
  const auto r = invoke({"train", "--config", cfg.string(), "--out", out});
  EXPECT_EQ(r.code, kNumerical) << r.err;
  EXPECT_FALSE(fs::exists(dir_ / kCheckpointFile));
  for (const auto& entry : fs::directory_iterator(dir_))
    EXPECT_EQ(entry.path().string().find(".tmp"), std::string::npos) << entry.path();
}

TEST_F(CliTest, EvalRejectsMismatchedSchema) {
  const auto cfg = write_config(kSmallPda);
  const std::string out = dir_.string();
  ASSERT_EQ(invoke({"generate", "--config", cfg.string(), "--out", out}).code, kOk);
  ASSERT_EQ(invoke({"train", "--config", cfg.string(), "--out", out}).code, kOk);

  std::string other = kSmallPda;
  other.replace(other.find("dim = 5"), 7, "dim = 4");
  const auto other_dir = dir_ / "other";
  ASSERT_EQ(invoke({"generate", "--config", write_config(other).string(), "--out", other_dir.string()}).code,
            kOk);
  const auto r = invoke({"eval", "--config", cfg.string(), "--out", out, "--dataset",
                         (other_dir / kTargetFile).string()});
  EXPECT_EQ(r.code, kIo);
  EXPECT_NE(r.err.find("dim"), std::string::npos) << r.err;

  std::ofstream(dir_ / "broken.txt") << "liwuda-checkpoint 7\n";
  const auto b = invoke({"eval", "--config", cfg.string(), "--out", out, "--checkpoint",
                         (dir_ / "broken.txt").string()});
  EXPECT_EQ(b.code, kIo);
}

TEST(Config, IniParsing) {
  const auto ini = IniFile::parse("# comment\n[Training]\n Epochs = 5 ; trailing\n\n[eval]\nwasserstein=no\n");
  ASSERT_TRUE(ini.has("training", "epochs"));
  EXPECT_EQ(*ini.find("training", "epochs"), "5");
  const auto c = from_ini(ini);
  EXPECT_EQ(c.train.epochs, 5u);
  EXPECT_FALSE(c.eval_wasserstein);

  EXPECT_THROW(IniFile::parse("epochs = 5\n"), ConfigError);
  EXPECT_THROW(IniFile::parse("[training\n"), ConfigError);
  EXPECT_THROW(IniFile::parse("[training]\nepochs\n"), ConfigError);
  EXPECT_THROW(IniFile::parse("[training]\nepochs = 1\nepochs = 2\n"), ConfigError);
  EXPECT_THROW(from_ini(IniFile::parse("[nope]\n")), ConfigError);
}

TEST(Config, TextRoundTrip) {
  ExperimentConfig c;
  c.setting = UdaSetting::kOSDA;
  c.seed = 12;
  c.data.split = {5, 0, 2};
  c.data.shift.translation = {0.25, -1.5};
  c.weights = {0.2, 0.1, 0.0};
  c.train.solver.kind = ot::SolverKind::kExact;
  c.train.learning_rate = 0.003;
  c.ot_check.zero_cost = true;
  const auto back = from_ini(IniFile::parse(to_ini(c)));
  EXPECT_EQ(to_ini(back), to_ini(c));
  EXPECT_EQ(back.setting, UdaSetting::kOSDA);
  EXPECT_EQ(back.train.seed, 12u);
  EXPECT_EQ(back.data.shift.translation, c.data.shift.translation);
}

}  // namespace
}  // namespace liwuda::cli
