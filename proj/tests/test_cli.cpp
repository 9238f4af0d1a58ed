#include <gtest/gtest.h>

#include <fstream>

#include <nlohmann/json.hpp>

#include "cli.hpp"
#include "platewaste/dataio.hpp"
#include "test_support.hpp"

namespace platewaste {
namespace {

using testing::TempDir;

int cli(std::vector<std::string> args) {
  args.insert(args.begin(), "platewaste");
  return cli::run(args);
}

nlohmann::json read_json(const std::filesystem::path& p) {
  std::ifstream in(p);
  return nlohmann::json::parse(in);
}

class CliTest : public ::testing::Test {
 protected:
  void SetUp() override {
    data_ = (dir_ / "data").string();
    ASSERT_EQ(cli({"synth", "--out", data_, "--size", "16", "--n-pre", "6", "--n-post", "6",
                   "--classes", "3", "--seed", "4"}),
              cli::kExitOk);
    manifest_ = data_ + "/manifest.json";
  }
  TempDir dir_{"cli"};
  std::string data_;
  std::string manifest_;
};

TEST_F(CliTest, SynthWritesASplitManifest) {
  const DatasetManifest m = load_manifest(manifest_);
  EXPECT_EQ(m.entries.size(), 12u);
  EXPECT_EQ(m.num_classes(), 3);
  int test = 0;
  for (const auto& e : m.entries) test += e.split == Split::kTest;
  EXPECT_EQ(test, 3);
}

TEST_F(CliTest, EvaluateAgainstItselfIsPerfect) {
  const std::string out = (dir_ / "eval").string();
  ASSERT_EQ(cli({"evaluate", "--manifest", manifest_, "--pred-manifest", manifest_, "--split", "all",
                 "--out", out}),
            cli::kExitOk);
  const auto j = read_json(out + "/metrics.json");
  EXPECT_EQ(j["iou"], 1.0);
  EXPECT_EQ(j["dpa"], 1.0);
  EXPECT_EQ(j["num_images"], 12);
  EXPECT_TRUE(std::filesystem::exists(out + "/metrics.csv"));
}

TEST_F(CliTest, EstimateAndHist) {
  const std::string out = (dir_ / "est").string();
  ASSERT_EQ(cli({"estimate", "--manifest", manifest_, "--out", out}), cli::kExitOk);
  const auto j = read_json(out + "/waste.json");
  EXPECT_EQ(j["clamp_eating_rate"], true);
  ASSERT_EQ(j["reports"].size(), 1u);
  std::ifstream csv(out + "/waste.csv");
  std::string header;
  std::getline(csv, header);
  EXPECT_EQ(header.rfind("food_type,", 0), 0u);
  EXPECT_EQ(cli({"estimate", "--manifest", manifest_, "--out", out, "--clamp-eating-rate", "maybe"}),
            cli::kExitUsage);
  const std::string hist = (dir_ / "hist").string();
  ASSERT_EQ(cli({"hist", "--manifest", manifest_, "--out", hist, "--bins", "4"}), cli::kExitOk);
  EXPECT_TRUE(std::filesystem::exists(hist + "/hist.json"));
}

TEST_F(CliTest, AugmentTrainPredictEvaluate) {
  const std::string aug = (dir_ / "aug").string();
  ASSERT_EQ(cli({"augment", "--manifest", manifest_, "--preset", "AdasPolo", "--out", aug}),
            cli::kExitOk);
  const auto aj = read_json(aug + "/augmentation.json");
  EXPECT_EQ(aj["train_after"].get<int>(), 3 * aj["train_before"].get<int>());
  const DatasetManifest am = load_manifest(aug + "/manifest.json");

  const std::string run = (dir_ / "run").string();
  ASSERT_EQ(cli({"train", "--manifest", aug + "/manifest.json", "--width", "2", "--epochs", "1",
                 "--out", run}),
            cli::kExitOk);
  for (const char* f : {"/best.ckpt", "/history.csv", "/history.json", "/summary.json"}) {
    EXPECT_TRUE(std::filesystem::exists(run + f)) << f;
  }
  const std::string pred = (dir_ / "pred").string();
  ASSERT_EQ(cli({"predict", "--manifest", manifest_, "--checkpoint", run + "/best.ckpt", "--out", pred}),
            cli::kExitOk);
  EXPECT_EQ(load_manifest(pred + "/manifest.json").entries.size(), 12u);
  const std::string ev = (dir_ / "ev").string();
  ASSERT_EQ(cli({"evaluate", "--manifest", manifest_, "--checkpoint", run + "/best.ckpt", "--out", ev}),
            cli::kExitOk);
  // Same checkpoint, same split, two routes: identical numbers.
  const std::string ev2 = (dir_ / "ev2").string();
  ASSERT_EQ(cli({"evaluate", "--manifest", manifest_, "--pred-manifest", pred + "/manifest.json",
                 "--out", ev2}),
            cli::kExitOk);
  EXPECT_EQ(read_json(ev + "/metrics.json")["iou"], read_json(ev2 + "/metrics.json")["iou"]);
}

TEST_F(CliTest, ExitCodes) {
  EXPECT_EQ(cli({}), cli::kExitUsage);
  EXPECT_EQ(cli({"frobnicate"}), cli::kExitUsage);
  EXPECT_EQ(cli({"estimate", "--bogus"}), cli::kExitUsage);
  EXPECT_EQ(cli({"estimate", "--manifest", (dir_ / "missing.json").string()}), cli::kExitData);
  EXPECT_EQ(cli({"evaluate", "--manifest", manifest_}), cli::kExitUsage);  // neither source given
  {
    std::ofstream cfg(dir_ / "bad.json");
    cfg << R"({"manifest": "x", "colour": "red"})";
  }
  EXPECT_EQ(cli({"estimate", "--config", (dir_ / "bad.json").string()}), cli::kExitData);
  EXPECT_EQ(cli({"augment", "--manifest", manifest_, "--preset", "Pizza"}), cli::kExitData);
}

TEST(CliFixture, EstimateReproducesAdasPoloRow) {
  TempDir dir("clifx");
  const std::string fx = (dir / "fx").string();
  ASSERT_EQ(cli({"synth", "--fixture", "waste-survey", "--out", fx}), cli::kExitOk);
  const std::string out = (dir / "est").string();
  ASSERT_EQ(cli({"estimate", "--manifest", fx + "/AdasPolo/manifest.json", "--out", out}), cli::kExitOk);
  std::ifstream csv(out + "/waste.csv");
  std::string header, row;
  std::getline(csv, header);
  std::getline(csv, row);
  EXPECT_EQ(row, "AdasPolo,1 / AdasPolo,0.399,0.047,88.2,11.8");
}

TEST_F(CliTest, TrainIsRepeatable) {
  std::string csv[2];
  for (int r = 0; r < 2; ++r) {
    const std::string out = (dir_ / ("t" + std::to_string(r))).string();
    ASSERT_EQ(cli({"train", "--manifest", manifest_, "--width", "2", "--epochs", "2", "--seed", "3",
                   "--out", out}),
              cli::kExitOk);
    std::ifstream in(out + "/history.csv");
    csv[r] = std::string(std::istreambuf_iterator<char>(in), {});
  }
  EXPECT_FALSE(csv[0].empty());
  EXPECT_EQ(csv[0], csv[1]);
}

}  // namespace
}  // namespace platewaste
