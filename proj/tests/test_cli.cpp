#include <gtest/gtest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "msmv/cli.hpp"
#include "msmv/config.hpp"
#include "msmv/dataset.hpp"
#include "msmv/metrics.hpp"

using namespace msmv;
namespace fs = std::filesystem;

namespace {

struct Outcome {
    int code;
    std::string out;
    std::string err;
};

Outcome run(const std::vector<std::string>& args) {
    std::ostringstream out, err;
    const int code = cli::run(args, out, err);
    return {code, out.str(), err.str()};
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

const std::vector<std::string> kTinySets{
    "--set", "backbone.input_side=28", "--set", "backbone.patch_size=2", "--set", "backbone.embed_dim=8",
    "--set", "backbone.depths=2,2",    "--set", "backbone.num_heads=2,4", "--set", "backbone.window_size=7",
    "--set", "backbone.feature_dim=16", "--set", "fusion.width=12",       "--set", "fusion.hidden=6"};

class Cli : public ::testing::Test {
protected:
    void SetUp() override {
        unsetenv("MSMV_SEED");
        dir = fs::temp_directory_path() / ("msmv_cli_" + std::string(::testing::UnitTest::GetInstance()->current_test_info()->name()));
        fs::remove_all(dir);
        fs::create_directories(dir);
    }
    void TearDown() override {
        unsetenv("MSMV_SEED");
        fs::remove_all(dir);
    }
    std::string at(const std::string& rel) const { return (dir / rel).string(); }
    fs::path dir;
};

}  // namespace

TEST_F(Cli, UsageErrorsExitTwo) {
    EXPECT_EQ(run({}).code, 2);
    EXPECT_EQ(run({"frobnicate"}).code, 2);
    EXPECT_EQ(run({"train"}).code, 2);
    EXPECT_EQ(run({"prep", "--manifest", "m.csv", "--out", "o", "--side", "4"}).code, 2);
    EXPECT_EQ(run({"report", "--report", "r.json", "--format", "html"}).code, 2);
    EXPECT_EQ(run({"--help"}).code, 0);
}

TEST_F(Cli, DomainErrorsExitOne) {
    data::write_manifest(dir / "empty.csv", data::Manifest{});
    const auto r = run({"train", "--manifest", at("empty.csv"), "--out", at("m.ckpt")});
    EXPECT_EQ(r.code, 1);
    EXPECT_NE(r.err.find("EmptyDataset"), std::string::npos) << r.err;

    std::ofstream(dir / "bad.json") << "{\"All\": 3}";
    const auto bad = run({"report", "--report", at("bad.json")});
    EXPECT_EQ(bad.code, 1);
    EXPECT_NE(bad.err.find("MalformedReport"), std::string::npos) << bad.err;

    EXPECT_EQ(run({"gen-synthetic", "--n", "0", "--out", at("s")}).code, 1);
    EXPECT_EQ(run({"train", "--manifest", at("empty.csv"), "--out", at("m.ckpt"), "--set", "nope=1"}).code, 1);
}

TEST_F(Cli, EnvironmentSeedOverridesFlag) {
    ASSERT_EQ(run({"gen-synthetic", "--n", "10", "--size", "32", "--missing-rate", "0.3", "--seed", "7", "--out", at("a")}).code, 0);
    setenv("MSMV_SEED", "7", 1);
    ASSERT_EQ(run({"gen-synthetic", "--n", "10", "--size", "32", "--missing-rate", "0.3", "--seed", "1", "--out", at("b")}).code, 0);
    EXPECT_EQ(slurp(dir / "a/manifest.csv"), slurp(dir / "b/manifest.csv"));
    setenv("MSMV_SEED", "x7", 1);
    EXPECT_EQ(run({"gen-synthetic", "--n", "10", "--out", at("c")}).code, 1);
}

TEST_F(Cli, ReportRendersBothFormats) {
    eval::MetricsReport rep;
    rep[eval::Cohort::All].accuracy = 0.8032;
    std::ofstream(dir / "r.json") << eval::report_to_json(rep);
    const auto text = run({"report", "--report", at("r.json")});
    ASSERT_EQ(text.code, 0) << text.err;
    EXPECT_NE(text.out.find("80.32"), std::string::npos);
    const auto md = run({"report", "--report", at("r.json"), "--format", "markdown"});
    ASSERT_EQ(md.code, 0);
    EXPECT_NE(md.out.find("| All Breasts |"), std::string::npos) << md.out;
}

TEST_F(Cli, PipelineFromSyntheticToReport) {
    ASSERT_EQ(run({"gen-synthetic", "--n", "16", "--size", "48", "--missing-rate", "0.2", "--test-fraction", "0.4",
                   "--seed", "3", "--out", at("syn")})
                  .code,
              0);
    EXPECT_TRUE(fs::exists(dir / "syn/manifest.csv.config"));
    const auto prep = run({"prep", "--manifest", at("syn/manifest.csv"), "--out", at("planes"), "--side", "28"});
    ASSERT_EQ(prep.code, 0) << prep.err;
    EXPECT_TRUE(data::is_planes_manifest(dir / "planes/manifest.csv"));
    EXPECT_NE(slurp(dir / "planes/manifest.csv.config").find("# "), std::string::npos);

    std::vector<std::string> train{"train", "--manifest", at("planes/manifest.csv"), "--fusion", "conv", "--epochs", "2",
                                   "--no-augment", "--out", at("run/model.ckpt"), "--seed", "4"};
    train.insert(train.end(), kTinySets.begin(), kTinySets.end());
    const auto tr = run(train);
    ASSERT_EQ(tr.code, 0) << tr.err;
    EXPECT_TRUE(fs::exists(dir / "run/model.ckpt"));
    const RunConfig snap = load_config(dir / "run/model.ckpt.config");
    EXPECT_EQ(snap.fusion.strategy, fusion::FusionStrategy::Conv);
    EXPECT_EQ(snap.train.epochs, 2);
    EXPECT_EQ(snap.train.seed, 4u);
    EXPECT_EQ(snap.backbone.input_side, 28);
    const std::string log = slurp(dir / "run/model.ckpt.log.csv");
    EXPECT_EQ(log.substr(0, log.find('\n')), "epoch,train_loss,val_loss,val_auc,val_acc");
    EXPECT_EQ(std::count(log.begin(), log.end(), '\n'), 3);

    const std::vector<std::string> evaluate{"eval", "--checkpoint", at("run/model.ckpt"), "--manifest",
                                            at("planes/manifest.csv"), "--out", at("run/report.json"),
                                            "--dump-preds", at("run/preds.csv")};
    const auto ev = run(evaluate);
    ASSERT_EQ(ev.code, 0) << ev.err;
    EXPECT_NE(ev.out.find("Breasts with Missing Views"), std::string::npos);
    const std::string first = slurp(dir / "run/report.json");
    const auto report = eval::report_from_json(first);
    EXPECT_GT(report[eval::Cohort::All].n_pos + report[eval::Cohort::All].n_neg, 0);
    EXPECT_TRUE(fs::exists(dir / "run/report.per_exam.json"));
    EXPECT_TRUE(fs::exists(dir / "run/report.json.config"));

    const std::string preds = slurp(dir / "run/preds.csv");
    const long rows = std::count(preds.begin(), preds.end(), '\n') - 1;
    EXPECT_EQ(rows % 6, 0);
    EXPECT_EQ(rows, report[eval::Cohort::All].n_pos + report[eval::Cohort::All].n_neg);

    ASSERT_EQ(run(evaluate).code, 0);
    EXPECT_EQ(slurp(dir / "run/report.json"), first);

    const auto no_aug = run({"eval", "--checkpoint", at("run/model.ckpt"), "--manifest", at("planes/manifest.csv"),
                             "--out", at("run/plain.json"), "--no-test-augment"});
    ASSERT_EQ(no_aug.code, 0) << no_aug.err;
    EXPECT_FALSE(fs::exists(dir / "run/plain.per_exam.json"));
    const auto plain = eval::report_from_json(slurp(dir / "run/plain.json"));
    EXPECT_EQ(6 * (plain[eval::Cohort::All].n_pos + plain[eval::Cohort::All].n_neg),
              report[eval::Cohort::All].n_pos + report[eval::Cohort::All].n_neg);

    const auto raw = run({"eval", "--checkpoint", at("run/model.ckpt"), "--manifest", at("syn/manifest.csv"),
                          "--out", at("run/raw.json"), "--no-test-augment"});
    ASSERT_EQ(raw.code, 0) << raw.err;
    EXPECT_EQ(slurp(dir / "run/raw.json"), slurp(dir / "run/plain.json"));
}
