#include <gtest/gtest.h>

#include <random>

#include "msmv/error.hpp"
#include "msmv/fusion.hpp"
#include "oracles.hpp"
#include "support.hpp"

using namespace msmv;
using namespace msmv::fusion;
using test::naive_conv_fusion;
using test::random_bundle;
using test::randomize_head;

TEST(MaxPoolFusion, HandExample) {
    FeatureBundle b;
    b.slots = {Vec(2), Vec(2), Vec(2), Vec(2)};
    b.slots[0] << 1, -2;
    b.slots[1] << 0, 3;
    b.slots[2] << -1, 0;
    b.slots[3] << 2, 2;
    const Vec out = fuse_maxpool(b);
    EXPECT_EQ(out[0], 2.0);
    EXPECT_EQ(out[1], 3.0);
}

TEST(MaxPoolFusion, MatchesBruteForceMax) {
    std::mt19937_64 rng(1);
    for (int t = 0; t < 1000; ++t) {
        const FeatureBundle b = random_bundle(1 + t % 37, rng);
        const Vec out = fuse_maxpool(b);
        for (int i = 0; i < b.dim(); ++i) {
            double m = b.slots[0][i];
            for (int k = 1; k < 4; ++k) m = std::max(m, b.slots[k][i]);
            EXPECT_EQ(out[i], m);
        }
    }
}

TEST(MaxPoolFusion, MissingViewZerosCanDominateNegatives) {
    FeatureBundle b;
    b.slots = {Vec::Constant(3, -1.0), Vec::Zero(3), Vec::Constant(3, -2.0), Vec::Zero(3)};
    b.present = {true, false};
    EXPECT_EQ(fuse_maxpool(b), Vec::Zero(3));
}

TEST(MaxPoolFusion, RejectsRaggedSlots) {
    FeatureBundle b;
    b.slots = {Vec::Zero(3), Vec::Zero(3), Vec::Zero(2), Vec::Zero(3)};
    EXPECT_THROW(fuse_maxpool(b), Error);
}

TEST(ConvFusion, MatchesNaiveOracle) {
    std::mt19937_64 rng(2);
    for (auto [d, c_out] : {std::pair{2, 1}, {4, 2}, {6, 3}, {10, 4}, {16, 5}}) {
        FusionConfig cfg = test::tiny_fusion(FusionStrategy::Conv, d);
        cfg.conv_out_channels = c_out;
        FusionHead head(cfg, 3);
        randomize_head(head.params(), rng);
        for (int t = 0; t < 20; ++t) {
            const FeatureBundle b = random_bundle(d, rng);
            const Vec got = head.fuse_conv(b);
            const Vec want = naive_conv_fusion(b, head.params(), cfg);
            ASSERT_EQ(got.size(), cfg.conv_flatten_size());
            EXPECT_LE((got - want).cwiseAbs().maxCoeff(), 1e-10);
        }
    }
}

TEST(ConvFusion, DefaultGeometryFlattensTo4096) {
    FusionConfig cfg;
    cfg.strategy = FusionStrategy::Conv;
    EXPECT_EQ(cfg.conv_flatten_size(), 4096);
    FusionHead head(cfg, 1);
    std::mt19937_64 rng(3);
    EXPECT_EQ(head.fuse_conv(random_bundle(1024, rng)).size(), 4096);
    EXPECT_TRUE(head.has_input_projection());
    EXPECT_EQ(head.params().at("mlp.in.weight").value.rows(), 4096);
    EXPECT_EQ(head.params().at("mlp.in.weight").value.cols(), 1024);
    EXPECT_EQ(head.params().at("mlp.fc1.weight").value.rows(), 1024);
    EXPECT_EQ(head.params().at("mlp.fc1.weight").value.cols(), 512);
    EXPECT_EQ(head.params().at("mlp.out.weight").value.cols(), 1);
}

TEST(MaxPoolHead, DefaultMlpIs1024To512To1) {
    FusionHead head(FusionConfig{}, 1);
    EXPECT_FALSE(head.has_input_projection());
    EXPECT_FALSE(head.params().contains("conv.weight"));
    EXPECT_EQ(head.params().at("mlp.fc1.weight").value.rows(), 1024);
    EXPECT_EQ(head.params().at("mlp.fc1.weight").value.cols(), 512);
    EXPECT_EQ(head.params().at("mlp.out.weight").value.rows(), 512);
    EXPECT_EQ(head.params().at("mlp.out.weight").value.cols(), 1);
    std::mt19937_64 rng(4);
    const FeatureBundle b = random_bundle(1024, rng);
    const Vec logits = head.forward(std::span(&b, 1), false, nullptr, nullptr);
    EXPECT_EQ(logits.size(), 1);
    EXPECT_TRUE(std::isfinite(logits[0]));
}

TEST(MlpHead, TwoUnitHandExample) {
    FusionConfig cfg;
    cfg.feature_dim = 2;
    cfg.width = 2;
    cfg.hidden = 2;
    cfg.dropout_rate = 0.0;
    FusionHead head(cfg, 1);
    auto& ps = head.params();
    ps.at("mlp.fc1.weight").value << 1, 2, -1, 1;
    ps.at("mlp.fc1.bias").value << 0, -1;
    ps.at("mlp.out.weight").value << 1, 1;
    ps.at("mlp.out.bias").value << 0.5;
    Vec x(2);
    x << 1, -2;
    // h = [3, -1] -> leaky [3, -0.01] -> 3.49
    EXPECT_NEAR(head.mlp_head(x, false, nullptr), 3.49, 1e-12);
    nn::Rng rng(1);
    EXPECT_EQ(head.mlp_head(x, true, &rng), head.mlp_head(x, false, nullptr));
}

TEST(MlpHead, InferenceIsDeterministicAndDropoutIsSeeded) {
    FusionConfig cfg = test::tiny_fusion(FusionStrategy::MaxPool);
    FusionHead head(cfg, 2);
    std::mt19937_64 g(5);
    const Vec x = test::random_vec(16, g);
    EXPECT_EQ(head.mlp_head(x, false, nullptr), head.mlp_head(x, false, nullptr));
    nn::Rng a(9), b(9);
    EXPECT_EQ(head.mlp_head(x, true, &a), head.mlp_head(x, true, &b));
    EXPECT_THROW(head.mlp_head(test::random_vec(5, g), false, nullptr), Error);
}

TEST(BatchNorm, RunningStatsUseMomentumAndUnbiasedVariance) {
    FusionConfig cfg = test::tiny_fusion(FusionStrategy::Conv, 4);
    FusionHead head(cfg, 6);
    std::mt19937_64 g(7);
    std::vector<FeatureBundle> batch{random_bundle(4, g), random_bundle(4, g)};
    nn::Rng rng(1);
    FusionHead::Cache cache;
    head.forward(batch, true, &rng, &cache);
    const Mat before_mean = head.params().at("bn.running_mean").value;
    const Mat before_var = head.params().at("bn.running_var").value;
    head.update_running_stats(cache);
    const double m = 2.0 * 4 * 4;
    for (int o = 0; o < cfg.conv_out_channels; ++o) {
        double s = 0, sq = 0;
        for (const Mat& z : cache.conv_out) s += z.row(o).sum();
        const double mean = s / m;
        for (const Mat& z : cache.conv_out) sq += (z.row(o).array() - mean).square().sum();
        const double var = sq / m;
        EXPECT_NEAR(head.params().at("bn.running_mean").value(0, o), 0.9 * before_mean(0, o) + 0.1 * mean, 1e-14);
        EXPECT_NEAR(head.params().at("bn.running_var").value(0, o), 0.9 * before_var(0, o) + 0.1 * var * m / (m - 1),
                    1e-14);
    }
}

class HeadGradients : public ::testing::TestWithParam<FusionStrategy> {};

TEST_P(HeadGradients, MatchFiniteDifferences) {
    FusionConfig cfg = test::tiny_fusion(GetParam(), 8);
    FusionHead head(cfg, 8);
    std::mt19937_64 g(9);
    std::vector<FeatureBundle> batch{random_bundle(8, g), random_bundle(8, g), random_bundle(8, g)};
    batch[2].slots[1].setZero();
    batch[2].slots[3].setZero();
    const Vec w = test::random_vec(3, g);
    const nn::Rng rng0(42);

    nn::Rng rng = rng0;
    FusionHead::Cache cache;
    head.forward(batch, true, &rng, &cache);
    nn::Grads grads(head.params());
    const auto dslots = head.backward(cache, w, grads);

    auto f = [&] {
        nn::Rng r = rng0;
        return head.forward(batch, true, &r, nullptr).dot(w);
    };
    std::string worst;
    EXPECT_LE(test::max_grad_error(head.params(), grads, f, 12, g, &worst), 1e-4) << worst;

    double slot_err = 0.0;
    for (std::size_t n = 0; n < batch.size(); ++n)
        for (int k = 0; k < 4; ++k)
            for (int i = 0; i < 8; ++i) {
                bool tied = false;  // max over exactly equal slots has no derivative
                for (int o = 0; o < 4; ++o) tied = tied || (o != k && batch[n].slots[o][i] == batch[n].slots[k][i]);
                if (tied && GetParam() == FusionStrategy::MaxPool) continue;
                double& x = batch[n].slots[k][i];
                const double saved = x;
                x = saved + 1e-6;
                const double p = f();
                x = saved - 1e-6;
                const double m = f();
                x = saved;
                slot_err = std::max(slot_err, test::rel_error(dslots[n][k][i], (p - m) / 2e-6));
            }
    EXPECT_LE(slot_err, 1e-4);
}

INSTANTIATE_TEST_SUITE_P(BothStrategies, HeadGradients, ::testing::Values(FusionStrategy::MaxPool, FusionStrategy::Conv),
                         [](const auto& info) { return std::string(to_string(info.param)); });

TEST(FusionConfigCheck, StrategyNamesAndValidation) {
    EXPECT_EQ(strategy_from_string("maxpool"), FusionStrategy::MaxPool);
    EXPECT_EQ(strategy_from_string("conv"), FusionStrategy::Conv);
    EXPECT_THROW(strategy_from_string("attention"), Error);
    FusionConfig bad;
    bad.dropout_rate = 1.0;
    EXPECT_THROW(bad.validate(), Error);
    bad = FusionConfig{};
    bad.strategy = FusionStrategy::Conv;
    bad.feature_dim = 7;
    EXPECT_THROW(bad.validate(), Error);
}
