#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "msmv/error.hpp"
#include "msmv/nn.hpp"
#include "support.hpp"

using namespace msmv;
using namespace msmv::nn;

namespace {

Mat random_mat(int r, int c, std::mt19937_64& rng) {
    std::normal_distribution<double> d(0.0, 1.0);
    Mat m(r, c);
    for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = d(rng);
    return m;
}

}  // namespace

TEST(ParamStore, RejectsDuplicateNames) {
    ParamStore ps;
    ps.add("a", Mat::Zero(1, 1));
    EXPECT_THROW(ps.add("a", Mat::Zero(2, 2)), Error);
    EXPECT_EQ(ps.index_of("a"), 0u);
    EXPECT_THROW(static_cast<void>(ps.index_of("b")), Error);
}

TEST(ParamStore, BuffersAreNotTrainable) {
    ParamStore ps;
    ps.add("w", Mat::Zero(2, 2));
    ps.add("running", Mat::Zero(1, 2), true);
    EXPECT_TRUE(ps[0].trainable());
    EXPECT_FALSE(ps[1].trainable());
    ps[0].frozen = true;
    EXPECT_FALSE(ps[0].trainable());
    EXPECT_EQ(ps.scalar_count(), 6u);
}

TEST(Init, TruncatedNormalStaysWithinTwoSigma) {
    Rng rng(1);
    const Mat m = truncated_normal(100, 100, 0.02, rng);
    EXPECT_LE(m.cwiseAbs().maxCoeff(), 0.04);
    const double mean = m.mean();
    const double sd = std::sqrt((m.array() - mean).square().mean());
    EXPECT_NEAR(mean, 0.0, 1e-3);
    EXPECT_NEAR(sd, 0.02 * 0.8796, 1e-3);  // std of a normal truncated at +-2 sigma
}

TEST(Linear, ForwardMatchesDefinition) {
    Rng rng(2);
    ParamStore ps;
    const Linear lin = Linear::create(ps, "l", 3, 2, true, Linear::Init::FanInUniform, rng);
    std::mt19937_64 g(3);
    const Mat x = random_mat(4, 3, g);
    const Mat y = lin.forward(ps, x);
    for (int i = 0; i < 4; ++i)
        for (int j = 0; j < 2; ++j) {
            double s = ps.value(lin.bias)(0, j);
            for (int k = 0; k < 3; ++k) s += x(i, k) * ps.value(lin.weight)(k, j);
            EXPECT_NEAR(y(i, j), s, 1e-14);
        }
    EXPECT_THROW(lin.forward(ps, random_mat(4, 5, g)), Error);
}

TEST(Linear, GradientsMatchFiniteDifferences) {
    Rng rng(4);
    ParamStore ps;
    const Linear lin = Linear::create(ps, "l", 5, 3, true, Linear::Init::FanInUniform, rng);
    std::mt19937_64 g(5);
    Mat x = random_mat(4, 5, g);
    const Mat w = random_mat(4, 3, g);
    Grads grads(ps);
    const Mat dx = lin.backward(ps, x, w, grads);
    auto f = [&] { return (lin.forward(ps, x).array() * w.array()).sum(); };
    EXPECT_LT(test::max_grad_error(ps, grads, f, 100, g), 1e-7);
    for (Eigen::Index k = 0; k < x.size(); ++k) {
        const double saved = x.data()[k];
        x.data()[k] = saved + 1e-6;
        const double p = f();
        x.data()[k] = saved - 1e-6;
        const double m = f();
        x.data()[k] = saved;
        EXPECT_LT(test::rel_error(dx.data()[k], (p - m) / 2e-6), 1e-7);
    }
}

TEST(LayerNorm, NormalizesRows) {
    ParamStore ps;
    const LayerNorm ln = LayerNorm::create(ps, "n", 6);
    std::mt19937_64 g(6);
    const Mat y = ln.forward(ps, random_mat(3, 6, g) * 5.0, nullptr);
    for (int i = 0; i < 3; ++i) {
        EXPECT_NEAR(y.row(i).mean(), 0.0, 1e-12);
        EXPECT_NEAR(y.row(i).squaredNorm() / 6.0, 1.0, 1e-5);
    }
}

TEST(LayerNorm, GradientsMatchFiniteDifferences) {
    ParamStore ps;
    const LayerNorm ln = LayerNorm::create(ps, "n", 6);
    std::mt19937_64 g(7);
    ps[ln.gamma].value = random_mat(1, 6, g);
    ps[ln.beta].value = random_mat(1, 6, g);
    Mat x = random_mat(3, 6, g);
    const Mat w = random_mat(3, 6, g);
    LayerNormCache cache;
    ln.forward(ps, x, &cache);
    Grads grads(ps);
    const Mat dx = ln.backward(ps, cache, w, grads);
    auto f = [&] { return (ln.forward(ps, x, nullptr).array() * w.array()).sum(); };
    EXPECT_LT(test::max_grad_error(ps, grads, f, 100, g), 1e-7);
    for (Eigen::Index k = 0; k < x.size(); ++k) {
        const double saved = x.data()[k];
        x.data()[k] = saved + 1e-6;
        const double p = f();
        x.data()[k] = saved - 1e-6;
        const double m = f();
        x.data()[k] = saved;
        EXPECT_LT(test::rel_error(dx.data()[k], (p - m) / 2e-6), 1e-6);
    }
}

TEST(Activations, GeluValuesAndDerivative) {
    EXPECT_NEAR(gelu(0.0), 0.0, 1e-15);
    EXPECT_NEAR(gelu(1.0), 0.8413447460685429, 1e-14);
    EXPECT_NEAR(gelu(-1.0), -0.15865525393145707, 1e-14);
    for (double x = -4.0; x <= 4.0; x += 0.37) {
        const double numeric = (gelu(x + 1e-6) - gelu(x - 1e-6)) / 2e-6;
        EXPECT_NEAR(gelu_grad(x), numeric, 1e-8);
    }
}

TEST(Activations, SigmoidIsStable) {
    EXPECT_EQ(sigmoid(0.0), 0.5);
    EXPECT_EQ(sigmoid(-1000.0), 0.0);
    EXPECT_EQ(sigmoid(1000.0), 1.0);
    EXPECT_NEAR(sigmoid(2.0) + sigmoid(-2.0), 1.0, 1e-15);
}

TEST(GradsArithmetic, AccumulateAndScale) {
    ParamStore ps;
    ps.add("a", Mat::Zero(2, 2));
    Grads a(ps), b(ps);
    a[0].setConstant(1.0);
    b[0].setConstant(2.0);
    a += b;
    a *= 0.5;
    EXPECT_EQ(a[0](1, 1), 1.5);
    a.zero();
    EXPECT_EQ(a[0].cwiseAbs().sum(), 0.0);
}
