#include "msflow/filters.hpp"
#include "msflow/io.hpp"
#include "msflow/weightmap.hpp"

#include "oracles.hpp"
#include "test_support.hpp"

#include <gtest/gtest.h>

using namespace msflow;
using namespace msflow::testing;

TEST(Lambda, EqualGradientsGiveMidpoint) {
    EXPECT_EQ(lambda_from_gradients(0.3, 0.3), 0.5);
    EXPECT_EQ(lambda_from_gradients(7.0, 7.0), 0.5);
}

TEST(Lambda, NirOnlyGradient) {
    EXPECT_NEAR(lambda_from_gradients(0.0, 0.2), 1.0 / (1.0 + std::exp(-5.0)), 1e-15);
    EXPECT_NEAR(lambda_from_gradients(0.0, 0.2), 0.993307, 1e-6);
}

TEST(Lambda, VisibleOnlyGradient) {
    EXPECT_NEAR(lambda_from_gradients(0.2, 0.0), 1.0 / (1.0 + std::exp(5.0)), 1e-15);
    EXPECT_NEAR(lambda_from_gradients(0.2, 0.0), 0.006693, 1e-6);
}

TEST(Lambda, FlatFallback) {
    EXPECT_EQ(lambda_from_gradients(0.0, 0.0), 0.5);
    EXPECT_EQ(lambda_from_gradients(1e-9, 0.0), 0.5);
    const WeightMap m = compute_lambda({PlaneD::Constant(5, 5, 0.2)}, PlaneD::Constant(5, 5, 0.9));
    EXPECT_TRUE((m.lambda == 0.5).all());
}

TEST(Lambda, MatchesOracleOnRandomPairs) {
    std::mt19937_64 rng(21);
    std::uniform_real_distribution<double> mag(0.0, 2.0);
    for (int i = 0; i < 1000; ++i) {
        const double gv = mag(rng), gn = mag(rng);
        EXPECT_NEAR(lambda_from_gradients(gv, gn), logistic_oracle(gv, gn), 1e-10);
    }
}

TEST(Lambda, ComputeLambdaUsesSobelMagnitudes) {
    std::mt19937_64 rng(22);
    std::vector<PlaneD> vis;
    for (int c = 0; c < 3; ++c)
        vis.push_back(msflow::testing::random_plane(12, 10, rng));
    const PlaneD nir = msflow::testing::random_plane(12, 10, rng);
    const WeightMap m = compute_lambda(vis, nir);
    const PlaneD gv = sobel_gradient(vis).magnitude();
    const PlaneD gn = sobel_gradient(nir).magnitude();
    for (Eigen::Index y = 0; y < 12; ++y)
        for (Eigen::Index x = 0; x < 10; ++x)
            EXPECT_NEAR(m.lambda(y, x), logistic_oracle(gv(y, x), gn(y, x)), 1e-12);
}

TEST(Lambda, MonotoneInNirGradient) {
    std::mt19937_64 rng(23);
    std::uniform_real_distribution<double> mag(0.01, 2.0);
    for (int i = 0; i < 500; ++i) {
        const double gv = mag(rng);
        const double a = mag(rng), b = mag(rng);
        if (a == b)
            continue;
        const double lo = std::min(a, b), hi = std::max(a, b);
        EXPECT_LT(lambda_from_gradients(gv, lo), lambda_from_gradients(gv, hi));
    }
}

TEST(Lambda, ScaleInvariant) {
    std::mt19937_64 rng(24);
    std::vector<PlaneD> vis{msflow::testing::random_plane(9, 9, rng)};
    const PlaneD nir = msflow::testing::random_plane(9, 9, rng);
    const WeightMap m1 = compute_lambda(vis, nir);
    const WeightMap m2 = compute_lambda({PlaneD(vis[0] * 0.37)}, PlaneD(nir * 0.37));
    EXPECT_LT((m1.lambda - m2.lambda).abs().maxCoeff(), 1e-10);
}

TEST(Lambda, SwapSymmetry) {
    std::mt19937_64 rng(25);
    std::uniform_real_distribution<double> mag(0.0, 3.0);
    for (int i = 0; i < 500; ++i) {
        const double gv = mag(rng), gn = mag(rng);
        EXPECT_NEAR(lambda_from_gradients(gv, gn), 1.0 - lambda_from_gradients(gn, gv), 1e-12);
    }
}

TEST(Lambda, RangeOpenUnitInterval) {
    std::mt19937_64 rng(26);
    const WeightMap m = compute_lambda({msflow::testing::random_plane(16, 16, rng)},
                                       msflow::testing::random_plane(16, 16, rng));
    EXPECT_TRUE((m.lambda > 0.0).all());
    EXPECT_TRUE((m.lambda < 1.0).all());
}

TEST(Lambda, Validation) {
    const PlaneD p = PlaneD::Zero(5, 5);
    EXPECT_THROW(compute_lambda({p}, PlaneD::Zero(5, 6)), InvalidArgument);
    EXPECT_THROW(compute_lambda({p}, p, LambdaParams{0.0, 0.5}), InvalidArgument);
    EXPECT_THROW(compute_lambda({p}, p, LambdaParams{10.0, 1.5}), InvalidArgument);
}

TEST(Lambda, DebugRasterRounds) {
    msflow::testing::TempDir dir("lambda");
    WeightMap m{PlaneD(1, 3)};
    m.lambda << 0.0, 0.5, 1.0;
    write_lambda_map(m, dir / "l.pgm");
    const auto back = load_image(dir / "l.pgm", ChannelRole::nir);
    EXPECT_EQ(back[0](0, 0) * 255.0, 0.0);
    EXPECT_EQ(back[0](0, 1) * 255.0, 128.0);
    EXPECT_EQ(back[0](0, 2) * 255.0, 255.0);
}
