#include "msflow/filters.hpp"
#include "msflow/interpolation.hpp"
#include "msflow/io.hpp"

#include "test_support.hpp"

#include <gtest/gtest.h>

#include <cstring>
#include <fstream>

using namespace msflow;
using msflow::testing::TempDir;

namespace {

void write_raw(const std::filesystem::path& p, const std::string& header, const std::vector<unsigned char>& data) {
    std::ofstream f(p, std::ios::binary);
    f << header;
    f.write(reinterpret_cast<const char*>(data.data()), static_cast<std::streamsize>(data.size()));
}

std::vector<unsigned char> read_raw(const std::filesystem::path& p) {
    std::ifstream f(p, std::ios::binary);
    return {std::istreambuf_iterator<char>(f), std::istreambuf_iterator<char>()};
}

}  // namespace

TEST(LoadImage, EightBitEndpointsNormalize) {
    TempDir dir("io");
    write_raw(dir / "a.pgm", "P5\n2 1\n255\n", {0, 255});
    const auto img = load_image(dir / "a.pgm", ChannelRole::visible);
    ASSERT_EQ(img.size(), 1u);
    EXPECT_EQ(img[0].cols(), 2);
    EXPECT_EQ(img[0].rows(), 1);
    EXPECT_EQ(img[0](0, 0), 0.0);
    EXPECT_EQ(img[0](0, 1), 1.0);
}

TEST(LoadImage, SixteenBitScalesByMaxval) {
    TempDir dir("io");
    write_raw(dir / "a.pgm", "P5\n1 1\n65535\n", {0x80, 0x00});
    const auto img = load_image(dir / "a.pgm", ChannelRole::nir);
    EXPECT_DOUBLE_EQ(img[0](0, 0), 32768.0 / 65535.0);
    EXPECT_NEAR(img[0](0, 0), 0.50000763, 1e-8);
}

TEST(LoadImage, HeaderCommentsAndRgb) {
    TempDir dir("io");
    write_raw(dir / "a.ppm", "P6\n# comment\n2 1 # trailing\n255\n", {255, 0, 51, 0, 255, 102});
    const auto img = load_image(dir / "a.ppm", ChannelRole::visible);
    ASSERT_EQ(img.size(), 3u);
    EXPECT_EQ(img[0](0, 0), 1.0);
    EXPECT_EQ(img[2](0, 0), 0.2);
    EXPECT_EQ(img[1](0, 1), 1.0);
    EXPECT_EQ(img[2](0, 1), 0.4);
}

TEST(LoadImage, Errors) {
    TempDir dir("io");
    EXPECT_THROW(load_image(dir / "missing.pgm", ChannelRole::visible), IoError);
    write_raw(dir / "deep.pgm", "P5\n1 1\n70000\n", {0, 0, 0});
    EXPECT_THROW(load_image(dir / "deep.pgm", ChannelRole::visible), IoError);
    write_raw(dir / "short.pgm", "P5\n4 4\n255\n", {1, 2, 3});
    EXPECT_THROW(load_image(dir / "short.pgm", ChannelRole::visible), IoError);
    write_raw(dir / "rgb.ppm", "P6\n1 1\n255\n", {1, 2, 3});
    EXPECT_THROW(load_image(dir / "rgb.ppm", ChannelRole::nir), IoError);
    write_raw(dir / "ascii.pgm", "P2\n1 1\n255\n7\n", {});
    EXPECT_THROW(load_image(dir / "ascii.pgm", ChannelRole::visible), IoError);
}

TEST(LoadImage, PairingDimensionMismatch) {
    std::vector<PlaneD> vis{PlaneD::Zero(4, 4)};
    EXPECT_THROW(make_multispectral(vis, PlaneD::Zero(4, 5)), InvalidArgument);
    EXPECT_NO_THROW(make_multispectral(vis, PlaneD::Zero(4, 4)));
}

TEST(WritePnm, SixteenBitRoundTrip) {
    TempDir dir("io");
    std::mt19937_64 rng(3);
    std::vector<PlaneD> rgb;
    for (int c = 0; c < 3; ++c)
        rgb.push_back(((msflow::testing::random_plane(5, 7, rng) * 65535.0).round() / 65535.0).eval());
    write_pnm(dir / "a.ppm", rgb, 16);
    const auto back = load_image(dir / "a.ppm", ChannelRole::visible);
    for (int c = 0; c < 3; ++c)
        EXPECT_TRUE((back[c] - rgb[c]).abs().maxCoeff() < 1e-12);
}

TEST(FlowIo, ZeroFieldRoundTrip) {
    TempDir dir("flo");
    const FlowField f(3, 2);
    write_flow(f, dir / "z.flo");
    EXPECT_EQ(read_flow(dir / "z.flo"), f);
}

TEST(FlowIo, ByteLayout) {
    TempDir dir("flo");
    FlowField f(2, 1);
    f.u(0, 0) = 1.0f;
    f.v(0, 0) = -2.0f;
    f.set_unknown(0, 1);
    write_flow(f, dir / "a.flo");
    const auto bytes = read_raw(dir / "a.flo");
    ASSERT_EQ(bytes.size(), 12u + 4 * 4);
    EXPECT_EQ(std::string(bytes.begin(), bytes.begin() + 4), "PIEH");
    EXPECT_EQ(bytes[4], 2);
    EXPECT_EQ(bytes[5], 0);
    EXPECT_EQ(bytes[8], 1);
    float vals[4];
    std::memcpy(vals, bytes.data() + 12, sizeof vals);
    EXPECT_EQ(vals[0], 1.0f);
    EXPECT_EQ(vals[1], -2.0f);
    EXPECT_EQ(vals[2], 1e10f);
    EXPECT_EQ(vals[3], 1e10f);
}

TEST(FlowIo, SentinelSurvives) {
    TempDir dir("flo");
    FlowField f(4, 3);
    f.u(1, 2) = 0.5;
    f.set_unknown(2, 1);
    write_flow(f, dir / "s.flo");
    const FlowField g = read_flow(dir / "s.flo");
    EXPECT_FALSE(g.valid(2, 1));
    EXPECT_TRUE(g.valid(1, 2));
    EXPECT_EQ(g.u(1, 2), 0.5);
}

TEST(FlowIo, RandomFieldsRoundTripBitExact) {
    TempDir dir("flo");
    std::mt19937_64 rng(11);
    std::uniform_real_distribution<float> val(-50.0f, 50.0f);
    std::uniform_int_distribution<int> dim(1, 20);
    std::bernoulli_distribution unknown(0.1);
    for (int trial = 0; trial < 50; ++trial) {
        FlowField f(dim(rng), dim(rng));
        for (Eigen::Index y = 0; y < f.height(); ++y)
            for (Eigen::Index x = 0; x < f.width(); ++x) {
                f.u(y, x) = val(rng);
                f.v(y, x) = val(rng);
                if (unknown(rng))
                    f.set_unknown(y, x);
            }
        write_flow(f, dir / "r.flo");
        const FlowField g = read_flow(dir / "r.flo");
        ASSERT_EQ(g, f) << "trial " << trial;
        EXPECT_TRUE((g.validity() == f.validity()).all());
    }
}

TEST(FlowIo, Errors) {
    TempDir dir("flo");
    write_raw(dir / "bad.flo", "XXXX", {2, 0, 0, 0, 1, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0});
    EXPECT_THROW(read_flow(dir / "bad.flo"), IoError);
    write_raw(dir / "trunc.flo", "PIEH", {2, 0, 0, 0, 1, 0, 0, 0, 0, 0, 0, 0});
    EXPECT_THROW(read_flow(dir / "trunc.flo"), IoError);
    FlowField f(2, 2);
    f.u(0, 0) = std::nan("");
    EXPECT_THROW(write_flow(f, dir / "nan.flo"), InvalidArgument);
    EXPECT_THROW(write_flow(FlowField(0, 0), dir / "empty.flo"), InvalidArgument);
}

TEST(Bicubic, ConstantImage) {
    const PlaneD p = PlaneD::Constant(6, 7, 0.37);
    for (double x : {-2.0, 0.0, 1.3, 3.5, 5.99, 8.0})
        for (double y : {-1.0, 0.25, 2.0, 4.75, 7.0})
            EXPECT_NEAR(sample_bicubic(p, x, y).value, 0.37, 1e-12);
}

TEST(Bicubic, IntegerNodesReturnStoredValue) {
    std::mt19937_64 rng(5);
    const PlaneD p = msflow::testing::random_plane(8, 9, rng);
    for (Eigen::Index y = 0; y < 8; ++y)
        for (Eigen::Index x = 0; x < 9; ++x) {
            const auto s = sample_bicubic(p, double(x), double(y));
            EXPECT_EQ(s.value, p(y, x));
            EXPECT_FALSE(s.out_of_bounds);
        }
    EXPECT_EQ(sample_bicubic(p, 2.0, 3.0).value, p(3, 2));
}

TEST(Bicubic, LinearRamp) {
    PlaneD p(6, 8);
    for (Eigen::Index y = 0; y < 6; ++y)
        for (Eigen::Index x = 0; x < 8; ++x)
            p(y, x) = double(x) / 10.0;
    EXPECT_NEAR(sample_bicubic(p, 2.5, 2.0).value, 0.25, 1e-12);
}

TEST(Bicubic, BilinearExactInInterior) {
    std::mt19937_64 rng(8);
    std::uniform_real_distribution<double> coef(-1.0, 1.0);
    std::uniform_real_distribution<double> px(1.0, 9.0);
    for (int trial = 0; trial < 20; ++trial) {
        const double a = coef(rng), b = coef(rng), c = coef(rng), d = coef(rng);
        auto f = [&](double x, double y) { return a + b * x + c * y + d * x * y; };
        PlaneD p(12, 12);
        for (Eigen::Index y = 0; y < 12; ++y)
            for (Eigen::Index x = 0; x < 12; ++x)
                p(y, x) = f(double(x), double(y));
        for (int k = 0; k < 20; ++k) {
            const double x = px(rng), y = px(rng);
            EXPECT_NEAR(sample_bicubic(p, x, y).value, f(x, y), 1e-12);
        }
    }
}

TEST(Bicubic, OutOfBoundsClampsAndFlags) {
    PlaneD p(3, 3);
    p << 1, 2, 3, 4, 5, 6, 7, 8, 9;
    const auto s = sample_bicubic(p, -3.0, 1.0);
    EXPECT_TRUE(s.out_of_bounds);
    EXPECT_NEAR(s.value, 4.0, 1e-12);
    EXPECT_TRUE(sample_bicubic(p, 2.0001, 0.0).out_of_bounds);
    EXPECT_FALSE(sample_bicubic(p, 2.0, 2.0).out_of_bounds);
}

TEST(Bicubic, AnalyticGradientMatchesDifferences) {
    std::mt19937_64 rng(9);
    const PlaneD p = msflow::testing::random_plane(10, 10, rng);
    const double x = 4.3, y = 5.6, h = 1e-6;
    const auto g = BicubicStencil(10, 10, x, y).value_and_gradient(p);
    const double fx = (sample_bicubic(p, x + h, y).value - sample_bicubic(p, x - h, y).value) / (2 * h);
    const double fy = (sample_bicubic(p, x, y + h).value - sample_bicubic(p, x, y - h).value) / (2 * h);
    EXPECT_NEAR(g[1], fx, 1e-7);
    EXPECT_NEAR(g[2], fy, 1e-7);
}

TEST(Sobel, ConstantIsZero) {
    const auto g = sobel_gradient(PlaneD::Constant(5, 6, 0.8));
    EXPECT_EQ(g.gx[0].abs().maxCoeff(), 0.0);
    EXPECT_EQ(g.gy[0].abs().maxCoeff(), 0.0);
}

TEST(Sobel, UnitStepGivesUnitGradient) {
    PlaneD p = PlaneD::Zero(6, 8);
    p.rightCols(4).setOnes();
    const auto g = sobel_gradient(p);
    for (Eigen::Index y = 1; y < 5; ++y) {
        EXPECT_DOUBLE_EQ(g.gx[0](y, 3), 1.0);
        EXPECT_DOUBLE_EQ(g.gx[0](y, 4), 1.0);
        EXPECT_DOUBLE_EQ(g.gx[0](y, 1), 0.0);
        for (Eigen::Index x = 0; x < 8; ++x)
            EXPECT_EQ(g.gy[0](y, x), 0.0);
    }
}

TEST(Sobel, RampGradient) {
    // With the 1/4 weights, (I[x+1] - I[x-1]) contributes 2c over a unit-sum smoothing.
    const double c = 0.03;
    PlaneD p(5, 7);
    for (Eigen::Index y = 0; y < 5; ++y)
        for (Eigen::Index x = 0; x < 7; ++x)
            p(y, x) = c * double(x);
    const auto g = sobel_gradient(p);
    for (Eigen::Index y = 1; y < 4; ++y)
        for (Eigen::Index x = 1; x < 6; ++x) {
            EXPECT_NEAR(g.gx[0](y, x), 2.0 * c, 1e-15);
            EXPECT_NEAR(g.gy[0](y, x), 0.0, 1e-15);
        }
}

TEST(Sobel, Linearity) {
    std::mt19937_64 rng(12);
    const PlaneD i = msflow::testing::random_plane(9, 11, rng);
    const PlaneD j = msflow::testing::random_plane(9, 11, rng);
    const double a = 0.7, b = -1.3;
    const auto gi = sobel_gradient(i), gj = sobel_gradient(j), gs = sobel_gradient(PlaneD(a * i + b * j));
    EXPECT_LT((gs.gx[0] - (a * gi.gx[0] + b * gj.gx[0])).abs().maxCoeff(), 1e-12);
    EXPECT_LT((gs.gy[0] - (a * gi.gy[0] + b * gj.gy[0])).abs().maxCoeff(), 1e-12);
}

TEST(Sobel, MultiChannelMagnitudeIsEuclidean) {
    std::mt19937_64 rng(13);
    std::vector<PlaneD> ch{msflow::testing::random_plane(6, 6, rng), msflow::testing::random_plane(6, 6, rng)};
    const auto g = sobel_gradient(ch);
    const PlaneD m = g.magnitude();
    for (Eigen::Index y = 0; y < 6; ++y)
        for (Eigen::Index x = 0; x < 6; ++x) {
            const double e = std::sqrt(g.gx[0](y, x) * g.gx[0](y, x) + g.gy[0](y, x) * g.gy[0](y, x) +
                                       g.gx[1](y, x) * g.gx[1](y, x) + g.gy[1](y, x) * g.gy[1](y, x));
            EXPECT_NEAR(m(y, x), e, 1e-15);
        }
}

TEST(Sobel, TooSmall) { EXPECT_THROW(sobel_gradient(PlaneD::Zero(2, 5)), InvalidArgument); }
