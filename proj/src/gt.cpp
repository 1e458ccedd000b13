#include "msflow/gt.hpp"

#include "msflow/filters.hpp"
#include "msflow/interpolation.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <array>
#include <cmath>
#include <numbers>
#include <random>

namespace msflow::gt {

void GtConfig::validate() const {
    if (m_p < 1)
        throw InvalidArgument("m_p must be at least 1");
    if (!(fb_threshold > 0.0))
        throw InvalidArgument("fb_threshold must be positive");
    if (fb_radius < 0)
        throw InvalidArgument("fb_radius must be non-negative");
    if (!(subpixel_step > 0.0 && subpixel_step <= 1.0))
        throw InvalidArgument("subpixel_step must lie in (0,1]");
    if (downsample_factor < 1)
        throw InvalidArgument("downsample factor must be at least 1");
    if (lk_window < 3 || lk_window % 2 == 0)
        throw InvalidArgument("LK window must be odd and at least 3");
    if (lk_max_iters < 1)
        throw InvalidArgument("LK iterations must be positive");
}

namespace {

constexpr int kCells = 4;
constexpr int kOrientations = 8;
constexpr double kClamp = 0.2;

// Spatial binning of one patch sample, shared by every pixel.
struct SampleTap {
    int dx, dy;
    double weight;                 // Gaussian window
    std::array<int, 2> bx, by;     // neighbouring cell indices (-1 or kCells when outside)
    std::array<double, 2> wx, wy;  // bilinear weights
};

std::vector<SampleTap> make_taps() {
    std::vector<SampleTap> taps;
    const double sigma = 0.5 * kDescriptorPatch;
    const double cell = double(kDescriptorPatch) / kCells;
    for (int j = -kDescriptorPatch / 2; j < kDescriptorPatch / 2; ++j)
        for (int i = -kDescriptorPatch / 2; i < kDescriptorPatch / 2; ++i) {
            const double rx = i + 0.5, ry = j + 0.5;
            SampleTap t;
            t.dx = i;
            t.dy = j;
            t.weight = std::exp(-(rx * rx + ry * ry) / (2.0 * sigma * sigma));
            const double fx = (rx + 0.5 * kDescriptorPatch) / cell - 0.5;
            const double fy = (ry + 0.5 * kDescriptorPatch) / cell - 0.5;
            const int x0 = static_cast<int>(std::floor(fx)), y0 = static_cast<int>(std::floor(fy));
            t.bx = {x0, x0 + 1};
            t.by = {y0, y0 + 1};
            t.wx = {1.0 - (fx - x0), fx - x0};
            t.wy = {1.0 - (fy - y0), fy - y0};
            taps.push_back(t);
        }
    return taps;
}

}  // namespace

DescriptorField dense_descriptor(const PlaneD& nir) {
    const auto w = nir.cols();
    const auto h = nir.rows();
    if (w < kDescriptorPatch || h < kDescriptorPatch)
        throw InvalidArgument("dense_descriptor: image must be at least 16x16");

    PlaneD gx, gy;
    central_gradient(nir, gx, gy);
    const PlaneD mag = (gx.square() + gy.square()).sqrt();
    PlaneD obin(h, w);  // orientation in bin units [0, 8)
    for (Eigen::Index i = 0; i < nir.size(); ++i) {
        double a = std::atan2(gy.data()[i], gx.data()[i]);
        if (a < 0.0)
            a += 2.0 * std::numbers::pi;
        obin.data()[i] = std::fmod(a * kOrientations / (2.0 * std::numbers::pi), double(kOrientations));
    }

    static const std::vector<SampleTap> taps = make_taps();
    DescriptorField out;
    out.width = w;
    out.height = h;
    out.data.resize(kDescriptorLength, w * h);

    std::array<double, kDescriptorLength> hist;
    for (Eigen::Index y = 0; y < h; ++y)
        for (Eigen::Index x = 0; x < w; ++x) {
            hist.fill(0.0);
            for (const SampleTap& t : taps) {
                const auto sy = std::clamp<Eigen::Index>(y + t.dy, 0, h - 1);
                const auto sx = std::clamp<Eigen::Index>(x + t.dx, 0, w - 1);
                const double m = mag(sy, sx) * t.weight;
                if (m == 0.0)
                    continue;
                const double o = obin(sy, sx);
                const int o0 = static_cast<int>(std::floor(o));
                const double fo = o - o0;
                const std::array<int, 2> ob{o0 % kOrientations, (o0 + 1) % kOrientations};
                const std::array<double, 2> ow{1.0 - fo, fo};
                for (int a = 0; a < 2; ++a) {
                    if (t.by[a] < 0 || t.by[a] >= kCells)
                        continue;
                    for (int b = 0; b < 2; ++b) {
                        if (t.bx[b] < 0 || t.bx[b] >= kCells)
                            continue;
                        const int cellbase = (t.by[a] * kCells + t.bx[b]) * kOrientations;
                        const double ws = m * t.wy[a] * t.wx[b];
                        hist[cellbase + ob[0]] += ws * ow[0];
                        hist[cellbase + ob[1]] += ws * ow[1];
                    }
                }
            }
            Eigen::Map<Eigen::Matrix<double, kDescriptorLength, 1>> d(hist.data());
            const double n0 = d.norm();
            auto col = out.data.col(y * w + x);
            if (n0 < 1e-12) {
                col.setZero();
                continue;
            }
            d /= n0;
            d = d.cwiseMin(kClamp);
            d /= d.norm();
            col = d.cast<float>();
        }
    return out;
}

double descriptor_distance2(const DescriptorField& a, Eigen::Index ay, Eigen::Index ax, const DescriptorField& b,
                            Eigen::Index by, Eigen::Index bx) {
    const float* pa = a.data.data() + (ay * a.width + ax) * kDescriptorLength;
    const float* pb = b.data.data() + (by * b.width + bx) * kDescriptorLength;
    double s = 0.0;
    for (int k = 0; k < kDescriptorLength; ++k) {
        const double d = double(pa[k]) - double(pb[k]);
        s += d * d;
    }
    return s;
}

FlowField match_window(const DescriptorField& desc1, const DescriptorField& desc2, int m_p) {
    if (desc1.width != desc2.width || desc1.height != desc2.height)
        throw InvalidArgument("match_window: descriptor fields differ in size");
    if (m_p < 1)
        throw InvalidArgument("match_window: m_p must be at least 1");
    const auto w = desc1.width;
    const auto h = desc1.height;
    FlowField out(w, h);
    for (Eigen::Index y = 0; y < h; ++y)
        for (Eigen::Index x = 0; x < w; ++x) {
            double best = std::numeric_limits<double>::infinity();
            int best_mag = std::numeric_limits<int>::max();
            int bu = 0, bv = 0;
            for (int dy = -m_p; dy <= m_p; ++dy) {
                const auto qy = y + dy;
                if (qy < 0 || qy >= h)
                    continue;
                for (int dx = -m_p; dx <= m_p; ++dx) {
                    const auto qx = x + dx;
                    if (qx < 0 || qx >= w)
                        continue;
                    const double d = descriptor_distance2(desc1, y, x, desc2, qy, qx);
                    const int mag = dx * dx + dy * dy;
                    if (d < best || (d == best && mag < best_mag)) {
                        best = d;
                        best_mag = mag;
                        bu = dx;
                        bv = dy;
                    }
                }
            }
            out.u(y, x) = bu;
            out.v(y, x) = bv;
        }
    return out;
}

double sampling_insensitive_difference(const PlaneD& im, Eigen::Index y, Eigen::Index x, double v) {
    const auto w = im.cols();
    const auto h = im.rows();
    const double c = im(y, x);
    double lo = c, hi = c;
    constexpr std::array<std::array<int, 2>, 4> nbrs{{{1, 0}, {-1, 0}, {0, 1}, {0, -1}}};
    for (const auto& [dx, dy] : nbrs) {
        const auto sx = std::clamp<Eigen::Index>(x + dx, 0, w - 1);
        const auto sy = std::clamp<Eigen::Index>(y + dy, 0, h - 1);
        const double mid = 0.5 * (c + im(sy, sx));
        lo = std::min(lo, mid);
        hi = std::max(hi, mid);
    }
    return std::max({0.0, v - hi, lo - v});
}

FbResult fb_consistency(const FlowField& forward, const FlowField& backward, const PlaneD& nir1, const PlaneD& nir2,
                        const FbParams& params) {
    const auto w = forward.width();
    const auto h = forward.height();
    if (backward.width() != w || backward.height() != h || nir1.cols() != w || nir1.rows() != h ||
        !same_size(nir1, nir2))
        throw InvalidArgument("fb_consistency: inputs differ in size");
    if (!(params.threshold > 0.0))
        throw InvalidArgument("fb_consistency: threshold must be positive");
    if (params.radius < 0)
        throw InvalidArgument("fb_consistency: radius must be non-negative");

    FbResult res{forward, PlaneU8::Zero(h, w)};
    auto reject = [&](Eigen::Index y, Eigen::Index x) {
        res.flow.set_unknown(y, x);
        res.occlusion(y, x) = 255;
    };
    auto inside = [&](long qx, long qy) { return qx >= 0 && qy >= 0 && qx < w && qy < h; };
    auto cx = [w](long x) { return std::clamp<Eigen::Index>(x, 0, w - 1); };
    auto cy = [h](long y) { return std::clamp<Eigen::Index>(y, 0, h - 1); };
    const int r = params.radius;
    const double area = double(2 * r + 1) * (2 * r + 1);

    for (Eigen::Index y = 0; y < h; ++y)
        for (Eigen::Index x = 0; x < w; ++x) {
            if (!forward.valid(y, x)) {
                reject(y, x);
                continue;
            }
            const long qx = std::lround(x + forward.u(y, x));
            const long qy = std::lround(y + forward.v(y, x));
            if (!inside(qx, qy) || !backward.valid(qy, qx)) {
                reject(y, x);
                continue;
            }
            const long rx = std::lround(qx + backward.u(qy, qx));
            const long ry = std::lround(qy + backward.v(qy, qx));
            if (!inside(rx, ry)) {
                reject(y, x);
                continue;
            }
            if (params.max_roundtrip >= 0.0 &&
                double(std::max(std::abs(rx - long(x)), std::abs(ry - long(y)))) > params.max_roundtrip) {
                reject(y, x);
                continue;
            }
            double diff = 0.0;
            for (int j = -r; j <= r; ++j)
                for (int i = -r; i <= r; ++i)
                    diff += sampling_insensitive_difference(nir1, cy(ry + j), cx(rx + i), nir2(cy(qy + j), cx(qx + i)));
            if (diff / area > params.threshold)
                reject(y, x);
        }
    return res;
}

FlowField lk_subpixel(const PlaneD& nir1, const PlaneD& nir2, const FlowField& integer_flow, const GtConfig& config) {
    config.validate();
    const auto w = nir1.cols();
    const auto h = nir1.rows();
    if (!same_size(nir1, nir2) || integer_flow.width() != w || integer_flow.height() != h)
        throw InvalidArgument("lk_subpixel: inputs differ in size");

    PlaneD gx, gy;
    central_gradient(nir1, gx, gy);
    const int r = config.lk_window / 2;
    const double stop = 0.5 * config.subpixel_step;

    FlowField out = integer_flow;
    for (Eigen::Index y = 0; y < h; ++y)
        for (Eigen::Index x = 0; x < w; ++x) {
            if (!integer_flow.valid(y, x))
                continue;
            Eigen::Matrix2d tensor = Eigen::Matrix2d::Zero();
            for (int j = -r; j <= r; ++j)
                for (int i = -r; i <= r; ++i) {
                    const auto sy = std::clamp<Eigen::Index>(y + j, 0, h - 1);
                    const auto sx = std::clamp<Eigen::Index>(x + i, 0, w - 1);
                    const Eigen::Vector2d g(gx(sy, sx), gy(sy, sx));
                    tensor += g * g.transpose();
                }
            const Eigen::SelfAdjointEigenSolver<Eigen::Matrix2d> eig(tensor, Eigen::EigenvaluesOnly);
            if (eig.eigenvalues()(0) < 1e-6)
                continue;
            const Eigen::Matrix2d inv = tensor.inverse();

            const double u0 = integer_flow.u(y, x), v0 = integer_flow.v(y, x);
            Eigen::Vector2d delta = Eigen::Vector2d::Zero();
            for (int it = 0; it < config.lk_max_iters; ++it) {
                Eigen::Vector2d b = Eigen::Vector2d::Zero();
                for (int j = -r; j <= r; ++j)
                    for (int i = -r; i <= r; ++i) {
                        const auto sy = std::clamp<Eigen::Index>(y + j, 0, h - 1);
                        const auto sx = std::clamp<Eigen::Index>(x + i, 0, w - 1);
                        const double warped =
                            sample_bicubic(nir2, double(sx) + u0 + delta(0), double(sy) + v0 + delta(1)).value;
                        const double e = warped - nir1(sy, sx);
                        b += e * Eigen::Vector2d(gx(sy, sx), gy(sy, sx));
                    }
                const Eigen::Vector2d step = -inv * b;
                delta += step;
                if (step.norm() < stop)
                    break;
            }
            // The integer match is trusted to half a pixel; larger moves mean divergence.
            if (!delta.allFinite() || delta.cwiseAbs().maxCoeff() > 1.0)
                continue;
            out.u(y, x) = std::round((u0 + delta(0)) / config.subpixel_step) * config.subpixel_step;
            out.v(y, x) = std::round((v0 + delta(1)) / config.subpixel_step) * config.subpixel_step;
        }
    return out;
}

FlowField downsample_flow(const FlowField& flow, int factor) {
    if (factor < 1)
        throw InvalidArgument("downsample_flow: factor must be at least 1");
    const auto ow = flow.width() / factor;
    const auto oh = flow.height() / factor;
    FlowField out(ow, oh);
    for (Eigen::Index y = 0; y < oh; ++y)
        for (Eigen::Index x = 0; x < ow; ++x) {
            double su = 0.0, sv = 0.0;
            int n = 0;
            for (int j = 0; j < factor; ++j)
                for (int i = 0; i < factor; ++i) {
                    const auto sy = y * factor + j, sx = x * factor + i;
                    if (!flow.valid(sy, sx))
                        continue;
                    su += flow.u(sy, sx);
                    sv += flow.v(sy, sx);
                    ++n;
                }
            if (n == 0) {
                out.set_unknown(y, x);
                continue;
            }
            out.u(y, x) = su / n / factor;
            out.v(y, x) = sv / n / factor;
        }
    return out;
}

GtResult build_ground_truth(const PlaneD& nir1, const PlaneD& nir2, const GtConfig& config) {
    config.validate();
    if (!same_size(nir1, nir2))
        throw InvalidArgument("build_ground_truth: frames differ in size");
    const DescriptorField d1 = dense_descriptor(nir1);
    const DescriptorField d2 = dense_descriptor(nir2);
    const FlowField forward = match_window(d1, d2, config.m_p);
    const FlowField backward = match_window(d2, d1, config.m_p);
    FbResult fb = fb_consistency(forward, backward, nir1, nir2, {config.fb_threshold, config.fb_radius, config.fb_max_roundtrip});
    FlowField refined = lk_subpixel(nir1, nir2, fb.flow, config);
    FlowField coarse = downsample_flow(refined, config.downsample_factor);

    PlaneU8 mask(coarse.height(), coarse.width());
    for (Eigen::Index y = 0; y < coarse.height(); ++y)
        for (Eigen::Index x = 0; x < coarse.width(); ++x)
            mask(y, x) = coarse.valid(y, x) ? 0 : 255;
    return {std::move(coarse), std::move(mask), std::move(refined), std::move(fb.occlusion)};
}

double joint_entropy(const PlaneD& a, const PlaneD& b, int n_patches, int patch, int bins, std::uint64_t seed) {
    if (!same_size(a, b))
        throw InvalidArgument("joint_entropy: channels differ in size");
    if (bins < 2 || n_patches < 1 || patch < 1 || patch > a.cols() || patch > a.rows())
        throw InvalidArgument("joint_entropy: bad sampling parameters");

    std::mt19937_64 rng(seed);
    std::uniform_int_distribution<Eigen::Index> px(0, a.cols() - patch);
    std::uniform_int_distribution<Eigen::Index> py(0, a.rows() - patch);
    auto bin_of = [bins](double v) { return std::clamp(static_cast<int>(std::floor(v * bins)), 0, bins - 1); };

    std::vector<long> counts(static_cast<std::size_t>(bins) * bins, 0);
    const double inv = 1.0 / (patch * patch);
    for (int k = 0; k < n_patches; ++k) {
        const auto x0 = px(rng);
        const auto y0 = py(rng);
        const double ma = a.block(y0, x0, patch, patch).sum() * inv;
        const double mb = b.block(y0, x0, patch, patch).sum() * inv;
        ++counts[static_cast<std::size_t>(bin_of(ma)) * bins + bin_of(mb)];
    }
    std::sort(counts.begin(), counts.end());
    double h = 0.0;
    for (long c : counts) {
        if (c == 0)
            continue;
        const double p = double(c) / n_patches;
        h -= p * std::log2(p);
    }
    return h;
}

}  // namespace msflow::gt
