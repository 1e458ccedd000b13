#include "msflow/filters.hpp"

#include "msflow/interpolation.hpp"

#include <algorithm>
#include <cmath>

namespace msflow {
namespace {

Eigen::Index clampi(Eigen::Index i, Eigen::Index n) { return std::clamp<Eigen::Index>(i, 0, n - 1); }

}  // namespace

GradientField sobel_gradient(const std::vector<PlaneD>& channels) {
    if (channels.empty())
        throw InvalidArgument("sobel_gradient: no channels");
    GradientField g;
    for (const auto& c : channels) {
        const auto h = c.rows();
        const auto w = c.cols();
        if (w < 3 || h < 3)
            throw InvalidArgument("sobel_gradient: image smaller than the 3x3 kernel");
        PlaneD gx(h, w), gy(h, w);
        for (Eigen::Index y = 0; y < h; ++y) {
            const auto ym = clampi(y - 1, h), yp = clampi(y + 1, h);
            for (Eigen::Index x = 0; x < w; ++x) {
                const auto xm = clampi(x - 1, w), xp = clampi(x + 1, w);
                gx(y, x) = 0.25 * ((c(ym, xp) - c(ym, xm)) + 2.0 * (c(y, xp) - c(y, xm)) + (c(yp, xp) - c(yp, xm)));
                gy(y, x) = 0.25 * ((c(yp, xm) - c(ym, xm)) + 2.0 * (c(yp, x) - c(ym, x)) + (c(yp, xp) - c(ym, xp)));
            }
        }
        g.gx.push_back(std::move(gx));
        g.gy.push_back(std::move(gy));
    }
    return g;
}

GradientField sobel_gradient(const PlaneD& plane) { return sobel_gradient(std::vector<PlaneD>{plane}); }

void central_gradient(const PlaneD& p, PlaneD& gx, PlaneD& gy) {
    const auto h = p.rows();
    const auto w = p.cols();
    gx.resize(h, w);
    gy.resize(h, w);
    for (Eigen::Index y = 0; y < h; ++y) {
        const auto ym = clampi(y - 1, h), yp = clampi(y + 1, h);
        for (Eigen::Index x = 0; x < w; ++x) {
            gx(y, x) = 0.5 * (p(y, clampi(x + 1, w)) - p(y, clampi(x - 1, w)));
            gy(y, x) = 0.5 * (p(yp, x) - p(ym, x));
        }
    }
}

PlaneD gaussian_blur(const PlaneD& p, double sigma) {
    if (sigma <= 0.0)
        return p;
    const int radius = static_cast<int>(std::ceil(3.0 * sigma));
    std::vector<double> k(2 * radius + 1);
    double sum = 0.0;
    for (int i = -radius; i <= radius; ++i)
        sum += k[i + radius] = std::exp(-0.5 * i * i / (sigma * sigma));
    for (auto& v : k)
        v /= sum;

    const auto h = p.rows();
    const auto w = p.cols();
    PlaneD tmp(h, w), out(h, w);
    for (Eigen::Index y = 0; y < h; ++y)
        for (Eigen::Index x = 0; x < w; ++x) {
            double acc = 0.0;
            for (int i = -radius; i <= radius; ++i)
                acc += k[i + radius] * p(y, clampi(x + i, w));
            tmp(y, x) = acc;
        }
    for (Eigen::Index y = 0; y < h; ++y)
        for (Eigen::Index x = 0; x < w; ++x) {
            double acc = 0.0;
            for (int i = -radius; i <= radius; ++i)
                acc += k[i + radius] * tmp(clampi(y + i, h), x);
            out(y, x) = acc;
        }
    return out;
}

PlaneD resize_bicubic(const PlaneD& p, Eigen::Index new_width, Eigen::Index new_height) {
    if (new_width <= 0 || new_height <= 0)
        throw InvalidArgument("resize_bicubic: target dimensions must be positive");
    if (new_width == p.cols() && new_height == p.rows())
        return p;
    const double sx = double(p.cols()) / double(new_width);
    const double sy = double(p.rows()) / double(new_height);
    PlaneD out(new_height, new_width);
    for (Eigen::Index y = 0; y < new_height; ++y)
        for (Eigen::Index x = 0; x < new_width; ++x)
            out(y, x) = sample_bicubic(p, (x + 0.5) * sx - 0.5, (y + 0.5) * sy - 0.5).value;
    return out;
}

}  // namespace msflow
