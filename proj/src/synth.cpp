#include "msflow/synth.hpp"

#include "msflow/filters.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <numbers>

namespace msflow::synth {

Warp::Warp(const WarpSpec& spec, Eigen::Index width, Eigen::Index height)
    : spec_(spec),
      width_(width),
      height_(height),
      cx_(spec.cx < 0 ? 0.5 * (width - 1) : spec.cx),
      cy_(spec.cy < 0 ? 0.5 * (height - 1) : spec.cy),
      cos_(std::cos(spec.rotation_deg * std::numbers::pi / 180.0)),
      sin_(std::sin(spec.rotation_deg * std::numbers::pi / 180.0)) {}

std::pair<double, double> Warp::displacement(double x, double y) const {
    const double rx = x - cx_, ry = y - cy_;
    double u = spec_.tx + (cos_ * rx - sin_ * ry) - rx;
    double v = spec_.ty + (sin_ * rx + cos_ * ry) - ry;
    if (spec_.bump_amplitude != 0.0) {
        const double g = spec_.bump_amplitude * std::exp(-(rx * rx + ry * ry) / (2.0 * spec_.bump_sigma * spec_.bump_sigma));
        const double n = std::hypot(spec_.bump_dir_x, spec_.bump_dir_y);
        u += g * spec_.bump_dir_x / n;
        v += g * spec_.bump_dir_y / n;
    }
    return {u, v};
}

std::pair<double, double> Warp::inverse(double x2, double y2) const {
    double x = x2, y = y2;
    for (int it = 0; it < 100; ++it) {
        const auto [u, v] = displacement(x, y);
        const double nx = x2 - u, ny = y2 - v;
        const double step = std::abs(nx - x) + std::abs(ny - y);
        x = nx;
        y = ny;
        if (step < 1e-13)
            break;
    }
    return {x, y};
}

FlowField Warp::field() const {
    FlowField f(width_, height_);
    for (Eigen::Index y = 0; y < height_; ++y)
        for (Eigen::Index x = 0; x < width_; ++x) {
            const auto [u, v] = displacement(double(x), double(y));
            f.u(y, x) = u;
            f.v(y, x) = v;
        }
    return f;
}

double Warp::max_magnitude() const {
    const FlowField f = field();
    return (f.u.square() + f.v.square()).sqrt().maxCoeff();
}

Texture::Texture(std::mt19937_64& rng, int components, double min_period, double max_period) {
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    const double two_pi = 2.0 * std::numbers::pi;
    for (int k = 0; k < components; ++k) {
        // Log-uniform period, uniform orientation.
        const double period = min_period * std::pow(max_period / min_period, unit(rng));
        const double angle = two_pi * unit(rng);
        const double f = two_pi / period;
        waves_.push_back({f * std::cos(angle), f * std::sin(angle), two_pi * unit(rng)});
    }
    scale_ = 0.15 / std::sqrt(0.5 * std::max(components, 1));
}

double Texture::operator()(double x, double y) const {
    double s = 0.0;
    for (const auto& w : waves_)
        s += std::sin(w.kx * x + w.ky * y + w.phase);
    return std::clamp(0.5 + scale_ * s, 0.0, 1.0);
}

Speckle::Speckle(std::mt19937_64& rng, double xmin, double ymin, double xmax, double ymax, double spacing,
                 double radius)
    : x0_(xmin), y0_(ymin), spacing_(spacing), radius_(radius) {
    nx_ = static_cast<Eigen::Index>(std::ceil((xmax - xmin) / spacing)) + 1;
    ny_ = static_cast<Eigen::Index>(std::ceil((ymax - ymin) / spacing)) + 1;
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    spots_.reserve(static_cast<std::size_t>(nx_ * ny_));
    for (Eigen::Index j = 0; j < ny_; ++j)
        for (Eigen::Index i = 0; i < nx_; ++i) {
            const double sx = x0_ + (i + unit(rng)) * spacing;
            const double sy = y0_ + (j + unit(rng)) * spacing;
            spots_.push_back({sx, sy, 0.5 + 0.5 * unit(rng)});
        }
}

double Speckle::operator()(double x, double y) const {
    const double reach = 4.0 * radius_;
    const auto i0 = std::max<Eigen::Index>(0, static_cast<Eigen::Index>(std::floor((x - reach - x0_) / spacing_)));
    const auto i1 = std::min<Eigen::Index>(nx_ - 1, static_cast<Eigen::Index>(std::floor((x + reach - x0_) / spacing_)));
    const auto j0 = std::max<Eigen::Index>(0, static_cast<Eigen::Index>(std::floor((y - reach - y0_) / spacing_)));
    const auto j1 = std::min<Eigen::Index>(ny_ - 1, static_cast<Eigen::Index>(std::floor((y + reach - y0_) / spacing_)));
    double s = 0.0;
    const double inv = 1.0 / (2.0 * radius_ * radius_);
    for (Eigen::Index j = j0; j <= j1; ++j)
        for (Eigen::Index i = i0; i <= i1; ++i) {
            const Spot& p = spots_[static_cast<std::size_t>(j * nx_ + i)];
            const double dx = x - p.x, dy = y - p.y;
            s += p.amplitude * std::exp(-(dx * dx + dy * dy) * inv);
        }
    return std::min(1.0, s);
}

namespace {

struct Scene {
    Texture base;
    Texture tint;
    Speckle speckle;
    const SceneParams& p;

    // Split layout: object-space half is decided against the frame-1 centre column.
    bool left_half(double ox) const { return ox < 0.5 * (p.width - 1); }

    std::array<double, 4> object_colour(double ox, double oy) const {
        const double t = base(ox, oy);
        const double c = tint(ox, oy);
        double vis_c = p.visible_contrast;
        double nir_tex = p.nir_base_contrast;
        double dye = p.speckle_contrast;
        if (p.layout == Layout::split) {
            if (left_half(ox)) {
                vis_c = 0.0;
            } else {
                nir_tex = 0.0;
                dye = 0.0;
            }
        }
        const double r = 0.5 + vis_c * (0.8 * (t - 0.5) + 0.2 * (c - 0.5));
        const double g = 0.5 + vis_c * (t - 0.5);
        const double b = 0.5 + vis_c * (0.8 * (t - 0.5) - 0.2 * (c - 0.5));
        double n = 0.6 + nir_tex * (t - 0.5);
        if (dye > 0.0)
            n -= 0.45 * dye * speckle(ox, oy);
        return {std::clamp(r, 0.0, 1.0), std::clamp(g, 0.0, 1.0), std::clamp(b, 0.0, 1.0), std::clamp(n, 0.0, 1.0)};
    }

    // Static shadow in the camera frame: soft disc over the upper-left quadrant.
    double shadow(double x, double y) const {
        if (p.shadow_strength <= 0.0)
            return 1.0;
        const double cx = 0.25 * p.width, cy = 0.5 * p.height;
        const double r = 0.2 * std::min(p.width, p.height);
        const double d = std::hypot(x - cx, y - cy);
        const double s = 1.0 / (1.0 + std::exp((d - r) / (0.15 * r)));
        return 1.0 - p.shadow_strength * s;
    }
};

MultispectralImage blank(const SceneParams& p) {
    MultispectralImage img;
    for (int c = 0; c < 3; ++c)
        img.visible.emplace_back(p.height, p.width);
    img.nir = PlaneD(p.height, p.width);
    return img;
}

}  // namespace

SyntheticPair make_pair(const SceneParams& p) {
    if (p.width < 4 || p.height < 4)
        throw InvalidArgument("synthetic scene must be at least 4x4");
    std::mt19937_64 rng(p.seed);
    const Warp warp(p.warp, p.width, p.height);
    const double margin = 60.0 + warp.max_magnitude();
    Texture base(rng, p.texture_components, p.min_period, p.max_period);
    Texture tint(rng, p.texture_components, p.min_period, p.max_period);
    Speckle speckle(rng, -margin, -margin, p.width + margin, p.height + margin, p.speckle_spacing, p.speckle_radius);
    const Scene scene{std::move(base), std::move(tint), std::move(speckle), p};

    SyntheticPair out{blank(p), blank(p), warp.field()};
    for (Eigen::Index y = 0; y < p.height; ++y)
        for (Eigen::Index x = 0; x < p.width; ++x) {
            const double sh = scene.shadow(double(x), double(y));
            const auto c1 = scene.object_colour(double(x), double(y));
            const auto [ox, oy] = warp.inverse(double(x), double(y));
            const auto c2 = scene.object_colour(ox, oy);
            for (int c = 0; c < 3; ++c) {
                out.frame1.visible[c](y, x) = c1[c] * sh;
                out.frame2.visible[c](y, x) = c2[c] * sh;
            }
            (*out.frame1.nir)(y, x) = c1[3];
            (*out.frame2.nir)(y, x) = c2[3];
        }
    if (p.visible_blur_sigma > 0.0)
        for (auto& c : out.frame2.visible)
            c = gaussian_blur(c, p.visible_blur_sigma);
    return out;
}

PlaneD gray(const MultispectralImage& image) {
    PlaneD g = PlaneD::Zero(image.height(), image.width());
    for (const auto& c : image.visible)
        g += c;
    return g / double(image.visible.size());
}

}  // namespace msflow::synth
