#include "msflow/pyramid.hpp"

#include "msflow/filters.hpp"
#include "msflow/interpolation.hpp"

#include <algorithm>
#include <cmath>

namespace msflow {
namespace {

PlaneD downsample(const PlaneD& p, double sigma, Eigen::Index w, Eigen::Index h) {
    return resize_bicubic(gaussian_blur(p, sigma), w, h);
}

}  // namespace

double presmoothing_sigma(double factor) { return 0.5 * std::sqrt(1.0 / (factor * factor) - 1.0); }

std::vector<std::pair<Eigen::Index, Eigen::Index>> pyramid_dimensions(Eigen::Index width, Eigen::Index height,
                                                                      const PyramidParams& params) {
    if (!(params.factor > 0.0 && params.factor < 1.0))
        throw InvalidArgument("pyramid factor must lie in (0,1)");
    if (params.min_size < 1)
        throw InvalidArgument("pyramid min_size must be positive");
    if (std::min(width, height) < params.min_size)
        throw InvalidArgument("image is smaller than the pyramid min_size");

    std::vector<std::pair<Eigen::Index, Eigen::Index>> dims{{width, height}};
    for (;;) {
        const auto [w, h] = dims.back();
        const auto nw = static_cast<Eigen::Index>(std::ceil(w * params.factor));
        const auto nh = static_cast<Eigen::Index>(std::ceil(h * params.factor));
        if (std::min(nw, nh) < params.min_size || (nw == w && nh == h))
            break;
        dims.emplace_back(nw, nh);
    }
    return dims;
}

Pyramid build_pyramid(const MultispectralImage& image, const std::optional<WeightMap>& lambda,
                      const PyramidParams& params) {
    image.validate();
    if (lambda && (lambda->width() != image.width() || lambda->height() != image.height()))
        throw InvalidArgument("weight map and image dimensions differ");
    const auto dims = pyramid_dimensions(image.width(), image.height(), params);
    const double sigma = presmoothing_sigma(params.factor);

    Pyramid pyr;
    pyr.factor = params.factor;
    pyr.levels.push_back({image, lambda});
    for (std::size_t k = 1; k < dims.size(); ++k) {
        const auto [w, h] = dims[k];
        const PyramidLevel& prev = pyr.levels.back();
        PyramidLevel next;
        for (const auto& c : prev.image.visible)
            next.image.visible.push_back(downsample(c, sigma, w, h));
        if (prev.image.nir)
            next.image.nir = downsample(*prev.image.nir, sigma, w, h);
        if (prev.lambda)
            next.lambda = WeightMap{downsample(prev.lambda->lambda, sigma, w, h).cwiseMax(0.0).cwiseMin(1.0)};
        pyr.levels.push_back(std::move(next));
    }
    return pyr;
}

FlowField rescale_flow(const FlowField& flow, Eigen::Index new_width, Eigen::Index new_height) {
    if (new_width <= 0 || new_height <= 0)
        throw InvalidArgument("rescale_flow: target dimensions must be positive");
    if (new_width == flow.width() && new_height == flow.height())
        return flow;

    const Plane<bool> valid = flow.validity();
    const bool any_invalid = !valid.all();
    // Unknown vectors are zeroed for interpolation and re-marked afterwards.
    const PlaneD u = valid.select(flow.u, 0.0);
    const PlaneD v = valid.select(flow.v, 0.0);

    const double sx = double(flow.width()) / double(new_width);
    const double sy = double(flow.height()) / double(new_height);
    const double ru = double(new_width) / double(flow.width());
    const double rv = double(new_height) / double(flow.height());

    FlowField out(new_width, new_height);
    for (Eigen::Index y = 0; y < new_height; ++y)
        for (Eigen::Index x = 0; x < new_width; ++x) {
            const double px = (x + 0.5) * sx - 0.5;
            const double py = (y + 0.5) * sy - 0.5;
            if (any_invalid) {
                const auto x0 = static_cast<Eigen::Index>(std::floor(px));
                const auto y0 = static_cast<Eigen::Index>(std::floor(py));
                bool touches = false;
                for (Eigen::Index j = -1; j <= 2 && !touches; ++j)
                    for (Eigen::Index i = -1; i <= 2 && !touches; ++i)
                        touches = !valid(std::clamp<Eigen::Index>(y0 + j, 0, flow.height() - 1),
                                         std::clamp<Eigen::Index>(x0 + i, 0, flow.width() - 1));
                if (touches) {
                    out.set_unknown(y, x);
                    continue;
                }
            }
            const BicubicStencil s(flow.width(), flow.height(), px, py);
            out.u(y, x) = s.value(u) * ru;
            out.v(y, x) = s.value(v) * rv;
        }
    return out;
}

}  // namespace msflow
