#include "msflow/weightmap.hpp"

#include "msflow/filters.hpp"
#include "msflow/io.hpp"

#include <cmath>

namespace msflow {

double lambda_from_gradients(double grad_visible, double grad_nir, const LambdaParams& params) {
    const double denom = grad_visible + grad_nir;
    const double ratio = denom < kFlatGradient ? params.midpoint : grad_nir / denom;
    return 1.0 / (1.0 + std::exp(-params.steepness * (ratio - params.midpoint)));
}

WeightMap compute_lambda(const std::vector<PlaneD>& visible, const PlaneD& nir, const LambdaParams& params) {
    if (!(params.steepness > 0.0))
        throw InvalidArgument("compute_lambda: steepness must be positive");
    if (!(params.midpoint >= 0.0 && params.midpoint <= 1.0))
        throw InvalidArgument("compute_lambda: midpoint must lie in [0,1]");
    if (visible.empty())
        throw InvalidArgument("compute_lambda: no visible channels");
    for (const auto& c : visible)
        if (!same_size(c, nir))
            throw InvalidArgument("compute_lambda: visible and nir dimensions differ");

    const PlaneD mag_v = sobel_gradient(visible).magnitude();
    const PlaneD mag_n = sobel_gradient(nir).magnitude();
    WeightMap out{PlaneD(nir.rows(), nir.cols())};
    for (Eigen::Index i = 0; i < out.lambda.size(); ++i)
        out.lambda.data()[i] = lambda_from_gradients(mag_v.data()[i], mag_n.data()[i], params);
    return out;
}

void write_lambda_map(const WeightMap& map, const std::filesystem::path& path) {
    write_pnm(path, {map.lambda}, 8);
}

}  // namespace msflow
