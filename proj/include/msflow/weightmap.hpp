#ifndef MSFLOW_WEIGHTMAP_HPP
#define MSFLOW_WEIGHTMAP_HPP

#include "msflow/types.hpp"

#include <filesystem>
#include <vector>

namespace msflow {

/// Per-pixel weight of the NIR data term; 1 - lambda weights the visible term.
struct WeightMap {
    PlaneD lambda;

    Eigen::Index width() const { return lambda.cols(); }
    Eigen::Index height() const { return lambda.rows(); }

    static WeightMap constant(Eigen::Index width, Eigen::Index height, double value) {
        return {PlaneD::Constant(height, width, value)};
    }
};

struct LambdaParams {
    double steepness = 10.0;  // a
    double midpoint = 0.5;    // b
};

/// Ratio below which |grad V| + |grad N| counts as flat; the weight falls back to 0.5 there.
inline constexpr double kFlatGradient = 1e-8;

/// Logistic weight of the NIR share of the Sobel gradient magnitude:
///   lambda = 1 / (1 + exp(-a (|dN| / (|dV| + |dN|) - b)))
double lambda_from_gradients(double grad_visible, double grad_nir, const LambdaParams& params = {});

/// Detail-aware weight map from the first frame's visible channels and NIR raster.
WeightMap compute_lambda(const std::vector<PlaneD>& visible, const PlaneD& nir, const LambdaParams& params = {});

/// Debug raster: lambda * 255 rounded to nearest.
void write_lambda_map(const WeightMap& map, const std::filesystem::path& path);

}  // namespace msflow

#endif  // MSFLOW_WEIGHTMAP_HPP
