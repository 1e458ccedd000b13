#ifndef MSFLOW_PYRAMID_HPP
#define MSFLOW_PYRAMID_HPP

#include "msflow/types.hpp"
#include "msflow/weightmap.hpp"

#include <optional>
#include <vector>

namespace msflow {

struct PyramidParams {
    double factor = 0.75;
    Eigen::Index min_size = 16;  // shorter side of the coarsest level
};

struct PyramidLevel {
    MultispectralImage image;
    std::optional<WeightMap> lambda;
};

/// Level 0 is the input resolution; the coarsest level is last.
struct Pyramid {
    std::vector<PyramidLevel> levels;
    double factor = 0.75;

    std::size_t size() const { return levels.size(); }
};

/// Anti-aliasing sigma applied before each resampling step.
double presmoothing_sigma(double factor);

/// Dimensions of every level for a base size: ceil(previous * factor) until
/// the shorter side would drop below min_size.
std::vector<std::pair<Eigen::Index, Eigen::Index>> pyramid_dimensions(Eigen::Index width, Eigen::Index height,
                                                                      const PyramidParams& params);

/// Gaussian pre-smoothing then bicubic resampling per level, applied to
/// every channel and (when present) the weight map, which is re-clamped to [0,1].
Pyramid build_pyramid(const MultispectralImage& image, const std::optional<WeightMap>& lambda,
                      const PyramidParams& params = {});

/// Resamples u and v to a new grid and rescales them into target pixel
/// units. Target pixels whose stencil touches an unknown vector are unknown.
FlowField rescale_flow(const FlowField& flow, Eigen::Index new_width, Eigen::Index new_height);

}  // namespace msflow

#endif  // MSFLOW_PYRAMID_HPP
