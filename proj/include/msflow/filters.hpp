#ifndef MSFLOW_FILTERS_HPP
#define MSFLOW_FILTERS_HPP

#include "msflow/types.hpp"

#include <vector>

namespace msflow {

/// 3x3 Sobel pair, weights {1,2,1} x {-1,0,1} / 4, replicate boundary.
/// Requires width, height >= 3.
GradientField sobel_gradient(const std::vector<PlaneD>& channels);
GradientField sobel_gradient(const PlaneD& plane);

/// Central differences (I[x+1] - I[x-1]) / 2 with replicate boundary; this
/// is the bicubic interpolant's derivative at the grid nodes.
void central_gradient(const PlaneD& plane, PlaneD& gx, PlaneD& gy);

/// Separable Gaussian smoothing, replicate boundary, kernel radius ceil(3 sigma).
PlaneD gaussian_blur(const PlaneD& plane, double sigma);

/// Bicubic resampling with pixel-centre alignment.
PlaneD resize_bicubic(const PlaneD& plane, Eigen::Index new_width, Eigen::Index new_height);

}  // namespace msflow

#endif  // MSFLOW_FILTERS_HPP
