#ifndef MSFLOW_GT_HPP
#define MSFLOW_GT_HPP

#include "msflow/types.hpp"

#include <cstdint>

namespace msflow::gt {

struct GtConfig {
    int m_p = 5;                   // search half-window in pixels
    double fb_threshold = 0.04;    // normalized NIR intensity
    int fb_radius = 2;             // comparison region half-size
    double fb_max_roundtrip = 1.0; // px; negative disables the position check
    double subpixel_step = 0.05;   // 1/20 px
    int downsample_factor = 3;
    int lk_window = 5;
    int lk_max_iters = 5;

    void validate() const;
};

struct FbParams {
    double threshold = 0.04;
    int radius = 2;
    double max_roundtrip = 1.0;
};

inline constexpr int kDescriptorLength = 128;
inline constexpr int kDescriptorPatch = 16;

/// One 128-d upright descriptor per pixel, stored column-wise.
struct DescriptorField {
    Eigen::Index width = 0;
    Eigen::Index height = 0;
    Eigen::Matrix<float, kDescriptorLength, Eigen::Dynamic> data;

    auto descriptor(Eigen::Index y, Eigen::Index x) const { return data.col(y * width + x); }
};

/// Dense SIFT-style descriptors: 4x4 cells over a 16x16 patch, 8 orientation
/// bins, Gaussian window, trilinear binning, normalize / clamp 0.2 / renormalize.
/// Constant patches give the zero vector.
DescriptorField dense_descriptor(const PlaneD& nir);

/// Squared Euclidean descriptor distance, accumulated in double in index order.
double descriptor_distance2(const DescriptorField& a, Eigen::Index ay, Eigen::Index ax, const DescriptorField& b,
                            Eigen::Index by, Eigen::Index bx);

/// Exhaustive best match over the (2 m_p + 1)^2 integer offsets clipped at
/// the border. Ties go to the smaller offset magnitude, then row-major order.
FlowField match_window(const DescriptorField& desc1, const DescriptorField& desc2, int m_p);

struct FbResult {
    FlowField flow;      // forward flow with rejected pixels set unknown
    PlaneU8 occlusion;   // 255 = rejected, 0 = kept
};

/// Forward-backward check on integer flows. For p -> q = p + w_f(p) -> r = q + w_b(q),
/// p is rejected when the mean sampling-insensitive intensity difference between
/// the nir1 region around r and the nir2 region around q exceeds the threshold,
/// or when r lands more than max_roundtrip pixels (Chebyshev) away from p.
FbResult fb_consistency(const FlowField& forward, const FlowField& backward, const PlaneD& nir1, const PlaneD& nir2,
                        const FbParams& params = {});

/// Distance of v from the range spanned by im(y,x) and its half-way samples
/// towards the four neighbours; zero when v lies inside.
double sampling_insensitive_difference(const PlaneD& im, Eigen::Index y, Eigen::Index x, double v);

/// Lucas-Kanade refinement of an integer flow on a window around each pixel,
/// quantized to multiples of the subpixel step. Unknown pixels pass through.
FlowField lk_subpixel(const PlaneD& nir1, const PlaneD& nir2, const FlowField& integer_flow, const GtConfig& config);

/// Block mean of valid vectors divided by factor; empty blocks become unknown.
/// Output size is floor(input / factor).
FlowField downsample_flow(const FlowField& flow, int factor);

struct GtResult {
    FlowField flow;             // after downsampling
    PlaneU8 occlusion;          // at output resolution
    FlowField full_resolution;  // refined flow before downsampling
    PlaneU8 full_occlusion;
};

/// descriptors -> window matching both ways -> forward-backward check -> LK -> downsampling.
GtResult build_ground_truth(const PlaneD& nir1, const PlaneD& nir2, const GtConfig& config);

/// Joint entropy in bits of per-patch means of two aligned channels.
/// Sampling is seeded; counts are summed in sorted order so H(A,B) == H(B,A) exactly.
double joint_entropy(const PlaneD& a, const PlaneD& b, int n_patches, int patch, int bins, std::uint64_t seed);

}  // namespace msflow::gt

#endif  // MSFLOW_GT_HPP
