#ifndef MSFLOW_SYNTH_HPP
#define MSFLOW_SYNTH_HPP

#include "msflow/types.hpp"

#include <cstdint>
#include <random>
#include <vector>

namespace msflow::synth {

/// Smooth forward displacement w(x) = translation + rotation about centre + Gaussian bump.
struct WarpSpec {
    double tx = 0.0, ty = 0.0;
    double rotation_deg = 0.0;
    double bump_amplitude = 0.0;  // peak displacement in pixels
    double bump_sigma = 40.0;
    double bump_dir_x = 1.0, bump_dir_y = 0.0;
    // Centre of rotation and bump; negative means image centre.
    double cx = -1.0, cy = -1.0;

    static WarpSpec translation(double tx, double ty) {
        WarpSpec w;
        w.tx = tx;
        w.ty = ty;
        return w;
    }
};

/// Evaluates a WarpSpec on a w x h frame.
class Warp {
public:
    Warp(const WarpSpec& spec, Eigen::Index width, Eigen::Index height);

    /// Displacement at frame-1 position (x, y).
    std::pair<double, double> displacement(double x, double y) const;
    /// Frame-1 position mapped onto (x2, y2) by x + w(x); fixed-point inversion.
    std::pair<double, double> inverse(double x2, double y2) const;
    /// Exact flow on the pixel grid.
    FlowField field() const;
    /// Largest displacement magnitude over the pixel grid.
    double max_magnitude() const;

private:
    WarpSpec spec_;
    Eigen::Index width_, height_;
    double cx_, cy_, cos_, sin_;
};

/// Band-limited texture: a normalised sum of random plane waves, evaluable anywhere.
class Texture {
public:
    Texture(std::mt19937_64& rng, int components, double min_period, double max_period);
    /// Value in [0,1], mean 0.5.
    double operator()(double x, double y) const;

private:
    struct Wave {
        double kx, ky, phase;
    };
    std::vector<Wave> waves_;
    double scale_;
};

/// Dense dye-like pattern: jittered-grid Gaussian spots, value in [0,1].
class Speckle {
public:
    Speckle(std::mt19937_64& rng, double xmin, double ymin, double xmax, double ymax, double spacing, double radius);
    double operator()(double x, double y) const;

private:
    struct Spot {
        double x, y, amplitude;
    };
    double x0_, y0_, spacing_, radius_;
    Eigen::Index nx_, ny_;
    std::vector<Spot> spots_;  // one per grid cell, row-major
};

enum class Layout {
    uniform,  // both channels textured everywhere
    split,    // object-left half: flat visible, textured NIR; right half: textured visible, flat NIR
};

struct SceneParams {
    Eigen::Index width = 256;
    Eigen::Index height = 192;
    std::uint64_t seed = 1;
    Layout layout = Layout::uniform;
    int texture_components = 48;
    double min_period = 6.0;
    double max_period = 48.0;
    double visible_contrast = 1.0;
    double nir_base_contrast = 0.3;  // share of the scene texture seen in NIR
    double speckle_contrast = 1.0;   // 0 disables the dye layer
    double speckle_spacing = 4.0;
    double speckle_radius = 1.0;
    double shadow_strength = 0.0;     // static soft shadow on the visible channels (camera frame)
    double visible_blur_sigma = 0.0;  // blur applied to frame-2 visible channels only
    WarpSpec warp;
};

struct SyntheticPair {
    MultispectralImage frame1;
    MultispectralImage frame2;
    FlowField ground_truth;
};

/// Renders a seeded RGB-NIR pair under the configured warp; frame2(x + w(x)) = frame1(x).
SyntheticPair make_pair(const SceneParams& params);

/// Gray channel as the mean of the visible channels.
PlaneD gray(const MultispectralImage& image);

}  // namespace msflow::synth

#endif  // MSFLOW_SYNTH_HPP
