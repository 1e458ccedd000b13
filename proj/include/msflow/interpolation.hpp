#ifndef MSFLOW_INTERPOLATION_HPP
#define MSFLOW_INTERPOLATION_HPP

#include "msflow/types.hpp"

#include <algorithm>
#include <array>
#include <cmath>

namespace msflow {

/// Catmull-Rom (a = -0.5) weights for taps at offsets -1, 0, 1, 2 and their derivatives in t.
struct CubicWeights {
    std::array<double, 4> w;
    std::array<double, 4> dw;

    explicit CubicWeights(double t) {
        const double t2 = t * t;
        const double t3 = t2 * t;
        w = {0.5 * (-t3 + 2 * t2 - t), 0.5 * (3 * t3 - 5 * t2 + 2), 0.5 * (-3 * t3 + 4 * t2 + t), 0.5 * (t3 - t2)};
        dw = {0.5 * (-3 * t2 + 4 * t - 1), 0.5 * (9 * t2 - 10 * t), 0.5 * (-9 * t2 + 8 * t + 1), 0.5 * (3 * t2 - 2 * t)};
    }
};

/// Precomputed 4x4 clamped-edge stencil for one sample position; reusable across planes of equal size.
class BicubicStencil {
public:
    BicubicStencil(Eigen::Index width, Eigen::Index height, double x, double y)
        : out_of_bounds_(!(x >= 0.0 && y >= 0.0 && x <= double(width - 1) && y <= double(height - 1))),
          wx_(x - std::floor(x)),
          wy_(y - std::floor(y)) {
        const auto x0 = static_cast<Eigen::Index>(std::floor(x));
        const auto y0 = static_cast<Eigen::Index>(std::floor(y));
        for (int k = 0; k < 4; ++k) {
            xs_[k] = std::clamp<Eigen::Index>(x0 - 1 + k, 0, width - 1);
            ys_[k] = std::clamp<Eigen::Index>(y0 - 1 + k, 0, height - 1);
        }
    }

    bool out_of_bounds() const { return out_of_bounds_; }

    template <typename Derived>
    double value(const Eigen::DenseBase<Derived>& p) const {
        double acc = 0.0;
        for (int j = 0; j < 4; ++j) {
            double row = 0.0;
            for (int i = 0; i < 4; ++i)
                row += wx_.w[i] * p(ys_[j], xs_[i]);
            acc += wy_.w[j] * row;
        }
        return acc;
    }

    /// Value and analytic partial derivatives of the interpolant.
    template <typename Derived>
    std::array<double, 3> value_and_gradient(const Eigen::DenseBase<Derived>& p) const {
        double v = 0.0, gx = 0.0, gy = 0.0;
        for (int j = 0; j < 4; ++j) {
            double row = 0.0, drow = 0.0;
            for (int i = 0; i < 4; ++i) {
                const double s = p(ys_[j], xs_[i]);
                row += wx_.w[i] * s;
                drow += wx_.dw[i] * s;
            }
            v += wy_.w[j] * row;
            gx += wy_.w[j] * drow;
            gy += wy_.dw[j] * row;
        }
        return {v, gx, gy};
    }

private:
    bool out_of_bounds_;
    CubicWeights wx_;
    CubicWeights wy_;
    std::array<Eigen::Index, 4> xs_{};
    std::array<Eigen::Index, 4> ys_{};
};

struct BicubicSample {
    double value;
    bool out_of_bounds;
};

/// Clamped-edge bicubic sample of a plane at real coordinates (x, y).
template <typename Derived>
BicubicSample sample_bicubic(const Eigen::DenseBase<Derived>& plane, double x, double y) {
    const BicubicStencil s(plane.cols(), plane.rows(), x, y);
    return {s.value(plane), s.out_of_bounds()};
}

/// Per-channel bicubic sample; the flag is shared across channels.
template <typename Scalar>
std::vector<double> sample_bicubic(const std::vector<Plane<Scalar>>& channels, double x, double y, bool* out_of_bounds) {
    std::vector<double> out;
    out.reserve(channels.size());
    const BicubicStencil s(channels.front().cols(), channels.front().rows(), x, y);
    for (const auto& c : channels)
        out.push_back(s.value(c));
    if (out_of_bounds)
        *out_of_bounds = s.out_of_bounds();
    return out;
}

}  // namespace msflow

#endif  // MSFLOW_INTERPOLATION_HPP
