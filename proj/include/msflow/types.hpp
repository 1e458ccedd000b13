#ifndef MSFLOW_TYPES_HPP
#define MSFLOW_TYPES_HPP

#include <Eigen/Core>

#include <cmath>
#include <cstddef>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace msflow {

/// Single-channel raster, indexed (row, col) = (y, x).
template <typename Scalar>
using Plane = Eigen::Array<Scalar, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

using PlaneD = Plane<double>;
using PlaneU8 = Plane<std::uint8_t>;

/// Thrown when an input violates a documented precondition.
class InvalidArgument : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// File access or format failures.
class IoError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Value written for unknown or occluded flow components.
inline constexpr double kUnknownFlow = 1e10;
/// Any component with magnitude above this is treated as invalid.
inline constexpr double kUnknownThreshold = 1e9;

inline bool is_valid_flow(double u, double v) {
    return std::abs(u) < kUnknownThreshold && std::abs(v) < kUnknownThreshold;
}

/// Aligned visible (1-3 channels) and optional NIR rasters in [0,1].
template <typename Scalar>
struct BasicMultispectralImage {
    std::vector<Plane<Scalar>> visible;
    std::optional<Plane<Scalar>> nir;

    Eigen::Index width() const { return visible.empty() ? (nir ? nir->cols() : 0) : visible.front().cols(); }
    Eigen::Index height() const { return visible.empty() ? (nir ? nir->rows() : 0) : visible.front().rows(); }
    bool has_nir() const { return nir.has_value(); }

    /// Throws InvalidArgument if channel dimensions disagree.
    void validate() const {
        for (const auto& c : visible)
            if (c.rows() != height() || c.cols() != width())
                throw InvalidArgument("visible channels differ in size");
        if (nir && (nir->rows() != height() || nir->cols() != width()))
            throw InvalidArgument("visible and nir dimensions differ");
    }
};

using MultispectralImage = BasicMultispectralImage<double>;

/// Dense displacement field; components beyond kUnknownThreshold mark unknown pixels.
template <typename Scalar>
struct BasicFlowField {
    Plane<Scalar> u;
    Plane<Scalar> v;

    BasicFlowField() = default;
    BasicFlowField(Eigen::Index width, Eigen::Index height)
        : u(Plane<Scalar>::Zero(height, width)), v(Plane<Scalar>::Zero(height, width)) {}
    BasicFlowField(Plane<Scalar> u_, Plane<Scalar> v_) : u(std::move(u_)), v(std::move(v_)) {
        if (u.rows() != v.rows() || u.cols() != v.cols())
            throw InvalidArgument("flow components differ in size");
    }

    static BasicFlowField constant(Eigen::Index width, Eigen::Index height, Scalar cu, Scalar cv) {
        return {Plane<Scalar>::Constant(height, width, cu), Plane<Scalar>::Constant(height, width, cv)};
    }

    Eigen::Index width() const { return u.cols(); }
    Eigen::Index height() const { return u.rows(); }

    bool valid(Eigen::Index y, Eigen::Index x) const {
        return is_valid_flow(static_cast<double>(u(y, x)), static_cast<double>(v(y, x)));
    }
    void set_unknown(Eigen::Index y, Eigen::Index x) {
        u(y, x) = static_cast<Scalar>(kUnknownFlow);
        v(y, x) = static_cast<Scalar>(kUnknownFlow);
    }

    Plane<bool> validity() const {
        Plane<bool> m(height(), width());
        for (Eigen::Index y = 0; y < height(); ++y)
            for (Eigen::Index x = 0; x < width(); ++x)
                m(y, x) = valid(y, x);
        return m;
    }

    bool operator==(const BasicFlowField& o) const {
        return u.rows() == o.u.rows() && u.cols() == o.u.cols() && (u == o.u).all() && (v == o.v).all();
    }
};

using FlowField = BasicFlowField<double>;

/// Per-channel spatial derivatives of a raster.
template <typename Scalar>
struct BasicGradientField {
    std::vector<Plane<Scalar>> gx;
    std::vector<Plane<Scalar>> gy;

    /// Euclidean norm over all channel gradients.
    Plane<Scalar> magnitude() const {
        Plane<Scalar> m = Plane<Scalar>::Zero(gx.front().rows(), gx.front().cols());
        for (std::size_t c = 0; c < gx.size(); ++c)
            m += gx[c].square() + gy[c].square();
        return m.sqrt();
    }
};

using GradientField = BasicGradientField<double>;

template <typename A, typename B>
bool same_size(const Eigen::DenseBase<A>& a, const Eigen::DenseBase<B>& b) {
    return a.rows() == b.rows() && a.cols() == b.cols();
}

}  // namespace msflow

#endif  // MSFLOW_TYPES_HPP
