#ifndef MSFLOW_SOLVER_HPP
#define MSFLOW_SOLVER_HPP

#include "msflow/pyramid.hpp"
#include "msflow/types.hpp"
#include "msflow/weightmap.hpp"

#include <Eigen/SparseCore>

#include <array>
#include <cmath>
#include <string>
#include <vector>

namespace msflow {

/// How the per-pixel NIR weight is chosen.
struct WeightMode {
    enum class Kind { detail_aware, fixed, rgb_only, nir_only };
    Kind kind = Kind::detail_aware;
    double fixed_lambda = 0.5;

    static WeightMode detail_aware() { return {Kind::detail_aware, 0.5}; }
    static WeightMode fixed(double lambda) { return {Kind::fixed, lambda}; }
    static WeightMode rgb_only() { return {Kind::rgb_only, 0.0}; }
    static WeightMode nir_only() { return {Kind::nir_only, 1.0}; }

    bool needs_nir() const;
    /// "da", "fixed:<l>", "rgb", "nir"
    std::string to_string() const;
    static WeightMode parse(const std::string& text);
};

enum class SorOrdering { red_black, sequential };

struct SolverParams {
    double gamma = 1.0;    // smoothness weight
    double theta = 0.5;    // gradient-constancy weight within the visible term
    double epsilon = 0.001;
    double pyramid_factor = 0.75;
    Eigen::Index min_size = 16;
    int outer_iters = 5;
    int inner_iters = 5;
    int sor_iters = 30;
    double sor_omega = 1.9;
    double sor_tol = 1e-4;
    SorOrdering sor_ordering = SorOrdering::red_black;
    WeightMode mode;
    LambdaParams lambda;
    bool recompute_lambda_per_level = false;
    /// Step halvings tried when an outer increment raises the energy; -1 always takes the full step.
    int max_step_halvings = 3;

    /// Throws InvalidArgument on out-of-range fields.
    void validate() const;
};

/// Robust penalty phi(s2) = sqrt(s2 + eps^2) and its derivative d phi / d s2.
inline double robust_penalty(double s2, double eps) { return std::sqrt(s2 + eps * eps); }
inline double robust_penalty_derivative(double s2, double eps) { return 0.5 / std::sqrt(s2 + eps * eps); }

/// Pixel sums of the energy terms. e_visible and e_nir are unweighted;
/// the *_weighted fields carry the per-pixel (1 - lambda) and lambda factors, so
/// e_total = e_visible_weighted + e_nir_weighted + gamma * e_smooth.
struct EnergyBreakdown {
    double e_visible = 0.0;
    double e_nir = 0.0;
    double e_smooth = 0.0;
    double e_visible_weighted = 0.0;
    double e_nir_weighted = 0.0;
    double e_total = 0.0;
};

struct WarpResult {
    MultispectralImage image;
    Plane<bool> out_of_bounds;
};

/// Samples I2 at x + w(x). Pixels whose sample position leaves the image are flagged.
WarpResult warp_image(const MultispectralImage& image2, const FlowField& flow);

/// Per-pixel lambda for a mode; detail_aware derives it from frame 1.
WeightMap make_weight_map(const MultispectralImage& frame1, const SolverParams& params);

EnergyBreakdown evaluate_energy(const MultispectralImage& frame1, const MultispectralImage& frame2,
                                const FlowField& flow, const WeightMap& lambda, const SolverParams& params);

/// One linearized constraint r(dw) = r0 + ax * du + ay * dv per pixel.
struct LinearConstraint {
    PlaneD r0, ax, ay;
};

/// Data terms linearized about a flow: visible intensity per channel,
/// visible gradient (x and y per channel) and NIR intensity. Each group
/// shares one robust penalty over the sum of its squared residuals.
struct DataLinearization {
    std::vector<LinearConstraint> intensity;
    std::vector<LinearConstraint> gradient;
    std::vector<LinearConstraint> nir;
    Plane<bool> out_of_bounds;

    Eigen::Index width() const { return out_of_bounds.cols(); }
    Eigen::Index height() const { return out_of_bounds.rows(); }
};

DataLinearization linearize_data(const MultispectralImage& frame1, const MultispectralImage& frame2,
                                 const FlowField& flow, bool with_nir);

/// Analytic partials of the unweighted per-pixel data energies at the
/// linearization point: {d e_visible/du, d e_visible/dv, d e_nir/du, d e_nir/dv}.
std::array<double, 4> data_energy_gradient(const DataLinearization& lin, Eigen::Index y, Eigen::Index x,
                                           const SolverParams& params);

/// Coupled 5-point system over the interleaved unknowns (du, dv):
///   (A_p + sum_e c_e) dw_p - sum_e c_e dw_q = b_p
/// where A_p = [a11 a12; a12 a22] and c_e are the smoothness couplings to
/// the east (x+1) and south (y+1) neighbours.
struct FlowSystem {
    PlaneD a11, a12, a22;
    PlaneD b1, b2;
    PlaneD east, south;

    Eigen::Index width() const { return a11.cols(); }
    Eigen::Index height() const { return a11.rows(); }

    static FlowSystem zeros(Eigen::Index width, Eigen::Index height);

    /// Unknown 2*(y*W + x) is du, 2*(y*W + x) + 1 is dv.
    Eigen::SparseMatrix<double> matrix() const;
    Eigen::VectorXd rhs() const;
};

/// Builds the system for the increment dw about base flow w0, with the
/// robust weights lagged at w0 + dw_lag.
FlowSystem assemble_system(const DataLinearization& lin, const FlowField& w0, const PlaneD& du_lag,
                           const PlaneD& dv_lag, const WeightMap& lambda, const SolverParams& params);

struct SorOptions {
    double omega = 1.9;
    int max_iters = 30;
    double tol = 1e-4;  // relative to the initial residual norm
    SorOrdering ordering = SorOrdering::red_black;
};

struct SorReport {
    int iterations = 0;
    double initial_residual = 0.0;
    double final_residual = 0.0;
};

/// Pointwise SOR on a FlowSystem; du and dv hold the initial guess and receive the result.
SorReport sor_solve(const FlowSystem& system, PlaneD& du, PlaneD& dv, const SorOptions& options);

/// Sequential SOR on a general sparse system with nonzero diagonal.
SorReport sor_solve(const Eigen::SparseMatrix<double, Eigen::RowMajor>& a, const Eigen::VectorXd& b,
                    Eigen::VectorXd& x, const SorOptions& options);

struct LevelTrace {
    std::size_t level = 0;
    Eigen::Index width = 0;
    Eigen::Index height = 0;
    /// energies[0] at the initial flow, energies[k] after outer iteration k.
    std::vector<EnergyBreakdown> energies;
};

struct SolveTrace {
    std::vector<LevelTrace> levels;
};

/// Nested fixed-point iterations at one pyramid level.
FlowField solve_level(const MultispectralImage& frame1, const MultispectralImage& frame2, const WeightMap& lambda,
                      const FlowField& w_init, const SolverParams& params, LevelTrace* trace = nullptr);

/// Full coarse-to-fine estimate; the result is dense.
FlowField compute_flow(const MultispectralImage& frame1, const MultispectralImage& frame2,
                       const SolverParams& params, SolveTrace* trace = nullptr);

}  // namespace msflow

#endif  // MSFLOW_SOLVER_HPP
