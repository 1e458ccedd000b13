#include "msflow/solver.hpp"

#include "msflow/filters.hpp"
#include "msflow/interpolation.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace msflow {

bool WeightMode::needs_nir() const {
    switch (kind) {
    case Kind::detail_aware:
    case Kind::nir_only:
        return true;
    case Kind::fixed:
        return fixed_lambda > 0.0;
    case Kind::rgb_only:
        return false;
    }
    return true;
}

std::string WeightMode::to_string() const {
    switch (kind) {
    case Kind::detail_aware:
        return "da";
    case Kind::rgb_only:
        return "rgb";
    case Kind::nir_only:
        return "nir";
    case Kind::fixed: {
        std::ostringstream os;
        os << "fixed:" << fixed_lambda;
        return os.str();
    }
    }
    return "da";
}

WeightMode WeightMode::parse(const std::string& text) {
    if (text == "da" || text == "detail_aware")
        return detail_aware();
    if (text == "rgb" || text == "rgb_only")
        return rgb_only();
    if (text == "nir" || text == "nir_only")
        return nir_only();
    if (text.rfind("fixed:", 0) == 0) {
        double value = 0.0;
        try {
            std::size_t used = 0;
            value = std::stod(text.substr(6), &used);
            if (used != text.size() - 6)
                throw InvalidArgument("");
        } catch (const std::exception&) {
            throw InvalidArgument("bad fixed weight in mode '" + text + "'");
        }
        if (!(value >= 0.0 && value <= 1.0))
            throw InvalidArgument("fixed weight must lie in [0,1]");
        return fixed(value);
    }
    throw InvalidArgument("unknown mode '" + text + "' (expected da, fixed:<l>, rgb or nir)");
}

void SolverParams::validate() const {
    if (!(std::isfinite(gamma) && gamma > 0.0))
        throw InvalidArgument("gamma must be positive and finite");
    if (!(theta >= 0.0 && theta <= 1.0))
        throw InvalidArgument("theta must lie in [0,1]");
    if (!(std::isfinite(epsilon) && epsilon > 0.0))
        throw InvalidArgument("epsilon must be positive");
    if (!(pyramid_factor > 0.0 && pyramid_factor < 1.0))
        throw InvalidArgument("pyramid factor must lie in (0,1)");
    if (min_size < 1)
        throw InvalidArgument("min_size must be positive");
    if (outer_iters < 1 || inner_iters < 1 || sor_iters < 1)
        throw InvalidArgument("iteration counts must be positive");
    if (max_step_halvings < -1)
        throw InvalidArgument("max_step_halvings must be -1 or more");
    if (!(sor_omega > 0.0 && sor_omega < 2.0))
        throw InvalidArgument("sor_omega must lie in (0,2)");
    if (!(std::isfinite(sor_tol) && sor_tol >= 0.0))
        throw InvalidArgument("sor_tol must be non-negative");
    if (mode.kind == WeightMode::Kind::fixed && !(mode.fixed_lambda >= 0.0 && mode.fixed_lambda <= 1.0))
        throw InvalidArgument("fixed weight must lie in [0,1]");
}

namespace {

void check_pair(const MultispectralImage& a, const MultispectralImage& b) {
    a.validate();
    b.validate();
    if (a.width() != b.width() || a.height() != b.height())
        throw InvalidArgument("frame dimensions differ");
    if (a.visible.size() != b.visible.size())
        throw InvalidArgument("frames have different visible channel counts");
}

void check_flow(const MultispectralImage& img, const FlowField& flow) {
    if (flow.width() != img.width() || flow.height() != img.height())
        throw InvalidArgument("flow and image dimensions differ");
}

bool needs_nir_term(const WeightMap& lambda) { return lambda.lambda.size() > 0 && lambda.lambda.maxCoeff() > 0.0; }

// Gradient images of both frames' visible channels, computed once per level.
struct GradientCache {
    std::vector<PlaneD> g1x, g1y, g2x, g2y;

    GradientCache(const MultispectralImage& f1, const MultispectralImage& f2) {
        const auto n = f1.visible.size();
        g1x.resize(n);
        g1y.resize(n);
        g2x.resize(n);
        g2y.resize(n);
        for (std::size_t c = 0; c < n; ++c) {
            central_gradient(f1.visible[c], g1x[c], g1y[c]);
            central_gradient(f2.visible[c], g2x[c], g2y[c]);
        }
    }
};

LinearConstraint make_constraint(Eigen::Index w, Eigen::Index h) {
    return {PlaneD(h, w), PlaneD(h, w), PlaneD(h, w)};
}

DataLinearization linearize(const MultispectralImage& f1, const MultispectralImage& f2, const GradientCache& g,
                            const FlowField& flow, bool with_nir) {
    const auto w = f1.width();
    const auto h = f1.height();
    const auto nc = f1.visible.size();
    DataLinearization lin;
    lin.out_of_bounds.resize(h, w);
    for (std::size_t c = 0; c < nc; ++c) {
        lin.intensity.push_back(make_constraint(w, h));
        lin.gradient.push_back(make_constraint(w, h));
        lin.gradient.push_back(make_constraint(w, h));
    }
    if (with_nir)
        lin.nir.push_back(make_constraint(w, h));

    auto fill = [](LinearConstraint& k, Eigen::Index y, Eigen::Index x, const std::array<double, 3>& s, double ref) {
        k.r0(y, x) = s[0] - ref;
        k.ax(y, x) = s[1];
        k.ay(y, x) = s[2];
    };

    for (Eigen::Index y = 0; y < h; ++y)
        for (Eigen::Index x = 0; x < w; ++x) {
            const BicubicStencil s(w, h, x + flow.u(y, x), y + flow.v(y, x));
            lin.out_of_bounds(y, x) = s.out_of_bounds();
            for (std::size_t c = 0; c < nc; ++c) {
                fill(lin.intensity[c], y, x, s.value_and_gradient(f2.visible[c]), f1.visible[c](y, x));
                fill(lin.gradient[2 * c], y, x, s.value_and_gradient(g.g2x[c]), g.g1x[c](y, x));
                fill(lin.gradient[2 * c + 1], y, x, s.value_and_gradient(g.g2y[c]), g.g1y[c](y, x));
            }
            if (with_nir)
                fill(lin.nir[0], y, x, s.value_and_gradient(*f2.nir), (*f1.nir)(y, x));
        }
    return lin;
}

double sum_sq_r0(const std::vector<LinearConstraint>& group, Eigen::Index y, Eigen::Index x) {
    double s = 0.0;
    for (const auto& k : group)
        s += k.r0(y, x) * k.r0(y, x);
    return s;
}

// Smoothness argument |grad u|^2 + |grad v|^2 with forward differences (zero across the border).
double smooth_arg(const PlaneD& u, const PlaneD& v, Eigen::Index y, Eigen::Index x) {
    double s = 0.0;
    if (x + 1 < u.cols()) {
        const double ux = u(y, x + 1) - u(y, x), vx = v(y, x + 1) - v(y, x);
        s += ux * ux + vx * vx;
    }
    if (y + 1 < u.rows()) {
        const double uy = u(y + 1, x) - u(y, x), vy = v(y + 1, x) - v(y, x);
        s += uy * uy + vy * vy;
    }
    return s;
}

EnergyBreakdown energy_from(const DataLinearization& lin, const FlowField& flow, const WeightMap& lambda,
                            const SolverParams& params) {
    const double eps = params.epsilon;
    EnergyBreakdown e;
    for (Eigen::Index y = 0; y < lin.height(); ++y)
        for (Eigen::Index x = 0; x < lin.width(); ++x) {
            const double lam = lambda.lambda(y, x);
            if (!lin.out_of_bounds(y, x)) {
                const double ev = robust_penalty(sum_sq_r0(lin.intensity, y, x), eps) +
                                  params.theta * robust_penalty(sum_sq_r0(lin.gradient, y, x), eps);
                e.e_visible += ev;
                e.e_visible_weighted += (1.0 - lam) * ev;
                if (!lin.nir.empty()) {
                    const double en = robust_penalty(sum_sq_r0(lin.nir, y, x), eps);
                    e.e_nir += en;
                    e.e_nir_weighted += lam * en;
                }
            }
            e.e_smooth += robust_penalty(smooth_arg(flow.u, flow.v, y, x), eps);
        }
    e.e_total = e.e_visible_weighted + e.e_nir_weighted + params.gamma * e.e_smooth;
    return e;
}

// Adds psi * sum_k (a_k a_k^T, a_k r0_k) of one penalty group to the pixel's block.
struct GroupAccumulator {
    double a11 = 0, a12 = 0, a22 = 0, b1 = 0, b2 = 0;

    void add(const std::vector<LinearConstraint>& group, Eigen::Index y, Eigen::Index x, double du, double dv,
             double weight, double eps) {
        double s = 0.0;
        for (const auto& k : group) {
            const double r = k.r0(y, x) + k.ax(y, x) * du + k.ay(y, x) * dv;
            s += r * r;
        }
        const double psi = weight * robust_penalty_derivative(s, eps);
        for (const auto& k : group) {
            const double ax = k.ax(y, x), ay = k.ay(y, x), r0 = k.r0(y, x);
            a11 += psi * ax * ax;
            a12 += psi * ax * ay;
            a22 += psi * ay * ay;
            b1 -= psi * ax * r0;
            b2 -= psi * ay * r0;
        }
    }
};

bool all_finite(const PlaneD& p) { return p.allFinite(); }

}  // namespace

WarpResult warp_image(const MultispectralImage& image2, const FlowField& flow) {
    image2.validate();
    check_flow(image2, flow);
    const auto w = image2.width();
    const auto h = image2.height();
    WarpResult out;
    out.out_of_bounds.resize(h, w);
    for (std::size_t c = 0; c < image2.visible.size(); ++c)
        out.image.visible.emplace_back(h, w);
    if (image2.nir)
        out.image.nir = PlaneD(h, w);
    for (Eigen::Index y = 0; y < h; ++y)
        for (Eigen::Index x = 0; x < w; ++x) {
            const BicubicStencil s(w, h, x + flow.u(y, x), y + flow.v(y, x));
            out.out_of_bounds(y, x) = s.out_of_bounds();
            for (std::size_t c = 0; c < image2.visible.size(); ++c)
                out.image.visible[c](y, x) = s.value(image2.visible[c]);
            if (image2.nir)
                (*out.image.nir)(y, x) = s.value(*image2.nir);
        }
    return out;
}

WeightMap make_weight_map(const MultispectralImage& frame1, const SolverParams& params) {
    const auto w = frame1.width();
    const auto h = frame1.height();
    switch (params.mode.kind) {
    case WeightMode::Kind::detail_aware:
        if (!frame1.nir)
            throw InvalidArgument("detail-aware weighting requires a NIR channel");
        return compute_lambda(frame1.visible, *frame1.nir, params.lambda);
    case WeightMode::Kind::fixed:
        return WeightMap::constant(w, h, params.mode.fixed_lambda);
    case WeightMode::Kind::rgb_only:
        return WeightMap::constant(w, h, 0.0);
    case WeightMode::Kind::nir_only:
        return WeightMap::constant(w, h, 1.0);
    }
    return WeightMap::constant(w, h, 0.0);
}

DataLinearization linearize_data(const MultispectralImage& frame1, const MultispectralImage& frame2,
                                 const FlowField& flow, bool with_nir) {
    check_pair(frame1, frame2);
    check_flow(frame1, flow);
    if (with_nir && (!frame1.nir || !frame2.nir))
        throw InvalidArgument("NIR term requested but a frame has no NIR channel");
    return linearize(frame1, frame2, GradientCache(frame1, frame2), flow, with_nir);
}

EnergyBreakdown evaluate_energy(const MultispectralImage& frame1, const MultispectralImage& frame2,
                                const FlowField& flow, const WeightMap& lambda, const SolverParams& params) {
    check_pair(frame1, frame2);
    check_flow(frame1, flow);
    if (lambda.width() != frame1.width() || lambda.height() != frame1.height())
        throw InvalidArgument("weight map and image dimensions differ");
    const bool with_nir = frame1.nir && frame2.nir;
    if (!with_nir && needs_nir_term(lambda))
        throw InvalidArgument("weight map selects the NIR term but a frame has no NIR channel");
    return energy_from(linearize_data(frame1, frame2, flow, with_nir), flow, lambda, params);
}

std::array<double, 4> data_energy_gradient(const DataLinearization& lin, Eigen::Index y, Eigen::Index x,
                                           const SolverParams& params) {
    if (lin.out_of_bounds(y, x))
        return {0.0, 0.0, 0.0, 0.0};
    const double eps = params.epsilon;
    auto group_grad = [&](const std::vector<LinearConstraint>& g, double weight) -> std::array<double, 2> {
        const double psi = weight * robust_penalty_derivative(sum_sq_r0(g, y, x), eps);
        double gu = 0.0, gv = 0.0;
        for (const auto& k : g) {
            gu += 2.0 * psi * k.r0(y, x) * k.ax(y, x);
            gv += 2.0 * psi * k.r0(y, x) * k.ay(y, x);
        }
        return {gu, gv};
    };
    const auto gi = group_grad(lin.intensity, 1.0);
    const auto gg = group_grad(lin.gradient, params.theta);
    std::array<double, 4> out{gi[0] + gg[0], gi[1] + gg[1], 0.0, 0.0};
    if (!lin.nir.empty()) {
        const auto gn = group_grad(lin.nir, 1.0);
        out[2] = gn[0];
        out[3] = gn[1];
    }
    return out;
}

FlowSystem FlowSystem::zeros(Eigen::Index width, Eigen::Index height) {
    const PlaneD z = PlaneD::Zero(height, width);
    return {z, z, z, z, z, z, z};
}

Eigen::SparseMatrix<double> FlowSystem::matrix() const {
    const auto w = width();
    const auto h = height();
    std::vector<Eigen::Triplet<double>> t;
    t.reserve(static_cast<std::size_t>(w * h) * 14);
    auto idx = [w](Eigen::Index y, Eigen::Index x) { return 2 * (y * w + x); };
    for (Eigen::Index y = 0; y < h; ++y)
        for (Eigen::Index x = 0; x < w; ++x) {
            const auto p = idx(y, x);
            t.emplace_back(p, p, a11(y, x));
            t.emplace_back(p, p + 1, a12(y, x));
            t.emplace_back(p + 1, p, a12(y, x));
            t.emplace_back(p + 1, p + 1, a22(y, x));
            auto couple = [&](Eigen::Index qy, Eigen::Index qx, double c) {
                const auto q = idx(qy, qx);
                for (int k = 0; k < 2; ++k) {
                    t.emplace_back(p + k, p + k, c);
                    t.emplace_back(q + k, q + k, c);
                    t.emplace_back(p + k, q + k, -c);
                    t.emplace_back(q + k, p + k, -c);
                }
            };
            if (x + 1 < w)
                couple(y, x + 1, east(y, x));
            if (y + 1 < h)
                couple(y + 1, x, south(y, x));
        }
    Eigen::SparseMatrix<double> m(2 * w * h, 2 * w * h);
    m.setFromTriplets(t.begin(), t.end());
    return m;
}

Eigen::VectorXd FlowSystem::rhs() const {
    Eigen::VectorXd b(2 * a11.size());
    for (Eigen::Index i = 0; i < a11.size(); ++i) {
        b(2 * i) = b1.data()[i];
        b(2 * i + 1) = b2.data()[i];
    }
    return b;
}

FlowSystem assemble_system(const DataLinearization& lin, const FlowField& w0, const PlaneD& du_lag,
                           const PlaneD& dv_lag, const WeightMap& lambda, const SolverParams& params) {
    const auto w = lin.width();
    const auto h = lin.height();
    if (w0.width() != w || w0.height() != h || !same_size(du_lag, w0.u) || !same_size(dv_lag, w0.u) ||
        lambda.width() != w || lambda.height() != h)
        throw InvalidArgument("assemble_system: dimension mismatch");
    const double eps = params.epsilon;
    FlowSystem sys = FlowSystem::zeros(w, h);

    const PlaneD u = w0.u + du_lag;
    const PlaneD v = w0.v + dv_lag;
    for (Eigen::Index y = 0; y < h; ++y)
        for (Eigen::Index x = 0; x < w; ++x) {
            const double c = params.gamma * robust_penalty_derivative(smooth_arg(u, v, y, x), eps);
            sys.east(y, x) = x + 1 < w ? c : 0.0;
            sys.south(y, x) = y + 1 < h ? c : 0.0;
        }

    for (Eigen::Index y = 0; y < h; ++y)
        for (Eigen::Index x = 0; x < w; ++x) {
            GroupAccumulator acc;
            if (!lin.out_of_bounds(y, x)) {
                const double lam = lambda.lambda(y, x);
                const double du = du_lag(y, x), dv = dv_lag(y, x);
                if (lam < 1.0) {
                    acc.add(lin.intensity, y, x, du, dv, 1.0 - lam, eps);
                    if (params.theta > 0.0)
                        acc.add(lin.gradient, y, x, du, dv, (1.0 - lam) * params.theta, eps);
                }
                if (lam > 0.0 && !lin.nir.empty())
                    acc.add(lin.nir, y, x, du, dv, lam, eps);
            }
            // Smoothness acts on w0 + dw; the w0 part moves to the right-hand side.
            double su = 0.0, sv = 0.0;
            auto edge = [&](double cw, Eigen::Index qy, Eigen::Index qx) {
                su += cw * (w0.u(y, x) - w0.u(qy, qx));
                sv += cw * (w0.v(y, x) - w0.v(qy, qx));
            };
            if (x > 0)
                edge(sys.east(y, x - 1), y, x - 1);
            if (x + 1 < w)
                edge(sys.east(y, x), y, x + 1);
            if (y > 0)
                edge(sys.south(y - 1, x), y - 1, x);
            if (y + 1 < h)
                edge(sys.south(y, x), y + 1, x);

            sys.a11(y, x) = acc.a11;
            sys.a12(y, x) = acc.a12;
            sys.a22(y, x) = acc.a22;
            sys.b1(y, x) = acc.b1 - su;
            sys.b2(y, x) = acc.b2 - sv;
        }
    return sys;
}

namespace {

struct NeighbourSums {
    double coupling = 0.0;
    double su = 0.0;
    double sv = 0.0;
};

inline NeighbourSums neighbour_sums(const FlowSystem& s, const PlaneD& du, const PlaneD& dv, Eigen::Index y,
                                    Eigen::Index x) {
    NeighbourSums n;
    auto add = [&](double c, Eigen::Index qy, Eigen::Index qx) {
        n.coupling += c;
        n.su += c * du(qy, qx);
        n.sv += c * dv(qy, qx);
    };
    if (x > 0)
        add(s.east(y, x - 1), y, x - 1);
    if (x + 1 < s.width())
        add(s.east(y, x), y, x + 1);
    if (y > 0)
        add(s.south(y - 1, x), y - 1, x);
    if (y + 1 < s.height())
        add(s.south(y, x), y + 1, x);
    return n;
}

double residual_norm(const FlowSystem& s, const PlaneD& du, const PlaneD& dv) {
    double acc = 0.0;
    for (Eigen::Index y = 0; y < s.height(); ++y)
        for (Eigen::Index x = 0; x < s.width(); ++x) {
            const NeighbourSums n = neighbour_sums(s, du, dv, y, x);
            const double ru =
                s.b1(y, x) - ((s.a11(y, x) + n.coupling) * du(y, x) + s.a12(y, x) * dv(y, x) - n.su);
            const double rv =
                s.b2(y, x) - ((s.a22(y, x) + n.coupling) * dv(y, x) + s.a12(y, x) * du(y, x) - n.sv);
            acc += ru * ru + rv * rv;
        }
    return std::sqrt(acc);
}

inline void relax_pixel(const FlowSystem& s, PlaneD& du, PlaneD& dv, Eigen::Index y, Eigen::Index x, double omega) {
    const NeighbourSums n = neighbour_sums(s, du, dv, y, x);
    const double du_new = (s.b1(y, x) + n.su - s.a12(y, x) * dv(y, x)) / (s.a11(y, x) + n.coupling);
    du(y, x) = (1.0 - omega) * du(y, x) + omega * du_new;
    const double dv_new = (s.b2(y, x) + n.sv - s.a12(y, x) * du(y, x)) / (s.a22(y, x) + n.coupling);
    dv(y, x) = (1.0 - omega) * dv(y, x) + omega * dv_new;
}

void check_sor_options(const SorOptions& o) {
    if (!(o.omega > 0.0 && o.omega < 2.0))
        throw InvalidArgument("SOR relaxation must lie in (0,2)");
    if (o.max_iters < 0 || !(o.tol >= 0.0))
        throw InvalidArgument("bad SOR iteration limits");
}

}  // namespace

SorReport sor_solve(const FlowSystem& s, PlaneD& du, PlaneD& dv, const SorOptions& options) {
    check_sor_options(options);
    const auto w = s.width();
    const auto h = s.height();
    if (!same_size(du, s.a11) || !same_size(dv, s.a11))
        throw InvalidArgument("sor_solve: unknowns and system differ in size");
    for (const PlaneD* p : {&s.a11, &s.a12, &s.a22, &s.b1, &s.b2, &s.east, &s.south})
        if (!all_finite(*p))
            throw InvalidArgument("sor_solve: non-finite coefficients");
    for (Eigen::Index y = 0; y < h; ++y)
        for (Eigen::Index x = 0; x < w; ++x) {
            const double c = neighbour_sums(s, du, dv, y, x).coupling;
            if (!(s.a11(y, x) + c > 0.0) || !(s.a22(y, x) + c > 0.0))
                throw InvalidArgument("sor_solve: non-positive diagonal");
        }

    SorReport rep;
    rep.initial_residual = residual_norm(s, du, dv);
    rep.final_residual = rep.initial_residual;
    if (rep.initial_residual == 0.0)
        return rep;
    const double target = options.tol * rep.initial_residual;
    while (rep.iterations < options.max_iters && rep.final_residual > target) {
        if (options.ordering == SorOrdering::red_black) {
            for (int colour = 0; colour < 2; ++colour)
                for (Eigen::Index y = 0; y < h; ++y)
                    for (Eigen::Index x = (y + colour) % 2; x < w; x += 2)
                        relax_pixel(s, du, dv, y, x, options.omega);
        } else {
            for (Eigen::Index y = 0; y < h; ++y)
                for (Eigen::Index x = 0; x < w; ++x)
                    relax_pixel(s, du, dv, y, x, options.omega);
        }
        ++rep.iterations;
        rep.final_residual = residual_norm(s, du, dv);
    }
    return rep;
}

SorReport sor_solve(const Eigen::SparseMatrix<double, Eigen::RowMajor>& a, const Eigen::VectorXd& b,
                    Eigen::VectorXd& x, const SorOptions& options) {
    check_sor_options(options);
    const auto n = a.rows();
    if (a.cols() != n || b.size() != n || x.size() != n)
        throw InvalidArgument("sor_solve: dimension mismatch");
    Eigen::VectorXd diag = Eigen::VectorXd::Zero(n);
    for (Eigen::Index i = 0; i < n; ++i)
        for (Eigen::SparseMatrix<double, Eigen::RowMajor>::InnerIterator it(a, i); it; ++it) {
            if (!std::isfinite(it.value()))
                throw InvalidArgument("sor_solve: non-finite coefficients");
            if (it.col() == i)
                diag(i) += it.value();
        }
    if (!b.allFinite() || (diag.array() == 0.0).any())
        throw InvalidArgument("sor_solve: non-finite rhs or zero diagonal");

    SorReport rep;
    rep.initial_residual = (b - a * x).norm();
    rep.final_residual = rep.initial_residual;
    if (rep.initial_residual == 0.0)
        return rep;
    const double target = options.tol * rep.initial_residual;
    while (rep.iterations < options.max_iters && rep.final_residual > target) {
        for (Eigen::Index i = 0; i < n; ++i) {
            double sigma = 0.0;
            for (Eigen::SparseMatrix<double, Eigen::RowMajor>::InnerIterator it(a, i); it; ++it)
                if (it.col() != i)
                    sigma += it.value() * x(it.col());
            x(i) = (1.0 - options.omega) * x(i) + options.omega * (b(i) - sigma) / diag(i);
        }
        ++rep.iterations;
        rep.final_residual = (b - a * x).norm();
    }
    return rep;
}

FlowField solve_level(const MultispectralImage& frame1, const MultispectralImage& frame2, const WeightMap& lambda,
                      const FlowField& w_init, const SolverParams& params, LevelTrace* trace) {
    params.validate();
    check_pair(frame1, frame2);
    check_flow(frame1, w_init);
    if (lambda.width() != frame1.width() || lambda.height() != frame1.height())
        throw InvalidArgument("weight map and image dimensions differ");
    const bool with_nir = needs_nir_term(lambda);
    if (with_nir && (!frame1.nir || !frame2.nir))
        throw InvalidArgument("weight map selects the NIR term but a frame has no NIR channel");

    const GradientCache grads(frame1, frame2);
    const SorOptions sor{params.sor_omega, params.sor_iters, params.sor_tol, params.sor_ordering};
    const auto w = frame1.width();
    const auto h = frame1.height();

    FlowField flow = w_init;
    if (trace) {
        trace->width = w;
        trace->height = h;
        trace->energies.clear();
    }
    for (int outer = 0; outer < params.outer_iters; ++outer) {
        const DataLinearization lin = linearize(frame1, frame2, grads, flow, with_nir);
        const EnergyBreakdown e_current = energy_from(lin, flow, lambda, params);
        if (trace && outer == 0)
            trace->energies.push_back(e_current);

        PlaneD du = PlaneD::Zero(h, w);
        PlaneD dv = PlaneD::Zero(h, w);
        for (int inner = 0; inner < params.inner_iters; ++inner) {
            const FlowSystem sys = assemble_system(lin, flow, du, dv, lambda, params);
            sor_solve(sys, du, dv, sor);
        }

        // The warp linearization can overshoot; take the longest of the halved
        // steps that does not raise the energy, or none.
        EnergyBreakdown e_next = e_current;
        double step = 1.0;
        for (int halving = 0; halving <= std::max(0, params.max_step_halvings); ++halving, step *= 0.5) {
            FlowField candidate(flow.u + step * du, flow.v + step * dv);
            const EnergyBreakdown e =
                energy_from(linearize(frame1, frame2, grads, candidate, with_nir), candidate, lambda, params);
            if (e.e_total <= e_current.e_total || params.max_step_halvings < 0) {
                flow = std::move(candidate);
                e_next = e;
                break;
            }
        }
        if (trace)
            trace->energies.push_back(e_next);
    }
    return flow;
}

FlowField compute_flow(const MultispectralImage& frame1, const MultispectralImage& frame2,
                       const SolverParams& params, SolveTrace* trace) {
    params.validate();
    check_pair(frame1, frame2);
    if (params.mode.needs_nir() && (!frame1.nir || !frame2.nir))
        throw InvalidArgument("mode '" + params.mode.to_string() + "' requires NIR frames");

    const WeightMap lambda = make_weight_map(frame1, params);
    const PyramidParams pp{params.pyramid_factor, params.min_size};
    const Pyramid pyr1 = build_pyramid(frame1, lambda, pp);
    const Pyramid pyr2 = build_pyramid(frame2, std::nullopt, pp);

    const auto levels = pyr1.size();
    FlowField flow(pyr1.levels.back().image.width(), pyr1.levels.back().image.height());
    if (trace)
        trace->levels.clear();
    for (std::size_t k = levels; k-- > 0;) {
        const auto& l1 = pyr1.levels[k];
        const auto& l2 = pyr2.levels[k];
        flow = rescale_flow(flow, l1.image.width(), l1.image.height());
        WeightMap level_lambda = *l1.lambda;
        if (params.recompute_lambda_per_level && params.mode.kind == WeightMode::Kind::detail_aware)
            level_lambda = make_weight_map(l1.image, params);
        LevelTrace lt;
        lt.level = k;
        flow = solve_level(l1.image, l2.image, level_lambda, flow, params, trace ? &lt : nullptr);
        if (trace)
            trace->levels.push_back(std::move(lt));
    }
    return flow;
}

}  // namespace msflow
