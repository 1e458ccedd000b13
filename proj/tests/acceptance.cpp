// Acceptance checks: one PASS/FAIL line per criterion; exit status 1 if any fails.

#include "msflow/filters.hpp"
#include "msflow/gt.hpp"
#include "msflow/metrics.hpp"
#include "msflow/solver.hpp"
#include "msflow/synth.hpp"
#include "msflow/weightmap.hpp"

#include "oracles.hpp"
#include "test_support.hpp"

#include <chrono>
#include <cstdio>
#include <functional>
#include <numbers>
#include <sstream>
#include <string>

using namespace msflow;
using namespace msflow::testing;

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

struct Outcome {
    bool pass = true;
    std::ostringstream detail;

    void require(bool ok, const std::string& what) {
        if (!ok) {
            pass = false;
            detail << " [failed: " << what << "]";
        }
    }
};

double avg_ee(const FlowField& gt_flow, const FlowField& est) { return compute_stats(endpoint_error(gt_flow, est)).avg; }

FlowField solve(const synth::SyntheticPair& pair, WeightMode mode) {
    SolverParams p;
    p.mode = mode;
    return compute_flow(pair.frame1, pair.frame2, p);
}

// Scene with RGB-flat/NIR-textured and RGB-textured/NIR-flat halves under a smooth warp.
synth::SceneParams split_scene(double speckle) {
    synth::SceneParams sp;
    sp.seed = 11;
    sp.layout = synth::Layout::split;
    sp.shadow_strength = 0.5;
    sp.speckle_contrast = speckle;
    sp.warp.tx = 1.5;
    sp.warp.ty = 0.5;
    sp.warp.rotation_deg = 1.0;
    sp.warp.bump_amplitude = 2.0;
    sp.warp.bump_sigma = 50.0;
    return sp;
}

const std::vector<std::pair<std::string, WeightMode>> kFixedModes{
    {"rgb", WeightMode::rgb_only()}, {"nir", WeightMode::nir_only()}, {"fixed:0.5", WeightMode::fixed(0.5)}};

// Shared by criteria 3 and 4: Avg.EE per attenuation for detail-aware and each fixed mode.
struct AttenuationSweep {
    std::vector<double> speckle{1.0, 0.5, 0.25, 0.1};
    std::vector<double> da;
    std::vector<std::vector<double>> fixed;  // [attenuation][mode]
};

const AttenuationSweep& attenuation_sweep() {
    static const AttenuationSweep sweep = [] {
        AttenuationSweep s;
        for (double c : s.speckle) {
            const auto pair = synth::make_pair(split_scene(c));
            s.da.push_back(avg_ee(pair.ground_truth, solve(pair, WeightMode::detail_aware())));
            std::vector<double> row;
            for (const auto& [name, mode] : kFixedModes)
                row.push_back(avg_ee(pair.ground_truth, solve(pair, mode)));
            s.fixed.push_back(row);
        }
        return s;
    }();
    return sweep;
}

Outcome criterion1() {
    Outcome o;
    const auto t0 = Clock::now();
    std::mt19937_64 rng(101);
    std::uniform_real_distribution<double> slope(0.0, 0.2);
    double worst = 0.0;
    for (int i = 0; i < 1000; ++i) {
        // Linear ramps: the normalized Sobel response is twice the slope away from the border.
        const double cv = slope(rng), cn = slope(rng);
        PlaneD vis(5, 5), nir(5, 5);
        for (Eigen::Index y = 0; y < 5; ++y)
            for (Eigen::Index x = 0; x < 5; ++x) {
                vis(y, x) = 0.2 + cv * x;
                nir(y, x) = 0.2 + cn * y;
            }
        const WeightMap m = compute_lambda({vis}, nir);
        worst = std::max(worst, std::abs(m.lambda(2, 2) - logistic_oracle(2 * cv, 2 * cn)));
        worst = std::max(worst, std::abs(lambda_from_gradients(cv, cn) - logistic_oracle(cv, cn)));
    }
    o.require(worst <= 1e-10, "oracle agreement");
    o.require(lambda_from_gradients(0.4, 0.4) == 0.5 && lambda_from_gradients(0.0, 0.0) == 0.5, "midpoint");
    bool monotone = true, symmetric = true;
    std::uniform_real_distribution<double> mag(0.01, 2.0);
    for (int i = 0; i < 1000; ++i) {
        const double gv = mag(rng), a = mag(rng), b = mag(rng);
        if (a < b)
            monotone &= lambda_from_gradients(gv, a) < lambda_from_gradients(gv, b);
        symmetric &= std::abs(lambda_from_gradients(gv, a) + lambda_from_gradients(a, gv) - 1.0) < 1e-12;
    }
    o.require(monotone, "monotone in NIR gradient");
    o.require(symmetric, "swap symmetry");
    const double t = seconds_since(t0);
    o.require(t < 1.0, "runtime");
    o.detail << "max |diff| " << worst << ", " << t << " s";
    return o;
}

Outcome criterion2() {
    Outcome o;
    const auto t0 = Clock::now();
    for (double t : {0.0, 0.5, 2.0, 5.0}) {
        synth::SceneParams sp;
        sp.seed = 7;
        const double a = std::numbers::pi / 6.0;
        sp.warp = synth::WarpSpec::translation(t * std::cos(a), t * std::sin(a));
        const auto pair = synth::make_pair(sp);
        const double e = avg_ee(pair.ground_truth, solve(pair, WeightMode::detail_aware()));
        o.require(e < (t == 0.0 ? 0.05 : 0.2), "Avg.EE at " + std::to_string(t) + " px");
        o.detail << "t=" << t << ": " << e << "; ";
    }
    const double secs = seconds_since(t0);
    o.require(secs < 60.0, "runtime");
    o.detail << secs << " s";
    return o;
}

Outcome criterion3() {
    Outcome o;
    const auto& s = attenuation_sweep();
    const double best_fixed = *std::min_element(s.fixed[0].begin(), s.fixed[0].end());
    o.require(s.da[0] <= 0.9 * best_fixed, "10% margin over the best fixed mode");
    o.detail << "da " << s.da[0];
    for (std::size_t m = 0; m < kFixedModes.size(); ++m)
        o.detail << ", " << kFixedModes[m].first << " " << s.fixed[0][m];
    return o;
}

Outcome criterion4() {
    Outcome o;
    const auto& s = attenuation_sweep();
    int inversions = 0;
    for (std::size_t k = 1; k < s.da.size(); ++k)
        if (s.da[k] < s.da[k - 1]) {
            ++inversions;
            o.require((s.da[k - 1] - s.da[k]) / s.da[k - 1] <= 0.05, "inversion within 5%");
        }
    o.require(inversions <= 1, "at most one inversion");
    for (std::size_t k = 0; k < s.da.size(); ++k)
        for (double f : s.fixed[k])
            o.require(s.da[k] <= f, "detail-aware <= fixed at speckle " + std::to_string(s.speckle[k]));
    o.detail << "da:";
    for (std::size_t k = 0; k < s.da.size(); ++k)
        o.detail << " " << s.speckle[k] << "->" << s.da[k];
    o.detail << "; inversions " << inversions;
    return o;
}

Outcome criterion5() {
    Outcome o;
    double worst = -1.0;
    int checked = 0;
    for (std::uint64_t seed = 1; seed <= 20; ++seed) {
        std::mt19937_64 rng(seed);
        std::uniform_real_distribution<double> u(-3.0, 3.0);
        synth::SceneParams sp;
        sp.seed = seed;
        sp.width = 128;
        sp.height = 96;
        sp.warp.tx = u(rng);
        sp.warp.ty = u(rng);
        sp.warp.rotation_deg = u(rng) / 2.0;
        sp.warp.bump_amplitude = u(rng);
        sp.warp.bump_sigma = 25.0;
        const auto pair = synth::make_pair(sp);
        SolveTrace trace;
        compute_flow(pair.frame1, pair.frame2, SolverParams{}, &trace);
        for (const auto& level : trace.levels)
            for (std::size_t k = 1; k < level.energies.size(); ++k) {
                const double prev = level.energies[k - 1].e_total;
                worst = std::max(worst, (level.energies[k].e_total - prev) / prev);
                ++checked;
            }
    }
    o.require(worst <= 1e-3, "energy non-increasing");

    synth::SceneParams sp;
    sp.width = 96;
    sp.height = 72;
    sp.seed = 5;
    sp.warp = synth::WarpSpec::translation(1.2, -0.8);
    const auto pair = synth::make_pair(sp);
    o.require(solve(pair, WeightMode::fixed(0.0)) == solve(pair, WeightMode::rgb_only()), "fixed(0) == rgb_only");
    o.require(solve(pair, WeightMode::fixed(1.0)) == solve(pair, WeightMode::nir_only()), "fixed(1) == nir_only");
    o.detail << checked << " outer steps, worst relative increase " << worst;
    return o;
}

Outcome criterion6() {
    Outcome o;
    double worst_system = 0.0, worst_sor = 0.0;
    for (std::uint64_t seed = 1; seed <= 5; ++seed) {
        const SmallSystem s = random_small_system(seed);
        const DataLinearization lin = linearize_data(s.f1, s.f2, s.w0, true);
        const FlowSystem sys = assemble_system(lin, s.w0, s.du_lag, s.dv_lag, s.lambda, s.params);
        const DenseQuadratic dq =
            dense_quadratic(QuadraticOracle(lin, s.w0, s.du_lag, s.dv_lag, s.lambda, s.params), 72);
        const Eigen::MatrixXd a = Eigen::MatrixXd(sys.matrix());
        const Eigen::VectorXd b = sys.rhs();
        const Eigen::VectorXd x = a.ldlt().solve(b);
        worst_system = std::max(worst_system, (x - dq.minimizer).norm() / std::max(1.0, dq.minimizer.norm()));

        const SolverParams defaults;
        SorOptions opt{defaults.sor_omega, 100000, defaults.sor_tol, SorOrdering::red_black};
        PlaneD du = PlaneD::Zero(6, 6), dv = PlaneD::Zero(6, 6);
        sor_solve(sys, du, dv, opt);
        Eigen::VectorXd xs(72);
        for (Eigen::Index i = 0; i < 36; ++i) {
            xs(2 * i) = du.data()[i];
            xs(2 * i + 1) = dv.data()[i];
        }
        const double rel_res = (b - a * xs).norm() / b.norm();
        o.require(rel_res <= defaults.sor_tol, "SOR residual within sor_tol");
        worst_sor = std::max(worst_sor, (xs - x).norm() / x.norm());
    }
    o.require(worst_system <= 1e-8, "direct solve matches oracle");
    o.detail << "system vs oracle " << worst_system << ", SOR relative error " << worst_sor;
    return o;
}

Outcome criterion7() {
    Outcome o;
    int mismatches = 0;
    for (std::uint64_t seed = 0; seed < 100; ++seed) {
        std::mt19937_64 rng(5000 + seed);
        std::uniform_int_distribution<int> level(0, seed % 2 ? 1 : 255);
        auto make = [&] {
            gt::DescriptorField f;
            f.width = 12;
            f.height = 12;
            f.data.resize(gt::kDescriptorLength, 144);
            for (Eigen::Index i = 0; i < f.data.size(); ++i)
                f.data.data()[i] = float(level(rng)) / 256.0f;
            return f;
        };
        const auto a = make(), b = make();
        const int m_p = 1 + int(seed % 3);
        mismatches += !(gt::match_window(a, b, m_p) == brute_force_match(a, b, m_p));
    }
    o.require(mismatches == 0, "match_window equals brute force");

    synth::SceneParams sp;
    sp.width = 192;
    sp.height = 144;
    sp.seed = 3;
    sp.warp.tx = 1.3;
    sp.warp.ty = -0.7;
    sp.warp.rotation_deg = 0.8;
    sp.warp.bump_amplitude = 2.0;
    const double max_mag = synth::Warp(sp.warp, sp.width, sp.height).max_magnitude();
    o.require(max_mag <= 4.0, "warp within 4 px");
    const auto pair = synth::make_pair(sp);
    const gt::GtResult r = gt::build_ground_truth(*pair.frame1.nir, *pair.frame2.nir, {});
    const double gt_aee = avg_ee(gt::downsample_flow(pair.ground_truth, 3), r.flow);
    o.require(gt_aee < 0.25, "GT Avg.EE");

    PlaneD a(64, 64), b(64, 64);
    for (Eigen::Index y = 0; y < 64; ++y)
        for (Eigen::Index x = 0; x < 64; ++x) {
            auto blob = [&](double dx) { return std::exp(-((x - 32 - dx) * (x - 32 - dx) + (y - 32.0) * (y - 32.0)) / 32.0); };
            a(y, x) = blob(0.0);
            b(y, x) = blob(0.25);
        }
    const gt::GtConfig cfg;
    const FlowField lk = gt::lk_subpixel(a, b, FlowField(64, 64), cfg);
    o.require(std::abs(lk.u(32, 32) - 0.25) <= 0.05 && std::abs(lk.v(32, 32)) <= 0.05, "LK quarter-pixel shift");
    bool quantized = true;
    for (Eigen::Index i = 0; i < lk.u.size(); ++i)
        for (double c : {lk.u.data()[i], lk.v.data()[i]})
            quantized &= std::abs(c * 20.0 - std::round(c * 20.0)) < 1e-9;
    o.require(quantized, "1/20 px quantization");
    o.detail << "brute-force mismatches " << mismatches << ", GT Avg.EE " << gt_aee << " (max warp " << max_mag
             << " px), LK u " << lk.u(32, 32);
    return o;
}

Outcome criterion8() {
    Outcome o;
    std::mt19937_64 rng(808);
    std::gamma_distribution<double> g(1.5, 0.6);
    for (int trial = 0; trial < 10; ++trial) {
        std::vector<double> v(10000);
        for (auto& e : v)
            e = g(rng);
        const auto th = default_thresholds(ErrorKind::ee);
        const ErrorStats s = compute_stats(v, th);
        const ErrorStats r = sort_and_scan_oracle(v, th);
        o.require(s.avg == r.avg && s.sd == r.sd && s.ax == r.ax && s.rx == r.rx && s.n_valid == r.n_valid,
                  "exact agreement, trial " + std::to_string(trial));
    }
    const double ee = endpoint_error(FlowField::constant(1, 1, 0, 0), FlowField::constant(1, 1, 3, 4)).values(0, 0);
    const double ae = angle_error(FlowField::constant(1, 1, 1, 0), FlowField::constant(1, 1, 0, 1)).values(0, 0);
    o.require(ee == 5.0, "EE(3,4 vs 0,0) = 5");
    o.require(std::abs(ae - 60.0) < 1e-12, "AE of orthogonal unit vectors = 60");
    o.detail << "EE " << ee << ", AE " << ae;
    return o;
}

Outcome criterion9() {
    Outcome o;
    const FlowField d = gt::downsample_flow(FlowField(1296, 966), 3);
    o.require(d.width() == 432 && d.height() == 322, "1296x966 -> 432x322");

    // Block 0: nine (3,3) -> (1,1). Block 1: eight (3,0) and one unknown -> (1,0).
    // Block 2: (6,3), (0,3), (3,-3) valid -> (1, 1/3). Block 3: all unknown -> unknown.
    FlowField f(12, 3);
    for (Eigen::Index y = 0; y < 3; ++y)
        for (Eigen::Index x = 0; x < 12; ++x) {
            if (x < 3) {
                f.u(y, x) = 3;
                f.v(y, x) = 3;
            } else if (x < 6) {
                f.u(y, x) = 3;
                f.v(y, x) = 0;
            } else {
                f.set_unknown(y, x);
            }
        }
    f.set_unknown(1, 4);
    f.u(0, 6) = 6;
    f.v(0, 6) = 3;
    f.u(1, 8) = 0;
    f.v(1, 8) = 3;
    f.u(2, 7) = 3;
    f.v(2, 7) = -3;
    const FlowField b = gt::downsample_flow(f, 3);
    o.require(b.width() == 4 && b.height() == 1, "block grid");
    o.require(b.u(0, 0) == 1.0 && b.v(0, 0) == 1.0, "full block");
    o.require(b.u(0, 1) == 1.0 && b.v(0, 1) == 0.0, "block with one unknown");
    o.require(b.u(0, 2) == 1.0 && std::abs(b.v(0, 2) - 1.0 / 3.0) < 1e-15, "block with three valid");
    o.require(!b.valid(0, 3), "empty block");
    o.detail << d.width() << "x" << d.height();
    return o;
}

Outcome criterion10() {
    Outcome o;
    std::mt19937_64 rng(1010);
    const PlaneD a = random_plane(256, 256, rng), b = random_plane(256, 256, rng);
    // Single-pixel patches keep uniform samples uniform.
    const double h_uniform = gt::joint_entropy(a, b, 20000, 1, 16, 1);
    o.require(std::abs(h_uniform - 8.0) <= 0.2, "independent uniform channels near 8 bits");

    synth::SceneParams sp;
    sp.seed = 10;
    const auto pair = synth::make_pair(sp);
    const PlaneD& nir = *pair.frame1.nir;
    const double h_self = gt::joint_entropy(nir, nir, 20000, 3, 16, 1);
    const double h_oracle = entropy_1d_oracle(nir, 20000, 3, 16, 1);
    o.require(std::abs(h_self - h_oracle) <= 1e-12, "H(A,A) equals 1-D entropy");

    const PlaneD gray = synth::gray(pair.frame1);
    const double h_nir_gray = gt::joint_entropy(nir, gray, 20000, 3, 16, 1);
    const double h_r_g = gt::joint_entropy(pair.frame1.visible[0], pair.frame1.visible[1], 20000, 3, 16, 1);
    o.require(h_nir_gray > h_r_g, "H(NIR,Gray) > H(R,G)");
    o.detail << "H(U1,U2) " << h_uniform << ", H(NIR,NIR) " << h_self << " vs " << h_oracle << ", H(NIR,Gray) "
             << h_nir_gray << ", H(R,G) " << h_r_g;
    return o;
}

}  // namespace

int main() {
    const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria{
        {"weight formula fidelity", criterion1},      {"known motion recovery", criterion2},
        {"detail-aware beats fixed weights", criterion3}, {"NIR degradation trend", criterion4},
        {"energy descent and mode equivalence", criterion5}, {"linear-system oracle", criterion6},
        {"ground-truth pipeline oracle", criterion7}, {"metrics oracle", criterion8},
        {"dimensional fidelity", criterion9},         {"entropy sanity", criterion10}};
    int failed = 0;
    for (std::size_t i = 0; i < criteria.size(); ++i) {
        const auto t0 = Clock::now();
        Outcome o;
        try {
            o = criteria[i].second();
        } catch (const std::exception& e) {
            o.pass = false;
            o.detail << " [exception: " << e.what() << "]";
        }
        failed += !o.pass;
        std::printf("CRITERION %zu %s: %s (%s; %.2f s)\n", i + 1, o.pass ? "PASS" : "FAIL", criteria[i].first.c_str(),
                    o.detail.str().c_str(), seconds_since(t0));
        std::fflush(stdout);
    }
    return failed == 0 ? 0 : 1;
}
