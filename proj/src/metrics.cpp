#include "msflow/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

namespace msflow {

const char* to_string(ErrorKind kind) { return kind == ErrorKind::ee ? "EE" : "AE"; }

std::vector<double> default_thresholds(ErrorKind kind) {
    if (kind == ErrorKind::ee)
        return {0.5, 0.75, 1.0, 2.0};
    return {2.0, 5.0, 7.5, 10.0};
}

std::vector<double> ErrorMap::valid_values() const {
    std::vector<double> out;
    out.reserve(static_cast<std::size_t>(n_valid()));
    for (Eigen::Index i = 0; i < values.size(); ++i)
        if (valid.data()[i])
            out.push_back(values.data()[i]);
    return out;
}

namespace {

template <typename F>
ErrorMap per_pixel(ErrorKind kind, const FlowField& gt, const FlowField& est, F&& f) {
    if (gt.width() != est.width() || gt.height() != est.height())
        throw InvalidArgument("ground truth and estimate differ in size");
    const auto w = gt.width();
    const auto h = gt.height();
    ErrorMap m{kind, PlaneD::Zero(h, w), Plane<bool>::Constant(h, w, false), Plane<bool>::Constant(h, w, false)};
    for (Eigen::Index y = 0; y < h; ++y)
        for (Eigen::Index x = 0; x < w; ++x) {
            if (!gt.valid(y, x))
                continue;
            double ue = est.u(y, x), ve = est.v(y, x);
            if (!est.valid(y, x)) {
                ue = ve = 0.0;
                m.flagged(y, x) = true;
            }
            m.values(y, x) = f(gt.u(y, x), gt.v(y, x), ue, ve);
            m.valid(y, x) = true;
        }
    return m;
}

}  // namespace

ErrorMap endpoint_error(const FlowField& gt, const FlowField& est) {
    return per_pixel(ErrorKind::ee, gt, est,
                     [](double ug, double vg, double ue, double ve) { return std::hypot(ue - ug, ve - vg); });
}

ErrorMap angle_error(const FlowField& gt, const FlowField& est) {
    return per_pixel(ErrorKind::ae, gt, est, [](double ug, double vg, double ue, double ve) {
        const double num = ug * ue + vg * ve + 1.0;
        const double den = std::sqrt(ug * ug + vg * vg + 1.0) * std::sqrt(ue * ue + ve * ve + 1.0);
        return std::acos(std::clamp(num / den, -1.0, 1.0)) * 180.0 / std::numbers::pi;
    });
}

ErrorStats compute_stats(const std::vector<double>& errors, const std::vector<double>& r_thresholds,
                         ErrorKind kind) {
    if (errors.empty())
        throw InvalidArgument("compute_stats: no valid pixels");
    ErrorStats s;
    s.kind = kind;
    const auto n = errors.size();
    s.n_valid = static_cast<Eigen::Index>(n);

    // Plain sums in input order keep the statistics reproducible across builds.
    double sum = 0.0;
    for (double e : errors)
        sum += e;
    s.avg = sum / double(n);
    double sq = 0.0;
    for (double e : errors)
        sq += (e - s.avg) * (e - s.avg);
    s.sd = std::sqrt(sq / double(n));

    std::vector<double> sorted = errors;
    std::sort(sorted.begin(), sorted.end());
    for (double p : kPercentiles) {
        const double rank = std::ceil(p * double(n) / 100.0) - 1.0;
        const auto idx = static_cast<std::size_t>(std::clamp(rank, 0.0, double(n - 1)));
        s.ax[p] = sorted[idx];
    }
    for (double t : r_thresholds) {
        const auto above = sorted.end() - std::upper_bound(sorted.begin(), sorted.end(), t);
        s.rx[t] = double(above) / double(n);
    }
    return s;
}

ErrorStats compute_stats(const ErrorMap& errors, const std::vector<double>& r_thresholds) {
    ErrorStats s = compute_stats(errors.valid_values(), r_thresholds, errors.kind);
    s.n_flagged = (errors.flagged && errors.valid).count();
    return s;
}

ErrorStats compute_stats(const ErrorMap& errors) { return compute_stats(errors, default_thresholds(errors.kind)); }

SequenceStats accumulate_sequence(const std::vector<ErrorStats>& per_frame) {
    if (per_frame.empty())
        throw InvalidArgument("accumulate_sequence: empty sequence");
    SequenceStats out{per_frame, {}};
    double acc = 0.0;
    for (const auto& f : per_frame) {
        acc += f.avg;
        out.acc_ee.push_back(acc);
    }
    return out;
}

PlaneU8 render_error_map(const ErrorMap& errors, double scale) {
    if (!(scale > 0.0))
        throw InvalidArgument("render_error_map: scale must be positive");
    PlaneU8 out = PlaneU8::Zero(errors.height(), errors.width());
    for (Eigen::Index i = 0; i < out.size(); ++i)
        if (errors.valid.data()[i])
            out.data()[i] = static_cast<std::uint8_t>(
                std::lround(std::clamp(errors.values.data()[i] / scale, 0.0, 1.0) * 255.0));
    return out;
}

std::vector<PlaneU8> render_flow(const FlowField& field, double max_magnitude) {
    const auto w = field.width();
    const auto h = field.height();
    if (max_magnitude <= 0.0) {
        max_magnitude = 0.0;
        for (Eigen::Index y = 0; y < h; ++y)
            for (Eigen::Index x = 0; x < w; ++x)
                if (field.valid(y, x))
                    max_magnitude = std::max(max_magnitude, std::hypot(field.u(y, x), field.v(y, x)));
    }
    std::vector<PlaneU8> rgb(3, PlaneU8::Zero(h, w));
    for (Eigen::Index y = 0; y < h; ++y)
        for (Eigen::Index x = 0; x < w; ++x) {
            if (!field.valid(y, x))
                continue;
            const double u = field.u(y, x), v = field.v(y, x);
            const double mag = std::hypot(u, v);
            const double sat = max_magnitude > 0.0 ? std::min(1.0, mag / max_magnitude) : 0.0;
            double hue = std::atan2(v, u) * 180.0 / std::numbers::pi;
            if (hue < 0.0)
                hue += 360.0;
            // HSV with V = 1.
            const double hs = hue / 60.0;
            const int sector = static_cast<int>(std::floor(hs)) % 6;
            const double f = hs - std::floor(hs);
            const double p = 1.0 - sat, q = 1.0 - sat * f, t = 1.0 - sat * (1.0 - f);
            double r = 1, g = 1, b = 1;
            switch (sector) {
                case 0: r = 1; g = t; b = p; break;
                case 1: r = q; g = 1; b = p; break;
                case 2: r = p; g = 1; b = t; break;
                case 3: r = p; g = q; b = 1; break;
                case 4: r = t; g = p; b = 1; break;
                default: r = 1; g = p; b = q; break;
            }
            rgb[0](y, x) = static_cast<std::uint8_t>(std::lround(r * 255.0));
            rgb[1](y, x) = static_cast<std::uint8_t>(std::lround(g * 255.0));
            rgb[2](y, x) = static_cast<std::uint8_t>(std::lround(b * 255.0));
        }
    return rgb;
}

}  // namespace msflow
