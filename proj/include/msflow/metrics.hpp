#ifndef MSFLOW_METRICS_HPP
#define MSFLOW_METRICS_HPP

#include "msflow/types.hpp"

#include <map>
#include <vector>

namespace msflow {

enum class ErrorKind { ee, ae };

const char* to_string(ErrorKind kind);

/// Default RX thresholds: {0.5, 0.75, 1, 2} px for EE, {2, 5, 7.5, 10} deg for AE.
std::vector<double> default_thresholds(ErrorKind kind);

inline const std::vector<double> kPercentiles{50.0, 75.0, 99.0, 100.0};

/// Per-pixel errors; pixels with unknown ground truth are invalid. Pixels where
/// the estimate is unknown are scored as zero motion and flagged.
struct ErrorMap {
    ErrorKind kind = ErrorKind::ee;
    PlaneD values;
    Plane<bool> valid;
    Plane<bool> flagged;

    Eigen::Index width() const { return values.cols(); }
    Eigen::Index height() const { return values.rows(); }
    Eigen::Index n_valid() const { return valid.count(); }
    /// Valid errors in row-major order.
    std::vector<double> valid_values() const;
};

ErrorMap endpoint_error(const FlowField& gt, const FlowField& est);

/// Angle between the augmented vectors (u, v, 1), in degrees.
ErrorMap angle_error(const FlowField& gt, const FlowField& est);

struct ErrorStats {
    ErrorKind kind = ErrorKind::ee;
    Eigen::Index n_valid = 0;
    Eigen::Index n_flagged = 0;
    double avg = 0.0;
    double sd = 0.0;                // population
    std::map<double, double> ax;    // percentile -> error at index ceil(X n / 100) - 1 of the ascending sort
    std::map<double, double> rx;    // threshold -> fraction strictly above

    bool operator==(const ErrorStats&) const = default;
};

ErrorStats compute_stats(const std::vector<double>& errors, const std::vector<double>& r_thresholds,
                         ErrorKind kind = ErrorKind::ee);
ErrorStats compute_stats(const ErrorMap& errors, const std::vector<double>& r_thresholds);
/// Uses the kind's default thresholds.
ErrorStats compute_stats(const ErrorMap& errors);

struct SequenceStats {
    std::vector<ErrorStats> frames;
    std::vector<double> acc_ee;  // running sum of per-frame Avg.EE
};

SequenceStats accumulate_sequence(const std::vector<ErrorStats>& per_frame);

/// Graymap of clamp(err / scale, 0, 1) * 255; invalid pixels are 0.
PlaneU8 render_error_map(const ErrorMap& errors, double scale);

/// Hue-wheel colour coding: hue = direction, saturation = magnitude / max_magnitude,
/// value 1; unknown pixels black. max_magnitude <= 0 uses the field's largest valid magnitude.
std::vector<PlaneU8> render_flow(const FlowField& field, double max_magnitude = 0.0);

}  // namespace msflow

#endif  // MSFLOW_METRICS_HPP
