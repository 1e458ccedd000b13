#ifndef MSFLOW_REPORT_HPP
#define MSFLOW_REPORT_HPP

#include "msflow/metrics.hpp"

#include <filesystem>
#include <map>
#include <string>
#include <utility>
#include <vector>

namespace msflow {

/// Per-frame statistics of one method on one sequence; frame k is index k.
struct ReportEntry {
    std::string method;
    std::string sequence;
    std::vector<ErrorStats> ee;
    std::vector<ErrorStats> ae;

    bool operator==(const ReportEntry&) const = default;
};

struct Report {
    std::vector<ReportEntry> entries;
    std::map<std::string, std::string> parameters;

    bool operator==(const Report&) const = default;
};

inline const std::vector<std::string> kReportColumns{"method", "sequence", "frame", "kind", "n_valid", "avg",
                                                     "sd",     "a50",      "a75",   "a99",  "a100",    "r1",
                                                     "r2",     "r3",       "r4",    "acc"};

/// One row per (method, sequence, frame, kind); acc is filled for EE rows only.
std::string format_report_csv(const Report& report);
std::string format_report_json(const Report& report);
Report parse_report_json(const std::string& text);

/// Writes <stem>.csv and <stem>.json.
void write_report(const Report& report, const std::filesystem::path& stem);

/// Methods ordered by mean per-frame Avg.EE over all their sequences, ascending; ties by name.
std::vector<std::pair<std::string, double>> rank_methods(const Report& report);

}  // namespace msflow

#endif  // MSFLOW_REPORT_HPP
