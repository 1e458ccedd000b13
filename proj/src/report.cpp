#include "msflow/report.hpp"

#include <json.hpp>

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <sstream>

namespace msflow {

namespace {

using nlohmann::json;

std::string num(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

void check_entry(const ReportEntry& e) {
    if (e.ee.size() != e.ae.size())
        throw InvalidArgument("report entry has mismatched EE/AE frame counts");
    if (e.method.find_first_of(",\n\"") != std::string::npos || e.sequence.find_first_of(",\n\"") != std::string::npos)
        throw InvalidArgument("method and sequence names must not contain commas, quotes or newlines");
}

json stats_to_json(const ErrorStats& s) {
    json ax = json::object(), rx = json::object();
    for (const auto& [k, v] : s.ax)
        ax[num(k)] = v;
    for (const auto& [k, v] : s.rx)
        rx[num(k)] = v;
    return {{"kind", to_string(s.kind)}, {"n_valid", s.n_valid}, {"n_flagged", s.n_flagged}, {"avg", s.avg},
            {"sd", s.sd},                {"ax", ax},             {"rx", rx}};
}

ErrorStats stats_from_json(const json& j) {
    ErrorStats s;
    s.kind = j.at("kind").get<std::string>() == "AE" ? ErrorKind::ae : ErrorKind::ee;
    s.n_valid = j.at("n_valid").get<Eigen::Index>();
    s.n_flagged = j.at("n_flagged").get<Eigen::Index>();
    s.avg = j.at("avg").get<double>();
    s.sd = j.at("sd").get<double>();
    for (const auto& [k, v] : j.at("ax").items())
        s.ax[std::stod(k)] = v.get<double>();
    for (const auto& [k, v] : j.at("rx").items())
        s.rx[std::stod(k)] = v.get<double>();
    return s;
}

void write_text(const std::filesystem::path& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    if (!out)
        throw IoError("cannot open " + path.string() + " for writing");
    out << text;
    if (!out)
        throw IoError("failed writing " + path.string());
}

}  // namespace

std::string format_report_csv(const Report& report) {
    std::ostringstream out;
    for (std::size_t i = 0; i < kReportColumns.size(); ++i)
        out << (i ? "," : "") << kReportColumns[i];
    out << '\n';
    for (const auto& e : report.entries) {
        check_entry(e);
        const SequenceStats seq = e.ee.empty() ? SequenceStats{} : accumulate_sequence(e.ee);
        for (std::size_t f = 0; f < e.ee.size(); ++f)
            for (const ErrorStats* s : {&e.ee[f], &e.ae[f]}) {
                if (s->rx.size() != 4 || s->ax.size() != kPercentiles.size())
                    throw InvalidArgument("report rows need 4 RX thresholds and the standard percentiles");
                out << e.method << ',' << e.sequence << ',' << f << ',' << to_string(s->kind) << ',' << s->n_valid
                    << ',' << num(s->avg) << ',' << num(s->sd);
                for (double p : kPercentiles)
                    out << ',' << num(s->ax.at(p));
                for (const auto& [t, r] : s->rx)
                    out << ',' << num(r);
                out << ',';
                if (s->kind == ErrorKind::ee)
                    out << num(seq.acc_ee[f]);
                out << '\n';
            }
    }
    return out.str();
}

std::string format_report_json(const Report& report) {
    json entries = json::array();
    for (const auto& e : report.entries) {
        check_entry(e);
        json ee = json::array(), ae = json::array();
        for (const auto& s : e.ee)
            ee.push_back(stats_to_json(s));
        for (const auto& s : e.ae)
            ae.push_back(stats_to_json(s));
        json acc = json::array();
        if (!e.ee.empty())
            acc = accumulate_sequence(e.ee).acc_ee;
        entries.push_back({{"method", e.method}, {"sequence", e.sequence}, {"ee", ee}, {"ae", ae}, {"acc_ee", acc}});
    }
    const json doc{{"ae_convention", "augmented (u,v,1) angle in degrees"},
                   {"ax_rank", "ceil(X*n/100)-1 on ascending sort"},
                   {"rx_rule", "fraction strictly above X"},
                   {"parameters", report.parameters},
                   {"entries", entries}};
    return doc.dump(2) + "\n";
}

Report parse_report_json(const std::string& text) {
    const json doc = json::parse(text);
    Report r;
    r.parameters = doc.at("parameters").get<std::map<std::string, std::string>>();
    for (const auto& e : doc.at("entries")) {
        ReportEntry entry;
        entry.method = e.at("method").get<std::string>();
        entry.sequence = e.at("sequence").get<std::string>();
        for (const auto& s : e.at("ee"))
            entry.ee.push_back(stats_from_json(s));
        for (const auto& s : e.at("ae"))
            entry.ae.push_back(stats_from_json(s));
        r.entries.push_back(std::move(entry));
    }
    return r;
}

void write_report(const Report& report, const std::filesystem::path& stem) {
    const std::string csv = format_report_csv(report);
    const std::string js = format_report_json(report);
    write_text(std::filesystem::path(stem).concat(".csv"), csv);
    write_text(std::filesystem::path(stem).concat(".json"), js);
}

std::vector<std::pair<std::string, double>> rank_methods(const Report& report) {
    std::map<std::string, std::pair<double, std::size_t>> sums;
    for (const auto& e : report.entries)
        for (const auto& s : e.ee) {
            auto& [sum, n] = sums[e.method];
            sum += s.avg;
            ++n;
        }
    std::vector<std::pair<std::string, double>> out;
    for (const auto& [m, sn] : sums)
        out.emplace_back(m, sn.second ? sn.first / double(sn.second) : 0.0);
    std::stable_sort(out.begin(), out.end(), [](const auto& a, const auto& b) { return a.second < b.second; });
    return out;
}

}  // namespace msflow
