#pragma once

// Writing and reading analysis reports.
//
// Output directory layout:
//   pi0_estimates.csv / .json
//   segments.csv / .json      (the JSON file also carries the per-method results)
//   plots/adjusted_p.csv      segment index against adjusted p-value
//   plots/q_cutoffs.csv       horizontal reference lines at each q level

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include <json.hpp>

#include "expfdr/analysis.hpp"
#include "expfdr/error.hpp"

namespace expfdr {

namespace detail {

inline std::string num(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

template <class T>
std::string opt_num(const std::optional<T>& v) {
    return v ? num(static_cast<double>(*v)) : std::string();
}

inline std::string csv_field(const std::string& s) {
    if (s.find_first_of(",\"\n") == std::string::npos) return s;
    std::string out = "\"";
    for (char c : s) out += c == '"' ? std::string("\"\"") : std::string(1, c);
    return out + "\"";
}

/// Column suffix of a q level: 0.05 -> "05", 0.1 -> "10", otherwise the plain number.
inline std::string q_label(double q) {
    const double pct = q * 100.0;
    if (std::abs(pct - std::round(pct)) < 1e-9 && pct < 100.0) {
        char buf[8];
        std::snprintf(buf, sizeof buf, "%02d", static_cast<int>(std::lround(pct)));
        return buf;
    }
    return num(q);
}

inline std::ofstream open_out(const std::filesystem::path& path) {
    std::ofstream out(path);
    if (!out) throw input_error("cannot write " + path.string());
    return out;
}

template <class T>
nlohmann::json opt_json(const std::optional<T>& v) {
    return v ? nlohmann::json(*v) : nlohmann::json(nullptr);
}

template <class T>
std::optional<T> json_opt(const nlohmann::json& j, const char* key) {
    if (!j.contains(key) || j.at(key).is_null()) return std::nullopt;
    return j.at(key).get<T>();
}

}  // namespace detail

inline void write_pi0_csv(std::ostream& out, const AnalysisReport& report) {
    out << "method,pi0,lambda,d,e_hat\n";
    for (const auto& e : report.estimates)
        out << e.method << "," << detail::num(e.value) << "," << detail::opt_num(e.lambda) << ","
            << detail::opt_num(e.d) << "," << detail::opt_num(e.e_hat) << "\n";
}

inline void write_segments_csv(std::ostream& out, const AnalysisReport& report) {
    const bool ks = std::any_of(report.segments.begin(), report.segments.end(),
                                [](const SegmentRow& s) { return s.ks_pval.has_value(); });
    out << "segment,n,scaled_mean,ci_lo,ci_hi,pval,adj_pval";
    for (double q : report.q_levels) out << ",reject_q" << detail::q_label(q);
    for (const auto& m : report.methods) out << ",code_" << m.method;
    if (ks) out << ",ks_pval";
    out << "\n";
    for (std::size_t i = 0; i < report.segments.size(); ++i) {
        const auto& s = report.segments[i];
        out << detail::csv_field(s.segment) << "," << s.n << "," << detail::num(s.scaled_mean) << ","
            << detail::num(s.ci_lo) << "," << detail::num(s.ci_hi) << "," << detail::num(s.pval) << ","
            << detail::num(s.adj_pval);
        for (bool r : s.reject) out << "," << (r ? 1 : 0);
        for (const auto& m : report.methods) out << "," << m.code[i];
        if (ks) out << "," << detail::opt_num(s.ks_pval);
        out << "\n";
    }
}

inline nlohmann::json pi0_to_json(const AnalysisReport& report) {
    nlohmann::json rows = nlohmann::json::array();
    for (const auto& e : report.estimates) {
        rows.push_back({{"method", e.method},
                        {"pi0", e.value},
                        {"lambda", detail::opt_json(e.lambda)},
                        {"d", detail::opt_json(e.d)},
                        {"e_hat", detail::opt_json(e.e_hat)}});
    }
    return {{"estimates", rows}};
}

inline nlohmann::json segments_to_json(const AnalysisReport& report) {
    nlohmann::json segments = nlohmann::json::array();
    for (const auto& s : report.segments) {
        nlohmann::json labels = nlohmann::json::array();
        for (const auto& [k, v] : s.labels) labels.push_back({k, v});
        segments.push_back({{"segment", s.segment},
                            {"n", s.n},
                            {"scaled_mean", s.scaled_mean},
                            {"ci_lo", s.ci_lo},
                            {"ci_hi", s.ci_hi},
                            {"pval", s.pval},
                            {"adj_pval", s.adj_pval},
                            {"reject", s.reject},
                            {"ks_pval", detail::opt_json(s.ks_pval)},
                            {"labels", labels}});
    }
    nlohmann::json methods = nlohmann::json::array();
    for (const auto& m : report.methods)
        methods.push_back({{"method", m.method}, {"pi0", m.pi0}, {"adjusted", m.adjusted}, {"code", m.code}});
    return {{"theta0", detail::opt_json(report.theta0)},
            {"q_levels", report.q_levels},
            {"primary", report.primary},
            {"ks_failures", detail::opt_json(report.ks_failures)},
            {"ks_alpha", detail::opt_json(report.ks_alpha)},
            {"methods", methods},
            {"segments", segments}};
}

inline AnalysisReport report_from_json(const nlohmann::json& pi0_json, const nlohmann::json& seg_json) {
    AnalysisReport report;
    try {
        for (const auto& e : pi0_json.at("estimates")) {
            Pi0Row row;
            row.method = e.at("method").get<std::string>();
            row.value = e.at("pi0").get<double>();
            row.lambda = detail::json_opt<double>(e, "lambda");
            row.d = detail::json_opt<double>(e, "d");
            row.e_hat = detail::json_opt<double>(e, "e_hat");
            report.estimates.push_back(row);
        }
        report.theta0 = detail::json_opt<double>(seg_json, "theta0");
        report.q_levels = seg_json.at("q_levels").get<std::vector<double>>();
        report.primary = seg_json.at("primary").get<std::string>();
        report.ks_failures = detail::json_opt<int>(seg_json, "ks_failures");
        report.ks_alpha = detail::json_opt<double>(seg_json, "ks_alpha");
        for (const auto& m : seg_json.at("methods")) {
            MethodResult r;
            r.method = m.at("method").get<std::string>();
            r.pi0 = m.at("pi0").get<double>();
            r.adjusted = m.at("adjusted").get<std::vector<double>>();
            r.code = m.at("code").get<std::vector<int>>();
            report.methods.push_back(std::move(r));
        }
        for (const auto& s : seg_json.at("segments")) {
            SegmentRow row;
            row.segment = s.at("segment").get<std::string>();
            row.n = s.at("n").get<int>();
            row.scaled_mean = s.at("scaled_mean").get<double>();
            row.ci_lo = s.at("ci_lo").get<double>();
            row.ci_hi = s.at("ci_hi").get<double>();
            row.pval = s.at("pval").get<double>();
            row.adj_pval = s.at("adj_pval").get<double>();
            row.reject = s.at("reject").get<std::vector<bool>>();
            row.ks_pval = detail::json_opt<double>(s, "ks_pval");
            for (const auto& kv : s.at("labels"))
                row.labels.emplace_back(kv.at(0).get<std::string>(), kv.at(1).get<std::string>());
            report.segments.push_back(std::move(row));
        }
    } catch (const nlohmann::json::exception& e) {
        throw input_error(std::string("malformed report: ") + e.what());
    }
    return report;
}

inline void write_report(const std::filesystem::path& dir, const AnalysisReport& report) {
    std::filesystem::create_directories(dir / "plots");
    {
        auto out = detail::open_out(dir / "pi0_estimates.csv");
        write_pi0_csv(out, report);
    }
    {
        auto out = detail::open_out(dir / "segments.csv");
        write_segments_csv(out, report);
    }
    detail::open_out(dir / "pi0_estimates.json") << pi0_to_json(report).dump(2) << "\n";
    detail::open_out(dir / "segments.json") << segments_to_json(report).dump(2) << "\n";
    {
        auto out = detail::open_out(dir / "plots" / "adjusted_p.csv");
        out << "index,adj_pval\n";
        for (std::size_t i = 0; i < report.segments.size(); ++i)
            out << i + 1 << "," << detail::num(report.segments[i].adj_pval) << "\n";
    }
    {
        auto out = detail::open_out(dir / "plots" / "q_cutoffs.csv");
        out << "q\n";
        for (double q : report.q_levels) out << detail::num(q) << "\n";
    }
}

inline AnalysisReport read_report(const std::filesystem::path& dir) {
    auto load = [](const std::filesystem::path& p) {
        std::ifstream in(p);
        if (!in) throw input_error("cannot open " + p.string());
        try {
            return nlohmann::json::parse(in);
        } catch (const nlohmann::json::exception& e) {
            throw input_error(p.string() + ": " + e.what());
        }
    };
    return report_from_json(load(dir / "pi0_estimates.json"), load(dir / "segments.json"));
}

}  // namespace expfdr
