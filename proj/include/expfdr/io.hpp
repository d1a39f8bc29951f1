#pragma once

// Readers for segmented lifetime data and per-segment summary files.
//
// Raw input is long format, one observation per row:
//
//   segment_id,value[,label columns...]
//
// comma or tab separated (detected from the header). Summary input carries
// one row per segment with columns segment, n, pval, del separated by
// whitespace and/or commas.

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <istream>
#include <map>
#include <sstream>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "expfdr/error.hpp"

namespace expfdr {

struct SegmentRecord {
    std::string segment_id;
    std::vector<std::pair<std::string, std::string>> labels;
    std::vector<double> samples;
};

struct SummaryRecord {
    long segment = 0;
    int n = 0;
    double pval = 0.0;
    double del = 0.0;

    bool operator==(const SummaryRecord&) const = default;
};

namespace detail {

inline std::string trim(std::string_view s) {
    const auto first = s.find_first_not_of(" \t\r\n");
    if (first == std::string_view::npos) return {};
    const auto last = s.find_last_not_of(" \t\r\n");
    return std::string(s.substr(first, last - first + 1));
}

inline std::vector<std::string> split(const std::string& line, char delim) {
    std::vector<std::string> out;
    std::string field;
    std::istringstream in(line);
    while (std::getline(in, field, delim)) out.push_back(trim(field));
    if (!line.empty() && line.back() == delim) out.emplace_back();
    return out;
}

// Splits on any run of commas and whitespace; double quotes are dropped.
inline std::vector<std::string> split_loose(const std::string& line) {
    std::vector<std::string> out;
    std::string cur;
    for (char c : line) {
        if (c == '"') continue;
        if (c == ',' || c == ' ' || c == '\t' || c == '\r' || c == '\n') {
            if (!cur.empty()) out.push_back(std::move(cur));
            cur.clear();
        } else {
            cur += c;
        }
    }
    if (!cur.empty()) out.push_back(std::move(cur));
    return out;
}

inline bool parse_double(const std::string& s, double& out) {
    if (s.empty()) return false;
    const char* end = s.data() + s.size();
    auto [ptr, ec] = std::from_chars(s.data(), end, out);
    return ec == std::errc() && ptr == end;
}

template <class Int>
bool parse_integer(const std::string& s, Int& out) {
    if (s.empty()) return false;
    const char* end = s.data() + s.size();
    auto [ptr, ec] = std::from_chars(s.data(), end, out);
    return ec == std::errc() && ptr == end;
}

inline std::string at_line(const std::string& source, std::size_t line) {
    return source + ":" + std::to_string(line) + ": ";
}

inline bool blank(const std::string& line) { return trim(line).empty(); }

}  // namespace detail

/// Segments in order of first appearance; samples keep file order within a segment.
inline std::vector<SegmentRecord> parse_segments(std::istream& in, const std::string& source = "<input>") {
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (!detail::blank(line)) break;
    }
    if (detail::blank(line)) throw input_error(source + ": missing header");
    if (line.size() >= 3 && line.compare(0, 3, "\xEF\xBB\xBF") == 0) line.erase(0, 3);
    const char delim = line.find('\t') != std::string::npos ? '\t' : ',';
    const auto header = detail::split(line, delim);
    if (header.size() < 2 || header[0] != "segment_id" || header[1] != "value")
        throw input_error(detail::at_line(source, line_no) + "header must start with segment_id,value");

    std::vector<SegmentRecord> records;
    std::map<std::string, std::size_t> index;
    while (std::getline(in, line)) {
        ++line_no;
        if (detail::blank(line)) continue;
        const auto fields = detail::split(line, delim);
        const std::string where = detail::at_line(source, line_no);
        if (fields.size() != header.size())
            throw input_error(where + "expected " + std::to_string(header.size()) + " fields, found " +
                              std::to_string(fields.size()));
        if (fields[0].empty()) throw input_error(where + "empty segment_id");
        double value = 0.0;
        if (!detail::parse_double(fields[1], value) || !std::isfinite(value))
            throw input_error(where + "value '" + fields[1] + "' is not a number");
        if (!(value > 0.0)) throw input_error(where + "value must be positive, got " + fields[1]);

        std::vector<std::pair<std::string, std::string>> labels;
        for (std::size_t k = 2; k < header.size(); ++k) labels.emplace_back(header[k], fields[k]);

        auto [it, inserted] = index.emplace(fields[0], records.size());
        if (inserted) {
            records.push_back({fields[0], std::move(labels), {}});
        } else if (records[it->second].labels != labels) {
            throw input_error(where + "labels differ from earlier rows of segment " + fields[0]);
        }
        records[it->second].samples.push_back(value);
    }
    if (records.empty()) throw input_error(source + ": no observations");
    return records;
}

inline std::vector<SegmentRecord> load_segments(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw input_error("cannot open " + path);
    return parse_segments(in, path);
}

inline std::vector<SummaryRecord> parse_summary(std::istream& in, const std::string& source = "<input>") {
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (!detail::blank(line)) break;
    }
    const auto header = detail::split_loose(line);
    auto column = [&](const char* name) {
        const auto it = std::find(header.begin(), header.end(), name);
        if (it == header.end())
            throw input_error(detail::at_line(source, line_no) + "missing column '" + name + "' in header");
        return static_cast<std::size_t>(it - header.begin());
    };
    const std::size_t c_segment = column("segment");
    const std::size_t c_n = column("n");
    const std::size_t c_pval = column("pval");
    const std::size_t c_del = column("del");

    std::vector<SummaryRecord> records;
    while (std::getline(in, line)) {
        ++line_no;
        if (detail::blank(line)) continue;
        auto f = detail::split_loose(line);
        const std::string where = detail::at_line(source, line_no);
        // Tables written with row names carry one extra leading field.
        if (f.size() == header.size() + 1) f.erase(f.begin());
        if (f.size() != header.size())
            throw input_error(where + "expected " + std::to_string(header.size()) + " fields, found " +
                              std::to_string(f.size()));
        SummaryRecord r;
        if (!detail::parse_integer(f[c_segment], r.segment)) throw input_error(where + "bad segment '" + f[c_segment] + "'");
        if (!detail::parse_integer(f[c_n], r.n) || r.n < 1) throw input_error(where + "bad sample size '" + f[c_n] + "'");
        if (!detail::parse_double(f[c_pval], r.pval) || !(r.pval > 0.0 && r.pval < 1.0))
            throw input_error(where + "pval must lie in (0,1), got '" + f[c_pval] + "'");
        if (!detail::parse_double(f[c_del], r.del) || !(r.del > 0.0) || !std::isfinite(r.del))
            throw input_error(where + "del must be positive, got '" + f[c_del] + "'");
        records.push_back(r);
    }
    if (records.empty()) throw input_error(source + ": no summary rows");
    return records;
}

inline std::vector<SummaryRecord> load_summary(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw input_error("cannot open " + path);
    return parse_summary(in, path);
}

}  // namespace expfdr
