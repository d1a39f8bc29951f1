#include <catch_amalgamated.hpp>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "expfdr/expfdr.hpp"

using namespace expfdr;
using Catch::Matchers::ContainsSubstring;
using Catch::Matchers::WithinAbs;
using Catch::Matchers::WithinRel;

namespace {

std::filesystem::path scratch_dir(const std::string& name) {
    auto dir = std::filesystem::temp_directory_path() / ("expfdr_test_" + name);
    std::filesystem::remove_all(dir);
    std::filesystem::create_directories(dir);
    return dir;
}

std::string error_of(const std::string& text, bool summary = false) {
    std::istringstream in(text);
    try {
        if (summary)
            parse_summary(in, "f");
        else
            parse_segments(in, "f");
    } catch (const input_error& e) {
        return e.what();
    }
    return "";
}

// 40 segments at theta0, 22 at theta0 / 2 and 22 at 1.5 theta0, n = 35.
std::vector<SegmentRecord> synthetic_84(std::uint64_t seed, double theta0) {
    std::mt19937_64 gen(seed);
    std::vector<SegmentRecord> out;
    for (int i = 0; i < 84; ++i) {
        const double theta = i < 40 ? theta0 : (i < 62 ? 0.5 * theta0 : 1.5 * theta0);
        std::exponential_distribution<double> law(1.0 / theta);
        SegmentRecord r;
        r.segment_id = std::to_string(i + 1);
        r.labels = {{"zone", std::to_string(i % 7 + 1)}, {"month", std::to_string(i / 7 + 1)}};
        for (int k = 0; k < 35; ++k) r.samples.push_back(law(gen));
        out.push_back(std::move(r));
    }
    return out;
}

std::vector<std::size_t> rejected(const MethodResult& m, std::size_t level) {
    std::vector<std::size_t> out;
    for (std::size_t i = 0; i < m.code.size(); ++i)
        if (m.code[i] >= static_cast<int>(level)) out.push_back(i);
    return out;
}

const MethodResult& method(const AnalysisReport& r, const std::string& name) {
    for (const auto& m : r.methods)
        if (m.method == name) return m;
    throw std::runtime_error("no method " + name);
}

double estimate(const AnalysisReport& r, const std::string& name) {
    for (const auto& e : r.estimates)
        if (e.method == name) return e.value;
    throw std::runtime_error("no estimate " + name);
}

AnalysisOptions fast_options() {
    AnalysisOptions o;
    o.ks_resamples = 0;
    return o;
}

}  // namespace

TEST_CASE("long-format segments", "[io]") {
    std::istringstream in("segment_id,value\nA,1.5\nB,2\nA,3\n\nB,4.25\nA,0.5\nB,1e3\n");
    const auto s = parse_segments(in);
    REQUIRE(s.size() == 2);
    CHECK(s[0].segment_id == "A");
    CHECK(s[0].samples == std::vector<double>{1.5, 3.0, 0.5});
    CHECK(s[1].samples == std::vector<double>{2.0, 4.25, 1000.0});
    CHECK(s[0].labels.empty());

    std::istringstream tabs("segment_id\tvalue\tzone\tmonth\n7\t10\t2\tAPR\n7\t12\t2\tAPR\n");
    const auto t = parse_segments(tabs);
    REQUIRE(t.size() == 1);
    CHECK(t[0].labels == std::vector<std::pair<std::string, std::string>>{{"zone", "2"}, {"month", "APR"}});

    std::istringstream bom("\xEF\xBB\xBFsegment_id,value\n1,2\n");
    CHECK(parse_segments(bom).size() == 1);
}

TEST_CASE("segment loader diagnostics", "[io]") {
    CHECK_THAT(error_of("segment_id,value\n1,2\n1,0\n"), ContainsSubstring("f:3:") && ContainsSubstring("positive"));
    CHECK_THAT(error_of("segment_id,value\n1,-4\n"), ContainsSubstring("f:2:"));
    CHECK_THAT(error_of("segment_id,value\n1,2\n1,abc\n"), ContainsSubstring("f:3:") && ContainsSubstring("abc"));
    CHECK_THAT(error_of("segment_id,value\n1,2,3\n"), ContainsSubstring("f:2:") && ContainsSubstring("fields"));
    CHECK_THAT(error_of("segment_id,value\n,2\n"), ContainsSubstring("empty segment_id"));
    CHECK_THAT(error_of("id,value\n1,2\n"), ContainsSubstring("header"));
    CHECK_THAT(error_of("segment_id,value\n"), ContainsSubstring("no observations"));
    CHECK_THAT(error_of(""), ContainsSubstring("missing header"));
    CHECK_THAT(error_of("segment_id,value,zone\n1,2,A\n1,3,B\n"), ContainsSubstring("f:3:") && ContainsSubstring("labels"));
    CHECK_THROWS_AS(load_segments("/nonexistent/segments.csv"), input_error);
}

TEST_CASE("summary files", "[io]") {
    std::istringstream in("segment n pval del\n16 34 0.002 1.44\n17 20 0.5 0.9\n");
    const auto s = parse_summary(in);
    REQUIRE(s.size() == 2);
    CHECK(s[0] == SummaryRecord{16, 34, 0.002, 1.44});

    std::istringstream commas("segment,n,pval,del\n1,10,0.3,1.1\n");
    CHECK(parse_summary(commas)[0] == SummaryRecord{1, 10, 0.3, 1.1});

    // Columns found by name; quoted headers and a leading row name are accepted.
    std::istringstream quoted("\"n\" \"segment\" \"del\" \"pval\"\n\"1\" 12 3 0.8 0.25\n");
    CHECK(parse_summary(quoted)[0] == SummaryRecord{3, 12, 0.25, 0.8});

    CHECK_THAT(error_of("segment n pval\n1 2 0.5\n", true), ContainsSubstring("missing column 'del'"));
    CHECK_THAT(error_of("segment n pval del\n1 2 1.5 1\n", true), ContainsSubstring("f:2:") && ContainsSubstring("pval"));
    CHECK_THAT(error_of("segment n pval del\n1 2 0.5 1\n1 2 0 1\n", true), ContainsSubstring("f:3:"));
    CHECK_THAT(error_of("segment n pval del\n1 2 0.5 -1\n", true), ContainsSubstring("del"));
    CHECK_THAT(error_of("segment n pval del\n1 2 0.5\n", true), ContainsSubstring("fields"));
    CHECK_THAT(error_of("segment n pval del\n", true), ContainsSubstring("no summary rows"));

    const auto example = load_summary(std::string(EXPFDR_SOURCE_DIR) + "/data/summary_example.txt");
    CHECK(example.size() == 84);
    std::vector<double> p;
    for (const auto& r : example) p.push_back(r.pval);
    CHECK(PValueSet(p).m() == 84);
}

TEST_CASE("exact confidence interval for the mean", "[analysis]") {
    const auto ci = ci_theta(std::vector<double>{1.0});
    CHECK_THAT(ci.lower, WithinRel(1.0 / std::log(40.0), 1e-12));
    CHECK_THAT(ci.upper, WithinRel(-1.0 / std::log(0.975), 1e-12));
    CHECK_THAT(ci.lower, WithinAbs(0.2711, 5e-5));
    CHECK_THAT(ci.upper, WithinAbs(39.498, 5e-4));

    const std::vector<double> x{0.3, 2.0, 1.1, 0.7};
    std::vector<double> scaled;
    for (double v : x) scaled.push_back(8.5 * v);
    const auto a = ci_theta(x);
    const auto b = ci_theta(scaled);
    CHECK_THAT(b.lower, WithinRel(8.5 * a.lower, 1e-14));
    CHECK_THAT(b.upper, WithinRel(8.5 * a.upper, 1e-14));
    CHECK(a.lower < 1.025);
    CHECK(a.upper > 1.025);

    std::mt19937_64 gen(1234);
    std::exponential_distribution<double> unit(1.0);
    int covered = 0;
    for (int r = 0; r < 10000; ++r) {
        std::vector<double> s(30);
        for (auto& v : s) v = unit(gen);
        const auto c = ci_theta(s);
        covered += c.lower < 1.0 && 1.0 < c.upper ? 1 : 0;
    }
    CHECK(std::abs(covered / 10000.0 - 0.95) <= 0.01);
    CHECK_THROWS_AS(ci_theta(std::vector<double>{}), invalid_parameter);
}

TEST_CASE("bootstrap KS test of exponentiality", "[analysis][slow]") {
    std::mt19937_64 gen(555);
    std::exponential_distribution<double> unit(1.0);
    int rejections = 0;
    for (int trial = 0; trial < 1000; ++trial) {
        std::vector<double> s(50);
        for (auto& v : s) v = unit(gen);
        Stream stream(7, "ks", static_cast<std::uint64_t>(trial));
        const double p = ks_exponentiality(s, 99, stream);
        CHECK(p > 0.0);
        CHECK(p <= 1.0);
        rejections += p <= 0.05 ? 1 : 0;
    }
    // 0.05 +- 3 binomial sd over 1000 trials
    CHECK(std::abs(rejections / 1000.0 - 0.05) <= 3.0 * std::sqrt(0.05 * 0.95 / 1000.0));

    Stream stream(1, "ks", 0);
    CHECK(ks_exponentiality(std::vector<double>(20, 3.0), 199, stream) == 1.0 / 200.0);
    CHECK_THROWS_AS(ks_exponentiality(std::vector<double>{1.0, 2.0}, 99, stream), invalid_parameter);
    CHECK_THROWS_AS(ks_exponentiality(std::vector<double>{1.0, 2.0, 3.0}, 50, stream), invalid_parameter);

    // Uniform data is far from exponential.
    std::uniform_real_distribution<double> u(1.0, 2.0);
    std::vector<double> flat(200);
    for (auto& v : flat) v = u(gen);
    CHECK(ks_exponentiality(flat, 99, stream) == 0.01);
}

TEST_CASE("identical null segments reject nothing", "[analysis]") {
    std::vector<SegmentRecord> segs{{"a", {}, {1.0, 2.0, 3.0}}, {"b", {}, {1.0, 2.0, 3.0}}};
    // Place the statistic 2 sum(x) / theta0 on the null median of chi2(6).
    AnalysisOptions o = fast_options();
    o.theta0 = 12.0 / chi2_quantile_upper(0.5, 6);
    o.q_levels = {0.05, 0.1, 0.5, 0.99};
    const auto r = analyze(segs, o);
    for (const auto& s : r.segments) {
        CHECK(s.pval >= 1.0 - 1e-14);
        for (bool f : s.reject) CHECK_FALSE(f);
    }
    // theta0 at the common mean is not the boundary: T = 2n sits above the median.
    o.theta0 = 2.0;
    const auto at_mean = analyze(segs, o);
    CHECK_THAT(at_mean.segments[0].pval, WithinAbs(2.0 * chi2_sf(6.0, 6), 1e-14));
    CHECK_FALSE(at_mean.segments[0].reject[2]);
    // Default theta0 is the grand mean.
    CHECK(*analyze(segs, fast_options()).theta0 == 2.0);
}

TEST_CASE("forcing pi0 = 1 on a summary gives classical BH", "[analysis]") {
    const auto summary = load_summary(std::string(EXPFDR_SOURCE_DIR) + "/data/summary_example.txt");
    AnalysisOptions o = fast_options();
    o.pi0_override = 1.0;
    const auto r = analyze(summary, o);
    std::vector<double> p;
    for (const auto& s : summary) p.push_back(s.pval);
    const auto bh = bh_adjust(p, 1.0);
    for (std::size_t i = 0; i < p.size(); ++i) {
        CHECK(r.segments[i].adj_pval == bh.adjusted[i]);
        CHECK(r.segments[i].reject[0] == (bh.adjusted[i] <= 0.05));
        CHECK(r.segments[i].reject[1] == (bh.adjusted[i] <= 0.10));
    }
    CHECK(method(r, "u").pi0 == 1.0);
    CHECK(method(r, "bh").adjusted == bh.adjusted);
    // The summary CI comes from n * del.
    CHECK_THAT(r.segments[0].ci_lo, WithinRel(ci_theta_from_sum(summary[0].n * summary[0].del, summary[0].n).lower, 1e-15));
    CHECK_FALSE(r.theta0.has_value());
}

TEST_CASE("analysis is invariant to the measurement unit", "[analysis]") {
    const auto segs = synthetic_84(3, 10000.0);
    AnalysisOptions o = fast_options();
    o.theta0 = 10000.0;
    const auto base = analyze(segs, o);

    // A power of two rescales exactly.
    auto exact = segs;
    for (auto& s : exact)
        for (auto& v : s.samples) v *= 1024.0;
    o.theta0 = 10000.0 * 1024.0;
    const auto r2 = analyze(exact, o);
    CHECK(r2.segments == base.segments);
    CHECK(r2.estimates == base.estimates);

    // Miles to kilometres: equal up to rounding in the scaled data.
    auto km = segs;
    for (auto& s : km)
        for (auto& v : s.samples) v *= 1.609344;
    o.theta0 = 10000.0 * 1.609344;
    const auto r3 = analyze(km, o);
    for (std::size_t i = 0; i < 84; ++i) {
        CHECK_THAT(r3.segments[i].pval, WithinRel(base.segments[i].pval, 1e-9));
        CHECK_THAT(r3.segments[i].adj_pval, WithinRel(base.segments[i].adj_pval, 1e-9));
        CHECK(r3.segments[i].reject == base.segments[i].reject);
    }
    for (std::size_t k = 0; k < base.estimates.size(); ++k)
        CHECK_THAT(r3.estimates[k].value, WithinAbs(base.estimates[k].value, 1e-9));

    // Without an explicit theta0 the grand mean scales along with the data.
    const auto d1 = analyze(segs, fast_options());
    const auto d2 = analyze(exact, fast_options());
    CHECK(d2.segments == d1.segments);
}

TEST_CASE("synthetic 84-segment study recovers pi0", "[analysis]") {
    const double truth = 40.0 / 84.0;
    int within = 0;
    double sum_u = 0.0;
    for (std::uint64_t seed = 1; seed <= 20; ++seed) {
        const auto segs = synthetic_84(seed, 10000.0);
        AnalysisOptions o = fast_options();
        o.theta0 = 10000.0;
        o.seed = seed;
        const auto r = analyze(segs, o);
        const double u = estimate(r, "u");
        const double e = estimate(r, "e");
        INFO("seed " << seed << " u " << u << " e " << e);
        if (seed == 1) {
            CHECK(std::abs(u - truth) <= 0.15);
            CHECK(std::abs(e - truth) <= 0.15);
        }
        within += std::abs(u - truth) <= 0.15 && std::abs(e - truth) <= 0.15 ? 1 : 0;
        sum_u += u;
        for (std::size_t level : {1u, 2u}) {
            const auto adaptive = rejected(method(r, "u"), level);
            const auto plain = rejected(method(r, "bh"), level);
            CHECK(std::includes(adaptive.begin(), adaptive.end(), plain.begin(), plain.end()));
        }
        for (const auto& s : r.segments) {
            CHECK(s.ci_lo < s.scaled_mean);
            CHECK(s.scaled_mean < s.ci_hi);
            if (s.reject[0]) CHECK(s.reject[1]);  // q = 0.05 implies q = 0.10
        }
    }
    // With m = 84 the estimates have a standard deviation near 0.075, so about one
    // data set in seven has u or e outside +-0.15 (3 sd binomial bound below).
    CHECK(within >= 14);
    CHECK(std::abs(sum_u / 20.0 - truth) <= 0.05);
}

TEST_CASE("analysis options are checked", "[analysis]") {
    const auto segs = synthetic_84(9, 1.0);
    AnalysisOptions o = fast_options();
    o.q_levels = {0.1, 0.05};
    CHECK_THROWS_AS(analyze(segs, o), invalid_parameter);
    o = fast_options();
    o.estimators = {Estimator::Average};
    CHECK_THROWS_AS(analyze(segs, o), invalid_parameter);  // primary u not selected
    o.primary = Estimator::Average;
    const auto r = analyze(segs, o);
    CHECK(r.estimates.size() == 1);
    CHECK(r.methods.size() == 2);
    o = fast_options();
    o.theta0 = -1.0;
    CHECK_THROWS_AS(analyze(segs, o), invalid_parameter);
    CHECK_THROWS_AS(analyze(std::vector<SegmentRecord>{}, fast_options()), input_error);
}

TEST_CASE("reports reload without loss", "[report]") {
    auto segs = synthetic_84(11, 5000.0);
    segs[3].segment_id = "zone 2, \"APR\"";
    AnalysisOptions o;
    o.ks_resamples = 99;
    const auto report = analyze(segs, o);
    REQUIRE(report.ks_failures.has_value());
    const auto dir = scratch_dir("report");
    write_report(dir, report);
    const auto back = read_report(dir);
    CHECK(back == report);
    CHECK(back.segments[3].labels == segs[3].labels);

    for (const char* f : {"pi0_estimates.csv", "segments.csv", "pi0_estimates.json", "segments.json",
                          "plots/adjusted_p.csv", "plots/q_cutoffs.csv"})
        CHECK(std::filesystem::exists(dir / f));

    std::ifstream csv(dir / "segments.csv");
    std::string header;
    std::getline(csv, header);
    CHECK(header ==
          "segment,n,scaled_mean,ci_lo,ci_hi,pval,adj_pval,reject_q05,reject_q10,code_bootstrap,code_average,code_u,"
          "code_e,code_bh,ks_pval");
    std::string row;
    int rows = 0;
    while (std::getline(csv, row)) ++rows;
    CHECK(rows == 84);

    // CSV numbers carry 17 significant digits.
    std::ifstream plot(dir / "plots" / "adjusted_p.csv");
    std::getline(plot, header);
    CHECK(header == "index,adj_pval");
    std::getline(plot, row);
    CHECK(std::stod(row.substr(row.find(',') + 1)) == report.segments[0].adj_pval);

    std::ofstream(dir / "segments.json") << "{ not json";
    CHECK_THROWS_AS(read_report(dir), input_error);
}

TEST_CASE("bundled example data", "[io]") {
    const auto segs = load_segments(std::string(EXPFDR_SOURCE_DIR) + "/data/segments_example.csv");
    CHECK(segs.size() == 84);
    for (const auto& s : segs) {
        CHECK(s.labels.size() == 2);
        CHECK_FALSE(s.samples.empty());
    }
}
