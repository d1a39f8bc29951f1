#pragma once

// Segment-level analysis: exponentiality check, exact confidence intervals
// for the scaled mean, pi0 estimation and adaptive BH across segments.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "expfdr/adaptive_bh.hpp"
#include "expfdr/distributions.hpp"
#include "expfdr/estimators.hpp"
#include "expfdr/io.hpp"
#include "expfdr/lrt.hpp"
#include "expfdr/random.hpp"

namespace expfdr {

/// sup_x |F_n(x) - (1 - exp(-x / mean))| with the mean fitted from the sample.
inline double ks_statistic_exponential(std::span<const double> samples) {
    std::vector<double> x(samples.begin(), samples.end());
    std::sort(x.begin(), x.end());
    const double n = static_cast<double>(x.size());
    const double mean = std::accumulate(x.begin(), x.end(), 0.0) / n;
    double d = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        const double f = -std::expm1(-x[i] / mean);
        d = std::max({d, (static_cast<double>(i) + 1.0) / n - f, f - static_cast<double>(i) / n});
    }
    return d;
}

/// Parametric-bootstrap KS p-value for an exponential law with unknown mean.
inline double ks_exponentiality(std::span<const double> samples, int resamples, Stream& stream) {
    if (samples.size() < 3) throw invalid_parameter("ks_exponentiality: need at least three observations");
    detail::require(resamples >= 99, "ks_exponentiality: need at least 99 resamples");
    for (double v : samples) {
        if (!(v > 0.0)) throw input_error("ks_exponentiality: observations must be positive");
    }
    const double d = ks_statistic_exponential(samples);
    const double mean = std::accumulate(samples.begin(), samples.end(), 0.0) / static_cast<double>(samples.size());
    std::vector<double> sim(samples.size());
    int exceed = 0;
    for (int b = 0; b < resamples; ++b) {
        for (auto& v : sim) v = sample_exponential(mean, stream);
        if (ks_statistic_exponential(sim) >= d) ++exceed;
    }
    return (1.0 + exceed) / (resamples + 1.0);
}

struct ConfidenceInterval {
    double lower = 0.0;
    double upper = 0.0;
};

/// Exact interval for an exponential mean from sum(x) over n observations.
inline ConfidenceInterval ci_theta_from_sum(double sum, int n, double level = 0.95) {
    detail::require(n >= 1, "ci_theta: need at least one observation");
    detail::require(level > 0.0 && level < 1.0, "ci_theta: level must lie in (0,1)");
    detail::require(sum > 0.0 && std::isfinite(sum), "ci_theta: sum must be positive");
    const ChiSquared chi(2 * n);
    const double alpha = 1.0 - level;
    return {2.0 * sum / chi.quantile_upper(0.5 * alpha), 2.0 * sum / chi.quantile_upper(1.0 - 0.5 * alpha)};
}

inline ConfidenceInterval ci_theta(std::span<const double> samples, double level = 0.95) {
    if (samples.empty()) throw invalid_parameter("ci_theta: need at least one observation");
    return ci_theta_from_sum(std::accumulate(samples.begin(), samples.end(), 0.0), static_cast<int>(samples.size()),
                             level);
}

struct AnalysisOptions {
    std::optional<double> theta0;  ///< raw input only; defaults to the grand mean
    std::vector<double> q_levels{0.05, 0.10};
    std::vector<Estimator> estimators{kEstimators.begin(), kEstimators.end()};
    /// Estimator whose adjusted p-values fill the segment table.
    Estimator primary = Estimator::U;
    /// Replaces the primary estimate when set (1 gives classical BH).
    std::optional<double> pi0_override;
    std::uint64_t seed = 1;
    BootstrapOptions bootstrap;
    /// KS resamples per segment; 0 skips validation.
    int ks_resamples = 999;
    double ks_alpha = 0.05;
    double ci_level = 0.95;
};

struct Pi0Row {
    std::string method;
    double value = 0.0;
    std::optional<double> lambda;
    std::optional<double> d;
    std::optional<double> e_hat;

    bool operator==(const Pi0Row&) const = default;
};

/// Adjusted p-values and rejection codes of one pi0 choice.
struct MethodResult {
    std::string method;
    double pi0 = 1.0;  ///< after flooring at 1/m
    std::vector<double> adjusted;
    std::vector<int> code;  ///< number of q levels at which the segment is rejected

    bool operator==(const MethodResult&) const = default;
};

struct SegmentRow {
    std::string segment;
    int n = 0;
    double scaled_mean = 0.0;
    double ci_lo = 0.0;
    double ci_hi = 0.0;
    double pval = 0.0;
    double adj_pval = 0.0;
    std::vector<bool> reject;  ///< one flag per q level
    std::optional<double> ks_pval;
    std::vector<std::pair<std::string, std::string>> labels;

    bool operator==(const SegmentRow&) const = default;
};

struct AnalysisReport {
    std::optional<double> theta0;
    std::vector<double> q_levels;
    std::string primary;
    std::vector<Pi0Row> estimates;
    std::vector<MethodResult> methods;  ///< selected estimators, then "bh" (pi0 = 1)
    std::vector<SegmentRow> segments;
    std::optional<int> ks_failures;  ///< segments with KS p-value below the alpha
    std::optional<double> ks_alpha;

    bool operator==(const AnalysisReport&) const = default;
};

namespace detail {

struct SegmentTest {
    std::string segment;
    int n = 0;
    double pval = 0.0;
    double effect = 0.0;  ///< scaled mean
    double scaled_sum = 0.0;
    std::vector<std::pair<std::string, std::string>> labels;
};

inline void check_q_levels(const std::vector<double>& q_levels) {
    require(!q_levels.empty(), "analyze: need at least one q level");
    for (double q : q_levels) require(q > 0.0 && q < 1.0, "analyze: q levels must lie in (0,1)");
    require(std::is_sorted(q_levels.begin(), q_levels.end()), "analyze: q levels must be increasing");
}

inline Pi0Row to_row(Estimator e, const Pi0Estimate& est) {
    Pi0Row row;
    row.method = std::string(to_string(e));
    row.value = est.value;
    row.lambda = est.diagnostics.lambda;
    if (est.diagnostics.d) row.d = static_cast<double>(*est.diagnostics.d);
    row.e_hat = est.diagnostics.e_hat;
    return row;
}

inline MethodResult adjust(const std::string& name, const PValueSet& pvals, double pi0,
                           const std::vector<double>& q_levels) {
    MethodResult r;
    r.method = name;
    r.pi0 = floor_pi0(pi0, pvals.m());
    r.adjusted = bh_adjust(pvals, r.pi0).adjusted;
    r.code.assign(pvals.m(), 0);
    for (std::size_t i = 0; i < pvals.m(); ++i) {
        for (double q : q_levels) r.code[i] += r.adjusted[i] <= q ? 1 : 0;
    }
    return r;
}

inline AnalysisReport assemble(const std::vector<SegmentTest>& tests, const AnalysisOptions& options) {
    check_q_levels(options.q_levels);
    require(!options.estimators.empty(), "analyze: no estimator selected");
    require(std::find(options.estimators.begin(), options.estimators.end(), options.primary) !=
                options.estimators.end(),
            "analyze: primary estimator must be among the selected estimators");
    if (options.pi0_override)
        require(*options.pi0_override > 0.0 && *options.pi0_override <= 1.0, "analyze: pi0 override must lie in (0,1]");

    const std::size_t m = tests.size();
    std::vector<double> p(m);
    EffectSet effects;
    effects.problem = TestProblem::OneSampleTwoSided;
    for (std::size_t i = 0; i < m; ++i) {
        p[i] = tests[i].pval;
        effects.effects.push_back(tests[i].effect);
        effects.sizes.push_back({tests[i].n, 0});
    }
    const PValueSet pvals(std::move(p));

    AnalysisReport report;
    report.q_levels = options.q_levels;
    report.primary = std::string(to_string(options.primary));

    // The bias-corrected estimators need the bootstrap estimate as a starting point.
    std::optional<Pi0Estimate> initial;
    auto need = [&](Estimator e) {
        return std::find(options.estimators.begin(), options.estimators.end(), e) != options.estimators.end();
    };
    if (need(Estimator::Bootstrap) || need(Estimator::U) || need(Estimator::E)) {
        if (m < 2) throw input_error("analyze: need at least two segments to estimate pi0");
        Stream boot(options.seed, "bootstrap", 0);
        initial = storey_bootstrap(pvals, options.bootstrap, boot);
    }
    NonNullModelCache cache(effects.problem);
    std::vector<double> values;
    for (Estimator e : options.estimators) {
        Pi0Estimate est;
        switch (e) {
            case Estimator::Bootstrap: est = *initial; break;
            case Estimator::Average: est = average_estimator(pvals); break;
            case Estimator::U: est = pi0_u(pvals, effects, *initial, cache); break;
            case Estimator::E: est = pi0_e(pvals, effects, *initial, cache); break;
        }
        report.estimates.push_back(to_row(e, est));
        double used = est.value;
        if (e == options.primary && options.pi0_override) used = *options.pi0_override;
        report.methods.push_back(adjust(std::string(to_string(e)), pvals, used, options.q_levels));
    }
    report.methods.push_back(adjust("bh", pvals, 1.0, options.q_levels));

    const auto primary_it = std::find(options.estimators.begin(), options.estimators.end(), options.primary);
    const MethodResult& primary = report.methods[static_cast<std::size_t>(primary_it - options.estimators.begin())];
    for (std::size_t i = 0; i < m; ++i) {
        SegmentRow row;
        row.segment = tests[i].segment;
        row.n = tests[i].n;
        row.scaled_mean = tests[i].effect;
        const auto ci = ci_theta_from_sum(tests[i].scaled_sum, tests[i].n, options.ci_level);
        row.ci_lo = ci.lower;
        row.ci_hi = ci.upper;
        row.pval = tests[i].pval;
        row.adj_pval = primary.adjusted[i];
        for (double q : options.q_levels) row.reject.push_back(row.adj_pval <= q);
        row.labels = tests[i].labels;
        report.segments.push_back(std::move(row));
    }
    return report;
}

}  // namespace detail

/// Full analysis of raw segments: scale by theta0, test H0: theta_i = theta0
/// two-sided in every segment, estimate pi0 and adjust.
inline AnalysisReport analyze(const std::vector<SegmentRecord>& segments, const AnalysisOptions& options) {
    if (segments.empty()) throw input_error("analyze: no segments");
    double total = 0.0;
    std::size_t count = 0;
    for (const auto& s : segments) {
        if (s.samples.empty()) throw input_error("analyze: segment " + s.segment_id + " has no observations");
        total += std::accumulate(s.samples.begin(), s.samples.end(), 0.0);
        count += s.samples.size();
    }
    const double theta0 = options.theta0.value_or(total / static_cast<double>(count));
    detail::require(theta0 > 0.0 && std::isfinite(theta0), "analyze: theta0 must be positive");

    std::vector<detail::SegmentTest> tests;
    for (const auto& s : segments) {
        std::vector<double> scaled(s.samples.size());
        std::transform(s.samples.begin(), s.samples.end(), scaled.begin(), [theta0](double v) { return v / theta0; });
        const TestResult t = lrt_one_sample(scaled, true);
        tests.push_back({s.segment_id, t.sizes.n1, t.p_value, t.effect, 0.5 * t.statistic, s.labels});
    }
    AnalysisReport report = detail::assemble(tests, options);
    report.theta0 = theta0;

    if (options.ks_resamples > 0) {
        int failures = 0;
        for (std::size_t i = 0; i < segments.size(); ++i) {
            if (segments[i].samples.size() < 3) continue;
            Stream ks(options.seed, "ks", i);
            const double p = ks_exponentiality(segments[i].samples, options.ks_resamples, ks);
            report.segments[i].ks_pval = p;
            if (p < options.ks_alpha) ++failures;
        }
        report.ks_failures = failures;
        report.ks_alpha = options.ks_alpha;
    }
    return report;
}

/// Analysis from per-segment summaries; p-values and effects are taken as given.
inline AnalysisReport analyze(const std::vector<SummaryRecord>& summary, const AnalysisOptions& options) {
    if (summary.empty()) throw input_error("analyze: no summary rows");
    std::vector<detail::SegmentTest> tests;
    for (const auto& r : summary)
        tests.push_back({std::to_string(r.segment), r.n, r.pval, r.del, r.n * r.del, {}});
    return detail::assemble(tests, options);
}

}  // namespace expfdr
