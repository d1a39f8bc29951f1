#pragma once

// Likelihood-ratio tests for exponential means and the distribution of their
// p-values under an alternative with effect size delta.
//
// One-sample problems (H0: theta = 1 after scaling) use T = 2 * sum(x), which
// is theta * chi2(2n). Two-sample problems (H0: theta2 = theta1) use
// T = mean(y) / mean(x), which is (theta2 / theta1) * F(2 n2, 2 n1).
// In every case T is delta times its null law, so the non-null tail
// probability of the p-value is a closed-form expression in the null CDF.

#include <algorithm>
#include <cmath>
#include <compare>
#include <numeric>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "expfdr/distributions.hpp"
#include "expfdr/error.hpp"
#include "expfdr/quadrature.hpp"

namespace expfdr {

enum class TestProblem { OneSampleGreater, OneSampleTwoSided, TwoSampleGreater, TwoSampleTwoSided };

constexpr bool is_two_sided(TestProblem p) noexcept {
    return p == TestProblem::OneSampleTwoSided || p == TestProblem::TwoSampleTwoSided;
}

constexpr bool is_two_sample(TestProblem p) noexcept {
    return p == TestProblem::TwoSampleGreater || p == TestProblem::TwoSampleTwoSided;
}

inline std::string_view to_string(TestProblem p) {
    switch (p) {
        case TestProblem::OneSampleGreater: return "one-sample-greater";
        case TestProblem::OneSampleTwoSided: return "one-sample-two-sided";
        case TestProblem::TwoSampleGreater: return "two-sample-greater";
        case TestProblem::TwoSampleTwoSided: return "two-sample-two-sided";
    }
    return "unknown";
}

inline TestProblem parse_test_problem(std::string_view s) {
    for (auto p : {TestProblem::OneSampleGreater, TestProblem::OneSampleTwoSided, TestProblem::TwoSampleGreater,
                   TestProblem::TwoSampleTwoSided}) {
        if (to_string(p) == s) return p;
    }
    throw invalid_parameter("unknown test problem '" + std::string(s) + "'");
}

/// Sample size of a one-sample test (n2 == 0) or the (n1, n2) pair of a two-sample test.
struct SampleSizes {
    int n1 = 0;
    int n2 = 0;

    auto operator<=>(const SampleSizes&) const = default;
};

struct SampleData {
    std::vector<double> x;
    std::optional<std::vector<double>> y;
};

struct TestResult {
    double p_value = 0.0;
    double effect = 0.0;     ///< estimated delta
    double statistic = 0.0;  ///< 2*sum(x) or mean(y)/mean(x)
    SampleSizes sizes;
    TestProblem problem = TestProblem::OneSampleTwoSided;
};

/// p-values are kept inside [eps, 1 - eps].
inline constexpr double kPValueEpsilon = 1e-15;

inline double clamp_p_value(double p) { return std::clamp(p, kPValueEpsilon, 1.0 - kPValueEpsilon); }

/// Null distribution of the test statistic for a problem and sample sizes.
class NullLaw {
public:
    NullLaw(TestProblem problem, SampleSizes sizes) : law_(make(problem, sizes)) {}

    double cdf(double x) const {
        return std::visit([x](const auto& d) { return d.cdf(x); }, law_);
    }
    double sf(double x) const {
        return std::visit([x](const auto& d) { return d.sf(x); }, law_);
    }
    double quantile_upper(double p) const {
        return std::visit([p](const auto& d) { return d.quantile_upper(p); }, law_);
    }
    double quantile_lower(double p) const {
        return std::visit([p](const auto& d) { return d.quantile_lower(p); }, law_);
    }

private:
    static std::variant<ChiSquared, FisherF> make(TestProblem problem, SampleSizes sizes) {
        if (is_two_sample(problem)) {
            detail::require(sizes.n1 >= 1 && sizes.n2 >= 1, "two-sample problem needs n1 >= 1 and n2 >= 1");
            return FisherF(2 * sizes.n2, 2 * sizes.n1);
        }
        detail::require(sizes.n1 >= 1 && sizes.n2 == 0, "one-sample problem needs n >= 1 and no second sample");
        return ChiSquared(2 * sizes.n1);
    }

    std::variant<ChiSquared, FisherF> law_;
};

namespace detail {

inline void check_sample(std::span<const double> x, const char* what) {
    if (x.empty()) throw input_error(std::string(what) + ": sample is empty");
    for (double v : x) {
        if (!(v > 0.0) || !std::isfinite(v)) throw input_error(std::string(what) + ": observations must be positive");
    }
}

inline double p_value_from_tails(double upper, double lower, bool two_sided) {
    return clamp_p_value(two_sided ? 2.0 * std::min(upper, lower) : upper);
}

}  // namespace detail

/// One-sample LRT of H0: theta = 1 against theta > 1 or theta != 1.
/// The data must already be scaled by the null mean.
inline TestResult lrt_one_sample(std::span<const double> x, bool two_sided) {
    detail::check_sample(x, "lrt_one_sample");
    const int n = static_cast<int>(x.size());
    const double sum = std::accumulate(x.begin(), x.end(), 0.0);
    const double t = 2.0 * sum;
    const ChiSquared null(2 * n);
    TestResult r;
    r.statistic = t;
    r.sizes = {n, 0};
    r.problem = two_sided ? TestProblem::OneSampleTwoSided : TestProblem::OneSampleGreater;
    r.p_value = detail::p_value_from_tails(null.sf(t), null.cdf(t), two_sided);
    const double mean = sum / n;
    // One-sided estimates are pulled back to the null boundary from below.
    r.effect = two_sided ? mean : std::max(1.0, mean);
    return r;
}

/// Two-sample LRT of H0: theta2 = theta1 against theta2 > theta1 or theta2 != theta1.
/// `x` is the reference sample (mean theta1), `y` the compared sample (theta2).
inline TestResult lrt_two_sample(std::span<const double> x, std::span<const double> y, bool two_sided) {
    detail::check_sample(x, "lrt_two_sample (x)");
    detail::check_sample(y, "lrt_two_sample (y)");
    const int n1 = static_cast<int>(x.size());
    const int n2 = static_cast<int>(y.size());
    const double mean_x = std::accumulate(x.begin(), x.end(), 0.0) / n1;
    const double mean_y = std::accumulate(y.begin(), y.end(), 0.0) / n2;
    const double t = mean_y / mean_x;
    const FisherF null(2 * n2, 2 * n1);
    TestResult r;
    r.statistic = t;
    r.sizes = {n1, n2};
    r.problem = two_sided ? TestProblem::TwoSampleTwoSided : TestProblem::TwoSampleGreater;
    r.p_value = detail::p_value_from_tails(null.sf(t), null.cdf(t), two_sided);
    // (n1 - 1) / n1 removes the bias of the ratio; undefined for n1 == 1.
    const double unbiased = n1 > 1 ? t * (n1 - 1.0) / n1 : t;
    r.effect = two_sided ? unbiased : std::max(1.0, unbiased);
    return r;
}

inline TestResult run_test(TestProblem problem, const SampleData& data) {
    if (is_two_sample(problem)) {
        if (!data.y) throw input_error("two-sample problem needs a second sample");
        return lrt_two_sample(data.x, *data.y, is_two_sided(problem));
    }
    if (data.y) throw input_error("one-sample problem got a second sample");
    return lrt_one_sample(data.x, is_two_sided(problem));
}

namespace detail {

// Statistic thresholds defining {p > lambda}: T < upper for one-sided tests,
// lower < T < upper for two-sided tests.
struct TailCut {
    double upper = 0.0;
    double lower = 0.0;
};

inline TailCut tail_cut(const NullLaw& law, bool two_sided, double lambda) {
    if (two_sided) return {law.quantile_upper(0.5 * lambda), law.quantile_lower(0.5 * lambda)};
    return {law.quantile_upper(lambda), 0.0};
}

inline double tail_probability(const NullLaw& law, bool two_sided, const TailCut& cut, double delta) {
    const double hi = law.cdf(cut.upper / delta);
    if (!two_sided) return hi;
    return std::clamp(hi - law.cdf(cut.lower / delta), 0.0, 1.0);
}

inline void check_delta(double delta) {
    require(delta > 0.0 && std::isfinite(delta), "effect size delta must be positive and finite");
}

}  // namespace detail

/// Composite rule used for e_delta = int_0^1 Q_delta(lambda) d lambda.
inline const QuadratureGrid& expected_p_rule() {
    static const QuadratureGrid rule = graded_unit_interval_rule(8, 40);
    return rule;
}

/// Q_delta(lambda) = P(p > lambda) for a non-null p-value with effect delta.
inline double q_upper(TestProblem problem, double delta, double lambda, SampleSizes sizes) {
    detail::check_delta(delta);
    detail::require(lambda > 0.0 && lambda < 1.0, "q_upper: lambda must lie in (0,1)");
    const NullLaw law(problem, sizes);
    const bool two = is_two_sided(problem);
    return detail::tail_probability(law, two, detail::tail_cut(law, two, lambda), delta);
}

/// Tail probabilities and expected p-values for one (problem, sizes) pair, with
/// the null quantiles on a lambda grid and on the quadrature nodes computed once.
class NonNullModel {
public:
    NonNullModel(TestProblem problem, SampleSizes sizes, std::span<const double> lambda_grid = {})
        : law_(problem, sizes), two_sided_(is_two_sided(problem)), sizes_(sizes) {
        grid_cuts_.reserve(lambda_grid.size());
        for (double lambda : lambda_grid) {
            detail::require(lambda > 0.0 && lambda < 1.0, "NonNullModel: lambda must lie in (0,1)");
            grid_cuts_.push_back(detail::tail_cut(law_, two_sided_, lambda));
        }
    }

    SampleSizes sizes() const noexcept { return sizes_; }
    std::size_t grid_size() const noexcept { return grid_cuts_.size(); }

    /// Q_delta(lambda_j) for the j-th lambda of the construction grid.
    double tail(double delta, std::size_t j) const {
        detail::check_delta(delta);
        return detail::tail_probability(law_, two_sided_, grid_cuts_.at(j), delta);
    }

    /// e_delta, the mean of a non-null p-value with effect delta.
    double expected_p(double delta) const {
        detail::check_delta(delta);
        const auto& rule = expected_p_rule();
        const auto& cuts = node_cuts();
        double sum = 0.0;
        for (std::size_t k = 0; k < cuts.size(); ++k)
            sum += rule.weights[k] * detail::tail_probability(law_, two_sided_, cuts[k], delta);
        return sum;
    }

private:
    const std::vector<detail::TailCut>& node_cuts() const {
        if (node_cuts_.empty()) {
            const auto& rule = expected_p_rule();
            node_cuts_.reserve(rule.nodes.size());
            for (double lambda : rule.nodes) node_cuts_.push_back(detail::tail_cut(law_, two_sided_, lambda));
        }
        return node_cuts_;
    }

    NullLaw law_;
    bool two_sided_;
    SampleSizes sizes_;
    std::vector<detail::TailCut> grid_cuts_;
    mutable std::vector<detail::TailCut> node_cuts_;
};

/// e_delta = int_0^1 Q_delta(lambda) d lambda.
inline double expected_nonnull_p(TestProblem problem, double delta, SampleSizes sizes) {
    return NonNullModel(problem, sizes).expected_p(delta);
}

}  // namespace expfdr
