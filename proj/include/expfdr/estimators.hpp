#pragma once

// Estimators of the proportion of true null hypotheses pi0.
//
//   storey_lambda      W(lambda) / (m (1 - lambda))
//   storey_bootstrap   lambda chosen by bootstrap MSE on a grid
//   average_estimator  mean of storey_lambda over {0.20, 0.25, ..., 0.50}
//   pi0_u              average estimator corrected by the non-null tail mass Q
//   pi0_e              2 * mean(p) corrected by the non-null mean p-value e

#include <algorithm>
#include <array>
#include <cmath>
#include <map>
#include <numeric>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "expfdr/error.hpp"
#include "expfdr/lrt.hpp"
#include "expfdr/random.hpp"

namespace expfdr {

class PValueSet {
public:
    PValueSet() = default;

    explicit PValueSet(std::vector<double> p) : p_(std::move(p)) {
        if (p_.empty()) throw invalid_parameter("PValueSet: need at least one p-value");
        for (double v : p_) {
            if (!(v > 0.0 && v < 1.0)) throw invalid_parameter("PValueSet: p-values must lie in (0,1)");
        }
    }

    std::size_t m() const noexcept { return p_.size(); }
    std::span<const double> values() const noexcept { return p_; }
    double operator[](std::size_t i) const { return p_[i]; }

    double mean() const { return std::accumulate(p_.begin(), p_.end(), 0.0) / static_cast<double>(m()); }

    /// W(lambda) = #{p_i > lambda}
    std::size_t count_above(double lambda) const {
        return static_cast<std::size_t>(std::count_if(p_.begin(), p_.end(), [lambda](double v) { return v > lambda; }));
    }

private:
    std::vector<double> p_;
};

struct EffectSet {
    std::vector<double> effects;     ///< estimated delta_i
    std::vector<SampleSizes> sizes;  ///< per test, or a single entry shared by all tests
    TestProblem problem = TestProblem::OneSampleTwoSided;

    std::size_t size() const noexcept { return effects.size(); }

    SampleSizes sizes_of(std::size_t i) const { return sizes.size() == 1 ? sizes.front() : sizes.at(i); }

    void validate(std::size_t m) const {
        if (effects.size() != m) throw invalid_parameter("EffectSet: length differs from the p-value set");
        if (sizes.size() != 1 && sizes.size() != m)
            throw invalid_parameter("EffectSet: need one shared sample size or one per test");
        for (double d : effects) {
            if (!(d > 0.0) || !std::isfinite(d)) throw invalid_parameter("EffectSet: effects must be positive");
        }
    }
};

enum class Pi0Method { StoreyLambda, StoreyBootstrap, Average, BiasCorrectedU, BiasCorrectedE };

inline std::string_view to_string(Pi0Method method) {
    switch (method) {
        case Pi0Method::StoreyLambda: return "storey";
        case Pi0Method::StoreyBootstrap: return "bootstrap";
        case Pi0Method::Average: return "average";
        case Pi0Method::BiasCorrectedU: return "u";
        case Pi0Method::BiasCorrectedE: return "e";
    }
    return "unknown";
}

struct Pi0Diagnostics {
    std::optional<double> lambda;      ///< chosen lambda (bootstrap)
    std::optional<std::size_t> d;      ///< assumed number of alternatives
    std::vector<double> q_hat;         ///< Q-hat(lambda_j) (pi0_u)
    std::optional<double> e_hat;       ///< e-hat (pi0_e)
    std::optional<double> initial;     ///< initial estimate used for d
};

struct Pi0Estimate {
    double value = 1.0;
    Pi0Method method = Pi0Method::StoreyLambda;
    Pi0Diagnostics diagnostics;
};

/// Lambda grid of the average and bias-corrected estimators.
inline const std::vector<double>& average_lambda_grid() {
    static const std::vector<double> grid{0.20, 0.25, 0.30, 0.35, 0.40, 0.45, 0.50};
    return grid;
}

inline double clamp01(double x) { return std::clamp(x, 0.0, 1.0); }

/// Per-lambda or final estimates with a non-positive denominator are set to 1.
inline constexpr double kDegenerateDenominator = 1e-9;

namespace detail {

inline double storey_ratio(std::size_t above, std::size_t m, double lambda) {
    return static_cast<double>(above) / (static_cast<double>(m) * (1.0 - lambda));
}

// Type-7 sample quantile of an unsorted vector.
inline double quantile_type7(std::vector<double> v, double prob) {
    std::sort(v.begin(), v.end());
    const double h = (static_cast<double>(v.size()) - 1.0) * prob;
    const auto lo = static_cast<std::size_t>(std::floor(h));
    const std::size_t hi = std::min(lo + 1, v.size() - 1);
    return v[lo] + (h - static_cast<double>(lo)) * (v[hi] - v[lo]);
}

}  // namespace detail

/// Unclamped Storey estimate at a single lambda; may exceed 1.
inline double storey_lambda(const PValueSet& pvals, double lambda) {
    detail::require(lambda > 0.0 && lambda < 1.0, "storey_lambda: lambda must lie in (0,1)");
    return detail::storey_ratio(pvals.count_above(lambda), pvals.m(), lambda);
}

struct BootstrapOptions {
    int resamples = 100;
    std::vector<double> grid = default_grid();
    /// Quantile of the clamped grid estimates used as the MSE target; 0 gives the minimum.
    double reference_quantile = 0.2;

    static std::vector<double> default_grid() {
        std::vector<double> g;
        for (int k = 0; k <= 19; ++k) g.push_back(0.05 * k);
        return g;
    }
};

inline Pi0Estimate storey_bootstrap(const PValueSet& pvals, const BootstrapOptions& options, Stream& stream) {
    const std::size_t m = pvals.m();
    if (m < 2) throw invalid_parameter("storey_bootstrap: need at least two p-values");
    detail::require(options.resamples >= 1, "storey_bootstrap: need at least one resample");
    detail::require(!options.grid.empty(), "storey_bootstrap: empty lambda grid");
    detail::require(options.reference_quantile >= 0.0 && options.reference_quantile <= 1.0,
            "storey_bootstrap: reference quantile must lie in [0,1]");
    for (double l : options.grid) detail::require(l >= 0.0 && l < 1.0, "storey_bootstrap: grid must lie in [0,1)");

    const auto& grid = options.grid;
    const std::size_t k = grid.size();
    std::vector<double> estimate(k);
    for (std::size_t j = 0; j < k; ++j) estimate[j] = clamp01(detail::storey_ratio(pvals.count_above(grid[j]), m, grid[j]));
    const double reference = detail::quantile_type7(estimate, options.reference_quantile);

    std::vector<double> mse(k, 0.0);
    std::vector<double> resample(m);
    for (int b = 0; b < options.resamples; ++b) {
        for (auto& v : resample) v = pvals[static_cast<std::size_t>(stream.below(m))];
        for (std::size_t j = 0; j < k; ++j) {
            const auto above = std::count_if(resample.begin(), resample.end(), [&](double v) { return v > grid[j]; });
            const double diff = clamp01(detail::storey_ratio(static_cast<std::size_t>(above), m, grid[j])) - reference;
            mse[j] += diff * diff;
        }
    }
    // Strict < keeps the smallest lambda among ties.
    std::size_t best = 0;
    for (std::size_t j = 1; j < k; ++j) {
        if (mse[j] < mse[best]) best = j;
    }
    Pi0Estimate out;
    out.value = estimate[best];
    out.method = Pi0Method::StoreyBootstrap;
    out.diagnostics.lambda = grid[best];
    return out;
}

inline Pi0Estimate storey_bootstrap(const PValueSet& pvals, int resamples, Stream& stream) {
    BootstrapOptions options;
    options.resamples = resamples;
    return storey_bootstrap(pvals, options, stream);
}

inline Pi0Estimate average_estimator(const PValueSet& pvals) {
    const auto& grid = average_lambda_grid();
    double sum = 0.0;
    for (double l : grid) sum += storey_lambda(pvals, l);
    Pi0Estimate out;
    out.value = clamp01(sum / static_cast<double>(grid.size()));
    out.method = Pi0Method::Average;
    return out;
}

/// Mean of the d smallest values; 0 when d == 0.
inline double conservative_tail_average(std::span<const double> values, std::size_t d) {
    if (d > values.size()) throw invalid_parameter("conservative_tail_average: d exceeds the number of values");
    if (d == 0) return 0.0;
    std::vector<double> sorted(values.begin(), values.end());
    std::partial_sort(sorted.begin(), sorted.begin() + static_cast<std::ptrdiff_t>(d), sorted.end());
    return std::accumulate(sorted.begin(), sorted.begin() + static_cast<std::ptrdiff_t>(d), 0.0) / static_cast<double>(d);
}

/// d = floor(m (1 - initial)).
inline std::size_t assumed_alternatives(std::size_t m, double initial) {
    detail::require(initial >= 0.0 && initial <= 1.0, "initial pi0 estimate must lie in [0,1]");
    const double d = std::floor(static_cast<double>(m) * (1.0 - initial) + 1e-9);
    return std::min(m, static_cast<std::size_t>(std::max(0.0, d)));
}

/// NonNullModel instances keyed by sample sizes, built on the average lambda grid.
class NonNullModelCache {
public:
    explicit NonNullModelCache(TestProblem problem) : problem_(problem) {}

    TestProblem problem() const noexcept { return problem_; }

    const NonNullModel& get(SampleSizes sizes) {
        auto it = models_.find(sizes);
        if (it == models_.end()) it = models_.emplace(sizes, NonNullModel(problem_, sizes, average_lambda_grid())).first;
        return it->second;
    }

private:
    TestProblem problem_;
    std::map<SampleSizes, NonNullModel> models_;
};

inline Pi0Estimate pi0_u(const PValueSet& pvals, const EffectSet& effects, const Pi0Estimate& initial,
                         NonNullModelCache& cache) {
    const std::size_t m = pvals.m();
    effects.validate(m);
    detail::require(cache.problem() == effects.problem, "pi0_u: model cache built for a different test problem");
    const std::size_t d = assumed_alternatives(m, initial.value);
    const auto& grid = average_lambda_grid();

    Pi0Estimate out;
    out.method = Pi0Method::BiasCorrectedU;
    out.diagnostics.d = d;
    out.diagnostics.initial = initial.value;
    std::vector<double> tail(m);
    double sum = 0.0;
    for (std::size_t j = 0; j < grid.size(); ++j) {
        double q_hat = 0.0;
        if (d > 0) {
            for (std::size_t i = 0; i < m; ++i) tail[i] = cache.get(effects.sizes_of(i)).tail(effects.effects[i], j);
            q_hat = conservative_tail_average(tail, d);
        }
        out.diagnostics.q_hat.push_back(q_hat);
        const double w = static_cast<double>(pvals.count_above(grid[j])) / static_cast<double>(m);
        const double den = (1.0 - grid[j]) - q_hat;
        sum += den <= kDegenerateDenominator ? 1.0 : clamp01((w - q_hat) / den);
    }
    out.value = sum / static_cast<double>(grid.size());
    return out;
}

inline Pi0Estimate pi0_u(const PValueSet& pvals, const EffectSet& effects, const Pi0Estimate& initial) {
    NonNullModelCache cache(effects.problem);
    return pi0_u(pvals, effects, initial, cache);
}

inline Pi0Estimate pi0_e(const PValueSet& pvals, const EffectSet& effects, const Pi0Estimate& initial,
                         NonNullModelCache& cache) {
    const std::size_t m = pvals.m();
    effects.validate(m);
    detail::require(cache.problem() == effects.problem, "pi0_e: model cache built for a different test problem");
    const std::size_t d = assumed_alternatives(m, initial.value);

    double e_hat = 0.0;
    if (d > 0) {
        std::vector<double> expected(m);
        for (std::size_t i = 0; i < m; ++i) expected[i] = cache.get(effects.sizes_of(i)).expected_p(effects.effects[i]);
        e_hat = conservative_tail_average(expected, d);
    }
    Pi0Estimate out;
    out.method = Pi0Method::BiasCorrectedE;
    out.diagnostics.d = d;
    out.diagnostics.e_hat = e_hat;
    out.diagnostics.initial = initial.value;
    const double den = 0.5 - e_hat;
    out.value = den <= kDegenerateDenominator ? 1.0 : clamp01((pvals.mean() - e_hat) / den);
    return out;
}

inline Pi0Estimate pi0_e(const PValueSet& pvals, const EffectSet& effects, const Pi0Estimate& initial) {
    NonNullModelCache cache(effects.problem);
    return pi0_e(pvals, effects, initial, cache);
}

/// Estimators compared in simulations and reports.
enum class Estimator { Bootstrap, Average, U, E };

inline constexpr std::array<Estimator, 4> kEstimators{Estimator::Bootstrap, Estimator::Average, Estimator::U,
                                                      Estimator::E};

inline std::string_view to_string(Estimator e) {
    switch (e) {
        case Estimator::Bootstrap: return "bootstrap";
        case Estimator::Average: return "average";
        case Estimator::U: return "u";
        case Estimator::E: return "e";
    }
    return "unknown";
}

inline Estimator parse_estimator(std::string_view s) {
    for (auto e : kEstimators) {
        if (to_string(e) == s) return e;
    }
    throw invalid_parameter("unknown estimator '" + std::string(s) + "'");
}

}  // namespace expfdr
