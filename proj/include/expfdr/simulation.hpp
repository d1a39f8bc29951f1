#pragma once

// Monte Carlo study of the pi0 estimators and adaptive BH on segmented
// exponential data.
//
// Each replication draws m effect sizes (m0 = floor(m pi0) of them equal to 1),
// n exponential lifetimes per segment, runs one LRT per segment and scores the
// four estimators and the resulting adaptive BH rejections against the truth.
// Replication r only touches the stream (seed, "rep", r), so results do not
// depend on the number of worker threads.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <limits>
#include <ostream>
#include <string>
#include <string_view>
#include <thread>
#include <vector>

#include "expfdr/adaptive_bh.hpp"
#include "expfdr/estimators.hpp"
#include "expfdr/lrt.hpp"
#include "expfdr/random.hpp"

namespace expfdr {

enum class ThetaSetting { Uniform, Exponential };

inline std::string_view to_string(ThetaSetting s) { return s == ThetaSetting::Uniform ? "uniform" : "exponential"; }

inline ThetaSetting parse_theta_setting(std::string_view s) {
    if (s == "uniform") return ThetaSetting::Uniform;
    if (s == "exponential") return ThetaSetting::Exponential;
    throw invalid_parameter("unknown theta setting '" + std::string(s) + "'");
}

/// Percentages of non-null segments below (left) and above (right) the null mean.
struct Allocation {
    int left = 50;
    int right = 50;
};

struct SimConfig {
    int m = 100;
    int n = 50;
    double pi0 = 0.5;
    ThetaSetting setting = ThetaSetting::Uniform;
    Allocation allocation;
    int replications = 1000;
    std::uint64_t seed = 1;
    double q = 0.05;
    TestProblem problem = TestProblem::OneSampleTwoSided;
    BootstrapOptions bootstrap;

    void validate() const {
        detail::require(m >= 1, "SimConfig: m must be positive");
        detail::require(n >= 1, "SimConfig: n must be positive");
        detail::require(pi0 > 0.0 && pi0 < 1.0, "SimConfig: pi0 must lie in (0,1)");
        detail::require(allocation.left >= 0 && allocation.right >= 0 && allocation.left + allocation.right == 100,
                        "SimConfig: allocation percentages must be nonnegative and sum to 100");
        detail::require(replications >= 1, "SimConfig: need at least one replication");
        detail::require(q > 0.0 && q < 1.0, "SimConfig: q must lie in (0,1)");
    }

    int null_count() const { return static_cast<int>(std::floor(m * pi0 + 1e-9)); }
};

struct TruthLabels {
    std::vector<bool> is_null;
    std::vector<double> theta;
};

namespace detail {

// Uniform on the open interval (lo, hi), guarding against rounding onto an endpoint.
inline double open_uniform(double lo, double hi, Stream& stream) {
    double x = stream.uniform(lo, hi);
    if (!(x > lo)) x = std::nextafter(lo, hi);
    if (!(x < hi)) x = std::nextafter(hi, lo);
    return x;
}

inline double draw_theta(ThetaSetting setting, double lo, double hi, Stream& stream) {
    if (setting == ThetaSetting::Uniform) return open_uniform(lo, hi, stream);
    return sample_truncated_exponential(1.0, lo, hi, stream);
}

}  // namespace detail

inline TruthLabels gen_theta(const SimConfig& config, Stream& stream) {
    config.validate();
    const auto m = static_cast<std::size_t>(config.m);
    const auto m0 = static_cast<std::size_t>(config.null_count());
    const std::size_t m1 = m - m0;

    std::vector<std::size_t> position(m);
    for (std::size_t i = 0; i < m; ++i) position[i] = i;
    for (std::size_t i = m; i > 1; --i) std::swap(position[i - 1], position[static_cast<std::size_t>(stream.below(i))]);

    TruthLabels truth;
    truth.is_null.assign(m, true);
    truth.theta.assign(m, 1.0);
    const auto right = static_cast<std::size_t>(std::lround(config.allocation.right * static_cast<double>(m1) / 100.0));
    for (std::size_t k = 0; k < m1; ++k) {
        const std::size_t i = position[k];
        truth.is_null[i] = false;
        truth.theta[i] = k < right ? detail::draw_theta(config.setting, 1.0, 1.5, stream)
                                   : detail::draw_theta(config.setting, 0.5, 1.0, stream);
    }
    return truth;
}

struct MethodOutcome {
    std::size_t rejections = 0;
    std::size_t false_discoveries = 0;
    double fdp = 0.0;
};

struct ReplicationResult {
    std::array<double, 4> pi0{};           ///< indexed like kEstimators
    std::array<MethodOutcome, 4> adaptive{};
    MethodOutcome nonadaptive;
    std::size_t nonnull = 0;
};

namespace detail {

inline MethodOutcome score(const PValueSet& pvals, double pi0, double q, const TruthLabels& truth) {
    const auto rej = reject_at(bh_adjust(pvals, floor_pi0(pi0, pvals.m())), q);
    const auto c = confusion(rej, truth.is_null);
    return {c.R, c.V, c.fdp};
}

inline TestResult simulate_segment(const SimConfig& config, double theta, Stream& stream) {
    const auto n = static_cast<std::size_t>(config.n);
    std::vector<double> x(n);
    if (is_two_sample(config.problem)) {
        std::vector<double> y(n);
        for (auto& v : x) v = sample_exponential(1.0, stream);
        for (auto& v : y) v = sample_exponential(theta, stream);
        return lrt_two_sample(x, y, is_two_sided(config.problem));
    }
    for (auto& v : x) v = sample_exponential(theta, stream);
    return lrt_one_sample(x, is_two_sided(config.problem));
}

}  // namespace detail

inline ReplicationResult run_replication(const SimConfig& config, Stream& stream, NonNullModelCache& cache) {
    Stream theta_stream = stream.derive("theta");
    const TruthLabels truth = gen_theta(config, theta_stream);
    const auto m = static_cast<std::size_t>(config.m);

    std::vector<double> p(m);
    EffectSet effects;
    effects.problem = config.problem;
    effects.effects.resize(m);
    for (std::size_t i = 0; i < m; ++i) {
        Stream data = stream.derive("data", i);
        const TestResult t = detail::simulate_segment(config, truth.theta[i], data);
        p[i] = t.p_value;
        effects.effects[i] = t.effect;
        if (i == 0) effects.sizes.push_back(t.sizes);
    }
    const PValueSet pvals(std::move(p));

    Stream boot = stream.derive("bootstrap");
    const Pi0Estimate initial = storey_bootstrap(pvals, config.bootstrap, boot);
    ReplicationResult out;
    out.pi0[0] = initial.value;
    out.pi0[1] = average_estimator(pvals).value;
    out.pi0[2] = pi0_u(pvals, effects, initial, cache).value;
    out.pi0[3] = pi0_e(pvals, effects, initial, cache).value;
    for (std::size_t k = 0; k < kEstimators.size(); ++k)
        out.adaptive[k] = detail::score(pvals, out.pi0[k], config.q, truth);
    out.nonadaptive = detail::score(pvals, 1.0, config.q, truth);
    out.nonnull = static_cast<std::size_t>(std::count(truth.is_null.begin(), truth.is_null.end(), false));
    return out;
}

inline ReplicationResult run_replication(const SimConfig& config, Stream& stream) {
    NonNullModelCache cache(config.problem);
    return run_replication(config, stream, cache);
}

/// Replication r of a study cell.
inline ReplicationResult run_replication(const SimConfig& config, int r, NonNullModelCache& cache) {
    Stream stream(config.seed, "rep", static_cast<std::uint64_t>(r));
    return run_replication(config, stream, cache);
}

struct PowerSummary {
    double power = 0.0;           ///< mean of true discoveries / m1
    double fdr = 0.0;             ///< mean FDP
    double rejection_rate = 0.0;  ///< mean of R / m
};

struct EstimatorMetrics {
    Estimator estimator = Estimator::Bootstrap;
    double mean = 0.0;
    double mse = 0.0;
    double bias = 0.0;
    PowerSummary adaptive;
};

struct MetricsRow {
    SimConfig config;
    std::array<EstimatorMetrics, 4> estimators{};
    PowerSummary nonadaptive;

    const EstimatorMetrics& operator[](Estimator e) const {
        return estimators[static_cast<std::size_t>(e)];
    }
};

namespace detail {

struct PowerAccumulator {
    double power = 0.0;
    double fdp = 0.0;
    double rate = 0.0;
    int power_count = 0;

    void add(const MethodOutcome& o, std::size_t nonnull, std::size_t m) {
        if (nonnull > 0) {
            power += static_cast<double>(o.rejections - o.false_discoveries) / static_cast<double>(nonnull);
            ++power_count;
        }
        fdp += o.fdp;
        rate += static_cast<double>(o.rejections) / static_cast<double>(m);
    }

    PowerSummary finish(int reps) const {
        return {power_count > 0 ? power / power_count : 0.0, fdp / reps, rate / reps};
    }
};

}  // namespace detail

/// Runs all replications of one cell. `threads` = 0 uses the hardware concurrency.
inline std::vector<ReplicationResult> run_cell(const SimConfig& config, unsigned threads = 1) {
    config.validate();
    const int reps = config.replications;
    std::vector<ReplicationResult> results(static_cast<std::size_t>(reps));
    if (threads == 0) threads = std::max(1u, std::thread::hardware_concurrency());
    threads = std::min<unsigned>(threads, static_cast<unsigned>(reps));
    auto worker = [&](unsigned w) {
        NonNullModelCache cache(config.problem);
        for (int r = static_cast<int>(w); r < reps; r += static_cast<int>(threads))
            results[static_cast<std::size_t>(r)] = run_replication(config, r, cache);
    };
    if (threads <= 1) {
        worker(0);
        return results;
    }
    std::vector<std::thread> pool;
    for (unsigned w = 0; w < threads; ++w) pool.emplace_back(worker, w);
    for (auto& t : pool) t.join();
    return results;
}

/// Folds replications in order into MSE, bias, power and FDR.
inline MetricsRow summarize(const SimConfig& config, const std::vector<ReplicationResult>& results) {
    detail::require(!results.empty(), "summarize: no replications");
    const int reps = static_cast<int>(results.size());
    const auto m = static_cast<std::size_t>(config.m);
    MetricsRow row;
    row.config = config;
    std::array<detail::PowerAccumulator, 4> adaptive{};
    detail::PowerAccumulator plain;
    for (const auto& r : results) {
        for (std::size_t k = 0; k < kEstimators.size(); ++k) {
            const double err = r.pi0[k] - config.pi0;
            row.estimators[k].mean += r.pi0[k];
            row.estimators[k].mse += err * err;
            adaptive[k].add(r.adaptive[k], r.nonnull, m);
        }
        plain.add(r.nonadaptive, r.nonnull, m);
    }
    for (std::size_t k = 0; k < kEstimators.size(); ++k) {
        auto& e = row.estimators[k];
        e.estimator = kEstimators[k];
        e.mean /= reps;
        e.mse /= reps;
        e.bias = e.mean - config.pi0;
        e.adaptive = adaptive[k].finish(reps);
    }
    row.nonadaptive = plain.finish(reps);
    return row;
}

inline std::vector<MetricsRow> run_study(const std::vector<SimConfig>& grid, unsigned threads = 1) {
    detail::require(!grid.empty(), "run_study: empty configuration grid");
    std::vector<MetricsRow> rows;
    rows.reserve(grid.size());
    for (const auto& config : grid) rows.push_back(summarize(config, run_cell(config, threads)));
    return rows;
}

namespace detail {

inline std::string format_number(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

inline std::string allocation_label(const Allocation& a) {
    return std::to_string(a.left) + ":" + std::to_string(a.right);
}

}  // namespace detail

/// One row per (cell, method); the non-adaptive method has empty MSE and bias.
inline void write_metrics_csv(std::ostream& out, const std::vector<MetricsRow>& rows) {
    using detail::format_number;
    out << "m,n,pi0,setting,allocation,replications,q,method,mean_pi0,mse,bias,power,fdr,rejection_rate\n";
    for (const auto& row : rows) {
        const auto& c = row.config;
        const std::string prefix = std::to_string(c.m) + "," + std::to_string(c.n) + "," + format_number(c.pi0) + "," +
                                   std::string(to_string(c.setting)) + "," + detail::allocation_label(c.allocation) +
                                   "," + std::to_string(c.replications) + "," + format_number(c.q) + ",";
        for (const auto& e : row.estimators) {
            out << prefix << to_string(e.estimator) << "," << format_number(e.mean) << "," << format_number(e.mse)
                << "," << format_number(e.bias) << "," << format_number(e.adaptive.power) << ","
                << format_number(e.adaptive.fdr) << "," << format_number(e.adaptive.rejection_rate) << "\n";
        }
        out << prefix << "nonadaptive,,,," << format_number(row.nonadaptive.power) << ","
            << format_number(row.nonadaptive.fdr) << "," << format_number(row.nonadaptive.rejection_rate) << "\n";
    }
}

/// Power against pi0 for each method, one series per method.
inline void write_power_curve_csv(std::ostream& out, const std::vector<MetricsRow>& rows) {
    using detail::format_number;
    out << "method,pi0,power\n";
    for (auto e : kEstimators) {
        for (const auto& row : rows) out << to_string(e) << "," << format_number(row.config.pi0) << ","
                                         << format_number(row[e].adaptive.power) << "\n";
    }
    for (const auto& row : rows)
        out << "nonadaptive," << format_number(row.config.pi0) << "," << format_number(row.nonadaptive.power) << "\n";
}

}  // namespace expfdr
