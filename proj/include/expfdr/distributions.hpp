#pragma once

// Chi-square and F distributions with integer degrees of freedom: CDF,
// survival function, density and tail quantiles.

#include <cmath>
#include <limits>
#include <string>

#include "expfdr/error.hpp"
#include "expfdr/special_functions.hpp"

namespace expfdr {

namespace detail {

enum class Tail { Lower, Upper };

// Bracketed Newton/bisection on log(tail(x)) - log(target). `Dist` provides
// cdf, sf, pdf. Returns x with tail(x) == target.
template <class Dist>
double solve_tail(const Dist& dist, Tail tail, double target, double guess) {
    constexpr int kMaxIterations = 200;
    constexpr double kTolerance = 1e-12;
    const double log_target = std::log(target);

    // Oriented so that g is increasing in x.
    auto eval = [&](double x, double& slope) {
        const double t = tail == Tail::Lower ? dist.cdf(x) : dist.sf(x);
        const double dens = dist.pdf(x);
        if (t <= 0.0) {
            slope = 0.0;
            return tail == Tail::Lower ? -std::numeric_limits<double>::infinity()
                                       : std::numeric_limits<double>::infinity();
        }
        const double g = std::log(t) - log_target;
        slope = dens / t;
        return tail == Tail::Lower ? g : -g;
    };

    double slope = 0.0;
    double x = guess > 0.0 ? guess : 1.0;
    double g = eval(x, slope);
    double lo = 0.0;
    double hi = std::numeric_limits<double>::infinity();
    if (g < 0.0) {
        lo = x;
        for (int i = 0; i < 2000; ++i) {
            const double next = x * 2.0;
            const double gn = eval(next, slope);
            if (gn >= 0.0) {
                hi = next;
                break;
            }
            lo = x = next;
        }
    } else {
        hi = x;
        for (int i = 0; i < 2000; ++i) {
            const double next = x * 0.5;
            if (next < std::numeric_limits<double>::min()) return 0.0;
            const double gn = eval(next, slope);
            if (gn <= 0.0) {
                lo = next;
                break;
            }
            hi = x = next;
        }
    }
    if (!std::isfinite(hi) || !(lo > 0.0)) throw numeric_error("quantile: failed to bracket root");

    x = std::sqrt(lo * hi);
    for (int it = 0; it < kMaxIterations; ++it) {
        g = eval(x, slope);
        if (g == 0.0) return x;
        if (g < 0.0) lo = x;
        else hi = x;
        double next = std::numeric_limits<double>::quiet_NaN();
        if (slope > 0.0 && std::isfinite(g)) next = x - g / slope;
        if (!(next > lo && next < hi)) next = hi / lo > 2.0 ? std::sqrt(lo * hi) : 0.5 * (lo + hi);
        if (std::abs(next - x) <= kTolerance * next || (hi - lo) <= kTolerance * hi) return next;
        x = next;
    }
    throw numeric_error("quantile: iteration limit reached");
}

inline void check_probability(double p, const char* who) {
    if (!(p > 0.0 && p < 1.0)) throw invalid_parameter(std::string(who) + ": probability must lie in (0,1)");
}

}  // namespace detail

/// Chi-square distribution with `df` degrees of freedom.
class ChiSquared {
public:
    explicit ChiSquared(int df) : df_(df) {
        detail::require(df >= 1, "chi-square: degrees of freedom must be >= 1");
    }

    int df() const noexcept { return df_; }

    double cdf(double x) const {
        if (x <= 0.0) return 0.0;
        return special::gamma_p(0.5 * df_, 0.5 * x);
    }

    double sf(double x) const {
        if (x <= 0.0) return 1.0;
        return special::gamma_q(0.5 * df_, 0.5 * x);
    }

    double pdf(double x) const {
        const double a = 0.5 * df_;
        if (x < 0.0) return 0.0;
        if (x == 0.0) {
            if (df_ == 1) return std::numeric_limits<double>::infinity();
            return df_ == 2 ? 0.5 : 0.0;
        }
        const double y = 0.5 * x;
        return 0.5 * special::detail::gamma_prefactor(a, y) * a / y;
    }

    /// Upper-p point: P(X > q) = p.
    double quantile_upper(double p) const {
        detail::check_probability(p, "chi2_quantile_upper");
        if (p > 0.5) return detail::solve_tail(*this, detail::Tail::Lower, 1.0 - p, df_);
        return detail::solve_tail(*this, detail::Tail::Upper, p, df_);
    }

    /// Lower-p point: P(X <= q) = p.
    double quantile_lower(double p) const {
        detail::check_probability(p, "chi2_quantile_lower");
        if (p > 0.5) return detail::solve_tail(*this, detail::Tail::Upper, 1.0 - p, df_);
        return detail::solve_tail(*this, detail::Tail::Lower, p, df_);
    }

private:
    int df_;
};

/// Snedecor F distribution with (d1, d2) degrees of freedom.
class FisherF {
public:
    FisherF(int d1, int d2) : d1_(d1), d2_(d2) {
        detail::require(d1 >= 1 && d2 >= 1, "F: degrees of freedom must be >= 1");
    }

    int d1() const noexcept { return d1_; }
    int d2() const noexcept { return d2_; }

    double cdf(double x) const {
        if (x <= 0.0) return 0.0;
        if (std::isinf(x)) return 1.0;
        const double den = d1_ * x + d2_;
        return special::incomplete_beta(0.5 * d1_, 0.5 * d2_, d1_ * x / den, d2_ / den).lower;
    }

    double sf(double x) const {
        if (x <= 0.0) return 1.0;
        if (std::isinf(x)) return 0.0;
        const double den = d1_ * x + d2_;
        return special::incomplete_beta(0.5 * d1_, 0.5 * d2_, d1_ * x / den, d2_ / den).upper;
    }

    double pdf(double x) const {
        if (x < 0.0) return 0.0;
        const double a = 0.5 * d1_;
        const double b = 0.5 * d2_;
        if (x == 0.0) {
            if (d1_ == 1) return std::numeric_limits<double>::infinity();
            return d1_ == 2 ? 1.0 : 0.0;
        }
        if (std::isinf(x)) return 0.0;
        const double log_pdf = std::lgamma(a + b) - std::lgamma(a) - std::lgamma(b) + a * std::log(d1_ / double(d2_)) +
                               (a - 1.0) * std::log(x) - (a + b) * std::log1p(d1_ * x / d2_);
        return std::exp(log_pdf);
    }

    double quantile_upper(double p) const {
        detail::check_probability(p, "f_quantile_upper");
        if (p > 0.5) return detail::solve_tail(*this, detail::Tail::Lower, 1.0 - p, 1.0);
        return detail::solve_tail(*this, detail::Tail::Upper, p, 1.0);
    }

    double quantile_lower(double p) const {
        detail::check_probability(p, "f_quantile_lower");
        if (p > 0.5) return detail::solve_tail(*this, detail::Tail::Upper, 1.0 - p, 1.0);
        return detail::solve_tail(*this, detail::Tail::Lower, p, 1.0);
    }

private:
    int d1_;
    int d2_;
};

inline double chi2_cdf(double x, int df) { return ChiSquared(df).cdf(x); }
inline double chi2_sf(double x, int df) { return ChiSquared(df).sf(x); }
inline double chi2_quantile_upper(double p, int df) { return ChiSquared(df).quantile_upper(p); }
inline double f_cdf(double x, int d1, int d2) { return FisherF(d1, d2).cdf(x); }
inline double f_sf(double x, int d1, int d2) { return FisherF(d1, d2).sf(x); }
inline double f_quantile_upper(double p, int d1, int d2) { return FisherF(d1, d2).quantile_upper(p); }

}  // namespace expfdr
