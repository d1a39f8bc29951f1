#pragma once

// Adaptive Benjamini-Hochberg adjustment: adj_(i) = min_{j >= i} pi0 m p_(j) / j.

#include <algorithm>
#include <cstddef>
#include <limits>
#include <numeric>
#include <span>
#include <vector>

#include "expfdr/error.hpp"
#include "expfdr/estimators.hpp"

namespace expfdr {

struct AdjustedPValues {
    std::vector<double> adjusted;    ///< in original order
    std::vector<std::size_t> order;  ///< order[rank] = original index
    double pi0_used = 1.0;
};

struct RejectionSet {
    std::vector<std::size_t> rejected;  ///< original indices, ascending
    double q = 0.0;
    std::size_t m = 0;  ///< number of hypotheses
};

struct ConfusionCounts {
    std::size_t R = 0;
    std::size_t V = 0;
    double fdp = 0.0;
};

/// Smallest usable multiplier: a zero estimate becomes 1/m.
inline double floor_pi0(double pi0, std::size_t m) {
    detail::require(m >= 1, "floor_pi0: m must be positive");
    return std::max(pi0, 1.0 / static_cast<double>(m));
}

/// With clamp = false adjusted values are left as computed and may exceed 1.
inline AdjustedPValues bh_adjust(std::span<const double> p, double pi0, bool clamp = true) {
    if (!(pi0 > 0.0 && pi0 <= 1.0)) throw invalid_parameter("bh_adjust: pi0 must lie in (0,1]");
    const std::size_t m = p.size();
    AdjustedPValues out;
    out.pi0_used = pi0;
    out.order.resize(m);
    std::iota(out.order.begin(), out.order.end(), std::size_t{0});
    std::stable_sort(out.order.begin(), out.order.end(), [&](std::size_t a, std::size_t b) { return p[a] < p[b]; });

    out.adjusted.assign(m, 0.0);
    double running = std::numeric_limits<double>::infinity();
    for (std::size_t rank = m; rank-- > 0;) {
        const std::size_t i = out.order[rank];
        running = std::min(running, pi0 * static_cast<double>(m) * p[i] / static_cast<double>(rank + 1));
        out.adjusted[i] = clamp ? std::min(running, 1.0) : running;
    }
    return out;
}

inline AdjustedPValues bh_adjust(const PValueSet& pvals, double pi0, bool clamp = true) {
    return bh_adjust(pvals.values(), pi0, clamp);
}

inline RejectionSet reject_at(const AdjustedPValues& adj, double q) {
    RejectionSet out;
    out.q = q;
    out.m = adj.adjusted.size();
    for (std::size_t i = 0; i < adj.adjusted.size(); ++i) {
        if (adj.adjusted[i] <= q) out.rejected.push_back(i);
    }
    return out;
}

/// `is_null[i]` is true when hypothesis i is a true null.
inline ConfusionCounts confusion(const RejectionSet& rej, const std::vector<bool>& is_null) {
    if (is_null.size() != rej.m) throw invalid_parameter("confusion: truth labels do not match the number of tests");
    ConfusionCounts c;
    c.R = rej.rejected.size();
    for (std::size_t i : rej.rejected) {
        if (is_null[i]) ++c.V;
    }
    c.fdp = c.R == 0 ? 0.0 : static_cast<double>(c.V) / static_cast<double>(c.R);
    return c;
}

}  // namespace expfdr
