#pragma once

#include <cmath>
#include <numbers>
#include <vector>

#include "expfdr/error.hpp"

namespace expfdr {

/// Gauss-Legendre nodes and weights on [-1, 1].
struct GaussLegendreRule {
    std::vector<double> nodes;
    std::vector<double> weights;
};

inline GaussLegendreRule gauss_legendre(int order) {
    detail::require(order >= 1, "gauss_legendre: order must be >= 1");
    GaussLegendreRule rule;
    rule.nodes.resize(order);
    rule.weights.resize(order);
    const int half = (order + 1) / 2;
    for (int i = 0; i < half; ++i) {
        // Tricomi initial guess, then Newton on P_n.
        double z = std::cos(std::numbers::pi * (i + 0.75) / (order + 0.5));
        double dp = 0.0;
        for (int it = 0; it < 100; ++it) {
            double p0 = 1.0;
            double p1 = 0.0;
            for (int j = 1; j <= order; ++j) {
                const double p2 = p1;
                p1 = p0;
                p0 = ((2.0 * j - 1.0) * z * p1 - (j - 1.0) * p2) / j;
            }
            dp = order * (z * p0 - p1) / (z * z - 1.0);
            const double dz = p0 / dp;
            z -= dz;
            if (std::abs(dz) < 1e-16) break;
        }
        const double w = 2.0 / ((1.0 - z * z) * dp * dp);
        rule.nodes[i] = -z;
        rule.nodes[order - 1 - i] = z;
        rule.weights[i] = w;
        rule.weights[order - 1 - i] = w;
    }
    return rule;
}

/// A fixed set of abscissae and weights on an interval.
struct QuadratureGrid {
    std::vector<double> nodes;
    std::vector<double> weights;

    template <class F>
    double integrate(F&& f) const {
        double sum = 0.0;
        for (std::size_t i = 0; i < nodes.size(); ++i) sum += weights[i] * f(nodes[i]);
        return sum;
    }
};

/// Composite Gauss-Legendre rule on (0, 1) with panels refined geometrically
/// toward both ends: [0, 2^-levels], ..., [1/4, 1/2], [1/2, 3/4], ..., [1 - 2^-levels, 1].
/// Handles integrands with a power-law or log singularity in slope at 0 or 1.
inline QuadratureGrid graded_unit_interval_rule(int order_per_panel, int levels) {
    detail::require(levels >= 1 && levels <= 50, "graded_unit_interval_rule: levels must lie in [1, 50]");
    const GaussLegendreRule base = gauss_legendre(order_per_panel);
    QuadratureGrid grid;
    auto add_panel = [&](double a, double b) {
        const double half = 0.5 * (b - a);
        const double mid = 0.5 * (a + b);
        for (std::size_t i = 0; i < base.nodes.size(); ++i) {
            grid.nodes.push_back(mid + half * base.nodes[i]);
            grid.weights.push_back(half * base.weights[i]);
        }
    };
    add_panel(0.0, std::ldexp(1.0, -levels));
    for (int k = levels; k >= 2; --k) add_panel(std::ldexp(1.0, -k), std::ldexp(1.0, -k + 1));
    for (int k = 1; k < levels; ++k) add_panel(1.0 - std::ldexp(1.0, -k), 1.0 - std::ldexp(1.0, -k - 1));
    add_panel(1.0 - std::ldexp(1.0, -levels), 1.0);
    return grid;
}

}  // namespace expfdr
