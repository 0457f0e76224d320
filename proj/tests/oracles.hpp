// Independent brute-force oracles and statistical helpers used only by the
// test suites. Everything in here deliberately avoids the library's optimized
// counting and sampling paths.
#ifndef GROUPRR_TESTS_ORACLES_HPP
#define GROUPRR_TESTS_ORACLES_HPP

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <vector>

#include "grouprr/graph.hpp"

namespace oracles {

using grouprr::Graph;
using grouprr::NodeId;

// Triangles by scanning every node triple.
inline std::uint64_t brute_triangles(const Graph& g) {
    std::uint64_t count = 0;
    for (NodeId a = 0; a < g.n(); ++a)
        for (NodeId b = a + 1; b < g.n(); ++b)
            for (NodeId c = b + 1; c < g.n(); ++c)
                if (g.has_edge(a, b) && g.has_edge(a, c) && g.has_edge(b, c)) ++count;
    return count;
}

// Unordered 4-cycles by scanning every 4-subset and its three pairings.
inline std::uint64_t brute_four_cycles(const Graph& g) {
    std::uint64_t count = 0;
    const NodeId n = g.n();
    for (NodeId a = 0; a < n; ++a)
        for (NodeId b = a + 1; b < n; ++b)
            for (NodeId c = b + 1; c < n; ++c)
                for (NodeId d = c + 1; d < n; ++d) {
                    const NodeId quads[3][4] = {
                        {a, b, c, d}, {a, c, b, d}, {a, b, d, c}};
                    for (const auto& q : quads) {
                        if (g.has_edge(q[0], q[1]) && g.has_edge(q[1], q[2]) &&
                            g.has_edge(q[2], q[3]) && g.has_edge(q[3], q[0]))
                            ++count;
                    }
                }
    return count;
}

// Ordered walks with exactly 4 edges, by explicit enumeration.
inline std::uint64_t brute_walks4(const Graph& g) {
    std::uint64_t count = 0;
    for (NodeId v0 = 0; v0 < g.n(); ++v0)
        for (NodeId v1 : g.neighbors(v0))
            for (NodeId v2 : g.neighbors(v1))
                for (NodeId v3 : g.neighbors(v2)) count += g.degree(v3);
    return count;
}

inline std::uint64_t brute_two_stars(const Graph& g) {
    std::uint64_t count = 0;
    for (NodeId c = 0; c < g.n(); ++c)
        for (NodeId a = 0; a < g.n(); ++a)
            for (NodeId b = a + 1; b < g.n(); ++b)
                if (a != c && b != c && g.has_edge(c, a) && g.has_edge(c, b)) ++count;
    return count;
}

inline std::uint64_t brute_three_stars(const Graph& g) {
    std::uint64_t count = 0;
    for (NodeId c = 0; c < g.n(); ++c) {
        const auto& nb = g.neighbors(c);
        const std::uint64_t d = nb.size();
        if (d >= 3) count += d * (d - 1) * (d - 2) / 6;
    }
    return count;
}

// Trial-division primality, exact for the ranges used in tests.
inline bool trial_division_prime(std::uint64_t n) {
    if (n < 2) return false;
    for (std::uint64_t d = 2; d * d <= n; ++d)
        if (n % d == 0) return false;
    return true;
}

// Half-width of a z-sigma binomial confidence interval for a proportion.
inline double binomial_ci(double p, std::size_t trials, double z = 4.0) {
    return z * std::sqrt(p * (1.0 - p) / static_cast<double>(trials));
}

// Composite Simpson quadrature.
inline double simpson(const std::function<double(double)>& f, double a, double b,
                      int intervals = 4096) {
    if (intervals % 2) ++intervals;
    const double h = (b - a) / intervals;
    double sum = f(a) + f(b);
    for (int i = 1; i < intervals; ++i) sum += f(a + i * h) * (i % 2 ? 4.0 : 2.0);
    return sum * h / 3.0;
}

// Least-squares slope of y against x.
inline double regression_slope(const std::vector<double>& x, const std::vector<double>& y) {
    const auto n = static_cast<double>(x.size());
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        sx += x[i];
        sy += y[i];
        sxx += x[i] * x[i];
        sxy += x[i] * y[i];
    }
    return (n * sxy - sx * sy) / (n * sxx - sx * sx);
}

inline double sample_mean(const std::vector<double>& v) {
    double s = 0;
    for (double x : v) s += x;
    return s / static_cast<double>(v.size());
}

inline double sample_variance(const std::vector<double>& v) {
    const double m = sample_mean(v);
    double s = 0;
    for (double x : v) s += (x - m) * (x - m);
    return s / static_cast<double>(v.size() - 1);
}

}  // namespace oracles

#endif  // GROUPRR_TESTS_ORACLES_HPP
