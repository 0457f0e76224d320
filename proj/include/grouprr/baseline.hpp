#ifndef GROUPRR_BASELINE_HPP
#define GROUPRR_BASELINE_HPP

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <vector>

#include "grouprr/estimators.hpp"
#include "grouprr/graph.hpp"
#include "grouprr/primitives.hpp"
#include "grouprr/protocol.hpp"
#include "grouprr/random.hpp"

namespace grouprr {

// ---------------------------------------------------------------------------
// Noisy graph publication without grouping
// ---------------------------------------------------------------------------

// Lower-triangle noisy adjacency: rows[i] holds the keys j < i published as
// ones. mu = 1 is plain randomized response; mu < 1 additionally keeps each
// post-flip one independently (the ARR-style bit sampler).
struct NoisyGraphView {
    double eps1 = 0;
    double mu = 1;
    std::vector<std::vector<NodeId>> rows;

    NodeId n() const { return static_cast<NodeId>(rows.size()); }
    bool contains(NodeId publisher, NodeId key) const {
        const auto& r = rows[publisher];
        return std::binary_search(r.begin(), r.end(), key);
    }
};

inline NoisyGraphView arr_publish(const Graph& g, double eps1, double mu,
                                  const TrialKeys& keys) {
    if (!(eps1 > 0)) throw std::invalid_argument("eps1 must be positive");
    if (!(mu > 0) || mu > 1) throw std::invalid_argument("mu must be in (0, 1]");
    NoisyGraphView view;
    view.eps1 = eps1;
    view.mu = mu;
    view.rows.resize(g.n());
    const double p_keep = rr_keep_probability(eps1);
    const double p_spurious = inv_one_plus_exp(eps1);
    for (NodeId i = 0; i < g.n(); ++i) {
        auto rng = keys.publish(i);
        auto& row = view.rows[i];
        const auto lower = g.lower_neighbors(i);
        std::size_t next = 0;
        for (NodeId j = 0; j < i; ++j) {
            const bool bit = next < lower.size() && lower[next] == j;
            if (bit) ++next;
            const bool one = rng.bernoulli(bit ? p_keep : p_spurious);
            if (!one) continue;
            if (mu < 1.0 && !rng.bernoulli(mu)) continue;  // absent bits stay absent
            row.push_back(j);
        }
    }
    return view;
}

inline NoisyGraphView rr_publish(const Graph& g, double eps1, const TrialKeys& keys) {
    return arr_publish(g, eps1, /*mu=*/1.0, keys);
}

// Unbiased estimate of one edge bit from an ARR publication:
// ((1+e^eps1) * bit / mu - 1) / (e^eps1 - 1), written in overflow-safe form.
inline double arr_edge_estimate(bool published_one, double eps1, double mu) {
    const double inv_em1 = 1.0 / std::expm1(eps1);
    return published_one ? coth_half_ratio(eps1) / mu - inv_em1 : -inv_em1;
}

// Worst-case variance of the single-edge estimator above over both true bit
// values; used for the quadratic-form noise calibration.
inline double arr_edge_variance_bound(double eps1, double mu) {
    const double c1 = arr_edge_estimate(true, eps1, mu);
    const double c0 = arr_edge_estimate(false, eps1, mu);
    double worst = 0;
    for (int bit = 0; bit <= 1; ++bit) {
        const double p1 = mu * (bit ? rr_keep_probability(eps1) : inv_one_plus_exp(eps1));
        const double second = p1 * c1 * c1 + (1.0 - p1) * c0 * c0;
        worst = std::max(worst, second - static_cast<double>(bit * bit));
    }
    return worst;
}

inline double clipped_degree(double d_tilde, double eps0, double beta) {
    return std::max(0.0, d_tilde + std::log(2.0 / beta) / eps0);
}

// ---------------------------------------------------------------------------
// Two-step triangle counting with the four-cycle trick
// ---------------------------------------------------------------------------

struct TwoStepOutcome {
    double estimate = 0;        // published total (noise included)
    double raw_total = 0;       // debiased total before the final noise
    std::vector<double> per_user;
    std::uint32_t trimmed_users = 0;
};

// Each user counts wedges over its lower neighbors whose closing edge is
// present in the noisy view, gated by the user's own published bit for the
// smaller wedge endpoint, then debiases and adds Laplace noise scaled by the
// clipped-degree sensitivity.
inline TwoStepOutcome two_step_triangle(const Graph& g, const NoisyGraphView& view,
                                        const std::vector<DegreeReport>& reports,
                                        double eps0, double eps2, double beta,
                                        const TrialKeys& keys) {
    if (!(eps2 > 0)) throw std::invalid_argument("eps2 must be positive");
    const double eps1 = view.eps1;
    const double mu = view.mu;
    const double q_keep = mu * rr_keep_probability(eps1);
    const double ratio = coth_half_ratio(eps1);   // (1+e^eps1)/(e^eps1-1)
    const double inv_em1 = 1.0 / std::expm1(eps1);

    TwoStepOutcome out;
    out.per_user.assign(g.n(), 0.0);
    for (NodeId i = 0; i < g.n(); ++i) {
        const double d_hat = clipped_degree(reports[i].d_tilde, eps0, beta);
        auto lower = g.lower_neighbors(i);
        const auto limit = static_cast<std::size_t>(std::ceil(d_hat));
        if (lower.size() > limit) {
            lower.resize(limit);
            ++out.trimmed_users;
        }
        std::uint64_t closed = 0;   // gated wedges whose closing edge is published
        std::uint64_t gated = 0;    // wedges passing the four-cycle-trick gate
        for (std::size_t a = 0; a < lower.size(); ++a) {
            const bool gate = view.contains(i, lower[a]);
            if (!gate) continue;
            for (std::size_t b = a + 1; b < lower.size(); ++b) {
                ++gated;
                if (view.contains(lower[b], lower[a])) ++closed;
            }
        }
        const double debiased =
            (static_cast<double>(closed) * ratio / mu -
             static_cast<double>(gated) * inv_em1) /
            q_keep;
        const double sensitivity = d_hat * (ratio / mu + inv_em1) / q_keep;
        auto rng = keys.final_noise(i);
        const double noise = sensitivity > 0 ? rng.laplace(sensitivity / eps2) : 0.0;
        out.per_user[i] = debiased + noise;
        out.raw_total += debiased;
        out.estimate += out.per_user[i];
    }
    return out;
}

// ---------------------------------------------------------------------------
// ARR-style 4-cycle counting
// ---------------------------------------------------------------------------

struct ArrFourCycleOutcome {
    double estimate = 0;   // published total / 4
    double raw_total = 0;  // pre-noise total / 4
    std::uint32_t clamped_pairs = 0;
    std::uint32_t trimmed_users = 0;
};

// Same quadratic form as the grouped estimator, with per-edge estimates taken
// from the ungated ARR publication. full_degree_reports carry noisy full
// degrees (the pair set ranges over all neighbors).
inline ArrFourCycleOutcome arr_four_cycle(const Graph& g, const NoisyGraphView& view,
                                          const std::vector<double>& full_degree_reports,
                                          double eps0_full, double eps2, double beta,
                                          const TrialKeys& keys) {
    const NodeId n = g.n();
    std::vector<double> table(static_cast<std::size_t>(n) * n, 0.0);
    const double est_one = arr_edge_estimate(true, view.eps1, view.mu);
    const double est_zero = arr_edge_estimate(false, view.eps1, view.mu);
    for (NodeId u = 0; u < n; ++u) {
        for (NodeId v = 0; v < u; ++v) {
            const double e = view.contains(u, v) ? est_one : est_zero;
            table[static_cast<std::size_t>(u) * n + v] = e;
            table[static_cast<std::size_t>(v) * n + u] = e;
        }
    }
    const double var_bound = arr_edge_variance_bound(view.eps1, view.mu);

    ArrFourCycleOutcome out;
    double total = 0;
    double raw = 0;
    for (NodeId i = 0; i < n; ++i) {
        const FourCycleClipParams params = make_four_cycle_params(
            full_degree_reports[i], eps0_full, beta, n, var_bound);
        auto nbrs = g.neighbors(i);
        const auto limit = static_cast<std::size_t>(std::ceil(params.d_hat_full));
        if (nbrs.size() > limit) {
            nbrs.resize(limit);
            ++out.trimmed_users;
        }
        double user_sum = 0;
        for (std::size_t x = 0; x < nbrs.size(); ++x) {
            for (std::size_t y = x + 1; y < nbrs.size(); ++y) {
                const NodeId a = nbrs[x];
                const NodeId b = nbrs[y];
                const double* row_a = table.data() + static_cast<std::size_t>(a) * n;
                const double* row_b = table.data() + static_cast<std::size_t>(b) * n;
                double inner = 0;
                for (NodeId j = 0; j < n; ++j) {
                    if (j == i || j == a || j == b) continue;
                    inner += row_a[j] * row_b[j];
                }
                if (inner > params.pair_bound) {
                    inner = params.pair_bound;
                    ++out.clamped_pairs;
                } else if (inner < -params.pair_bound) {
                    inner = -params.pair_bound;
                    ++out.clamped_pairs;
                }
                user_sum += inner;
            }
        }
        raw += user_sum;
        auto rng = keys.final_noise(i);
        const double scale = params.contribution_bound / eps2;
        total += user_sum + (scale > 0 ? rng.laplace(scale) : 0.0);
    }
    out.raw_total = raw / kFourCycleCornerCount;
    out.estimate = total / kFourCycleCornerCount;
    return out;
}

// ---------------------------------------------------------------------------
// Diagnostics and accounting
// ---------------------------------------------------------------------------

// Triangle count taken directly on the symmetrized noisy graph; diagnostic
// only, with no debiasing or calibrated noise.
inline std::uint64_t naive_noisy_triangle_count(const NoisyGraphView& view) {
    std::vector<std::pair<NodeId, NodeId>> edges;
    for (NodeId i = 0; i < view.n(); ++i) {
        for (NodeId j : view.rows[i]) edges.emplace_back(j, i);
    }
    return count_triangles(Graph::from_edges(view.n(), std::move(edges)));
}

// Upload: every published one costs ceil(log2 n) bits. Download: with the
// four-cycle trick (triangles) a viewer only receives entries whose key is
// gated by its own published row; without it (4-cycles) each viewer receives
// every row in full.
inline CommLedger baseline_ledger(const NoisyGraphView& view, bool gated) {
    CommLedger led;
    led.bits_per_index = index_bits(view.n());
    const NodeId n = view.n();
    led.upload_bits.resize(n);
    std::uint64_t all = 0;
    for (NodeId i = 0; i < n; ++i) {
        led.upload_bits[i] = view.rows[i].size() * led.bits_per_index;
        all += led.upload_bits[i];
    }
    led.download_bits.assign(n, all);
    if (!gated) return led;
    for (NodeId i = 0; i < n; ++i) {
        std::vector<char> gate(n, 0);
        for (NodeId k : view.rows[i]) gate[k] = 1;
        std::uint64_t entries = 0;
        for (NodeId u = 0; u < n; ++u) {
            if (u == i) continue;
            for (NodeId k : view.rows[u]) entries += gate[k];
        }
        led.download_bits[i] = entries * led.bits_per_index;
    }
    return led;
}

}  // namespace grouprr

#endif  // GROUPRR_BASELINE_HPP
