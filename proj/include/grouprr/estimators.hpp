#ifndef GROUPRR_ESTIMATORS_HPP
#define GROUPRR_ESTIMATORS_HPP

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <stdexcept>
#include <vector>

#include "grouprr/graph.hpp"
#include "grouprr/primitives.hpp"
#include "grouprr/protocol.hpp"
#include "grouprr/random.hpp"

namespace grouprr {

constexpr double kDefaultClipBeta = 1e-3;

// ---------------------------------------------------------------------------
// Viewer-side access to debiased edge estimates
// ---------------------------------------------------------------------------

// One user's window onto the published lists: either the raw lists (mu_c = 1)
// or per-(viewer, publisher) thinned copies. Rows are materialized lazily so
// mechanisms that touch few publishers never pay for the rest; the keyed
// substreams make the content independent of materialization order.
class DebiasedView {
public:
    DebiasedView(const std::vector<ObfuscatedList>& lists, const HashScheme& scheme,
                 const std::vector<DebiasParams>& params, double mu_c, NodeId viewer,
                 const TrialKeys& keys)
        : lists_(&lists),
          scheme_(&scheme),
          params_(&params),
          mu_c_(mu_c),
          viewer_(viewer),
          keys_(keys),
          rows_(lists.size()) {
        if (!(mu_c > 0) || mu_c > 1) throw std::invalid_argument("mu_c must be in (0, 1]");
    }

    NodeId viewer() const { return viewer_; }
    double mu_c() const { return mu_c_; }
    const HashScheme& scheme() const { return *scheme_; }
    const DebiasParams& params(NodeId publisher) const { return (*params_)[publisher]; }
    double omega_eff() const { return (*params_)[0].omega / mu_c_; }

    bool present(NodeId publisher, NodeId key) const {
        const auto bin = static_cast<std::uint32_t>(scheme_->hash(publisher, key));
        const auto& r = row(publisher);
        return std::binary_search(r.begin(), r.end(), bin);
    }

    // Unbiased estimate of the edge bit {publisher, key}, key < publisher.
    double estimate(NodeId publisher, NodeId key) const {
        const auto& p = (*params_)[publisher];
        return (present(publisher, key) ? p.omega / mu_c_ : 0.0) - p.sigma_tilde;
    }

    // Estimate for an arbitrary unordered pair via the publisher convention.
    double estimate_pair(NodeId u, NodeId v) const {
        return estimate(std::max(u, v), std::min(u, v));
    }

    const std::vector<std::uint32_t>& row(NodeId publisher) const {
        auto& cached = rows_[publisher];
        if (!cached) {
            if (mu_c_ >= 1.0) {
                cached = (*lists_)[publisher].one_bins;
            } else {
                auto rng = keys_.css(viewer_, publisher);
                std::vector<std::uint32_t> retained;
                for (std::uint32_t t : (*lists_)[publisher].one_bins) {
                    if (rng.bernoulli(mu_c_)) retained.push_back(t);
                }
                cached = std::move(retained);
            }
        }
        return *cached;
    }

    // Dense table of pairwise estimates, used by the 4-cycle estimator where
    // every pair is touched many times. Index u * n + v.
    std::vector<double> pair_table(NodeId n) const {
        std::vector<double> table(static_cast<std::size_t>(n) * n, 0.0);
        for (NodeId u = 0; u < n; ++u) {
            for (NodeId v = 0; v < u; ++v) {
                const double est = estimate(u, v);
                table[static_cast<std::size_t>(u) * n + v] = est;
                table[static_cast<std::size_t>(v) * n + u] = est;
            }
        }
        return table;
    }

private:
    const std::vector<ObfuscatedList>* lists_;
    const HashScheme* scheme_;
    const std::vector<DebiasParams>* params_;
    double mu_c_;
    NodeId viewer_;
    TrialKeys keys_;
    mutable std::vector<std::optional<std::vector<std::uint32_t>>> rows_;
};

// ---------------------------------------------------------------------------
// Triangle raw sums
// ---------------------------------------------------------------------------

// Per-user triangle estimate before the final noise mechanism.
// wedge pairs (j, k) run over j < k < i with both {i,j}, {i,k} in E; the term
// for a pair estimates the closing edge via publisher k.
struct LocalTriangleEstimate {
    NodeId user = 0;
    std::vector<NodeId> lower;                        // lower neighbors of user
    std::vector<std::pair<NodeId, NodeId>> pairs;     // (j, k) with j < k
    std::vector<double> terms;                        // one per pair
    std::vector<char> present;                        // published bin was retained
    std::vector<double> partials;                     // per lower neighbor, |D_i^{(j')}|
    double raw_sum = 0;
};

inline LocalTriangleEstimate triangle_raw_sum(const Graph& g, NodeId user,
                                              const DebiasedView& view) {
    LocalTriangleEstimate est;
    est.user = user;
    est.lower = g.lower_neighbors(user);
    const std::size_t d = est.lower.size();
    est.partials.assign(d, 0.0);
    if (d < 2) return est;
    est.pairs.reserve(d * (d - 1) / 2);
    for (std::size_t a = 0; a < d; ++a) {
        for (std::size_t b = a + 1; b < d; ++b) {
            const NodeId j = est.lower[a];
            const NodeId k = est.lower[b];
            const bool hit = view.present(k, j);
            const auto& p = view.params(k);
            const double term = (hit ? p.omega / view.mu_c() : 0.0) - p.sigma_tilde;
            est.pairs.emplace_back(j, k);
            est.terms.push_back(term);
            est.present.push_back(hit ? 1 : 0);
            est.partials[a] += term;
            est.partials[b] += term;
            est.raw_sum += term;
        }
    }
    return est;
}

// ---------------------------------------------------------------------------
// Double clipping
// ---------------------------------------------------------------------------

// Bounds for the counting-step noise, computed from public information only
// (the noisy degree, n, s, and the budget split).
struct ClippingParams {
    double beta = kDefaultClipBeta;
    double d_hat = 0;      // clipped degree estimate
    double b = 0;          // per-neighbor contribution bound
    double var_bound = 0;  // max variance of one edge estimator
    double cov_bound = 0;  // max covariance between two edge estimators
};

inline ClippingParams make_clipping_params(double d_tilde, double eps0, double beta,
                                           std::uint64_t m, std::uint32_t s,
                                           double eps_prime, double mu_c) {
    if (!(beta > 0) || beta >= 1) throw std::invalid_argument("beta must be in (0, 1)");
    ClippingParams out;
    out.beta = beta;
    const DebiasParams dp = debias_params(d_tilde, m, s, eps_prime);
    const double sigma_plus = std::max(0.0, dp.sigma_tilde);
    out.var_bound = dp.omega * (1.0 + sigma_plus) / mu_c;
    out.cov_bound = 2.0 * (static_cast<double>(s) - 1.0) /
                    (static_cast<double>(m) * s - 1.0) * out.var_bound;
    out.d_hat = std::max(0.0, d_tilde + std::log(2.0 / beta) / eps0);
    out.b = out.d_hat + std::sqrt((2.0 / beta) * (out.d_hat * out.var_bound +
                                                  out.d_hat * out.d_hat * out.cov_bound));
    return out;
}

struct ClipOutcome {
    double noised = 0;
    double clipped_sum = 0;         // raw sum after clipping, before noise
    std::uint32_t clipped_terms = 0;
    bool clamp_fallback = false;    // a partial sum had to be clamped directly
    double max_partial_after = 0;
};

// Enforces every per-neighbor partial sum <= b by zeroing positive published
// terms touching the violating neighbor, then adds Laplace(b / eps2).
inline ClipOutcome clip_and_noise(LocalTriangleEstimate est, const ClippingParams& params,
                                  double eps2, RandomStream& rng) {
    ClipOutcome out;
    const double b = params.b;
    std::vector<char> zeroed(est.pairs.size(), 0);
    // map node id -> slot in est.lower
    auto slot_of = [&](NodeId v) {
        return static_cast<std::size_t>(
            std::lower_bound(est.lower.begin(), est.lower.end(), v) - est.lower.begin());
    };
    for (;;) {
        std::size_t worst = est.lower.size();
        double worst_val = b;
        for (std::size_t a = 0; a < est.partials.size(); ++a) {
            if (est.partials[a] > worst_val + 1e-12) {
                worst = a;
                worst_val = est.partials[a];
            }
        }
        if (worst == est.lower.size()) break;
        const NodeId target = est.lower[worst];
        bool found = false;
        for (std::size_t idx = 0; idx < est.pairs.size(); ++idx) {
            if (zeroed[idx] || !est.present[idx]) continue;
            const auto [j, k] = est.pairs[idx];
            if (j != target && k != target) continue;
            const double term = est.terms[idx];
            zeroed[idx] = 1;
            est.raw_sum -= term;
            est.partials[slot_of(j)] -= term;
            est.partials[slot_of(k)] -= term;
            ++out.clipped_terms;
            found = true;
            break;
        }
        if (!found) {
            // No published term left to zero; clamp the partial directly.
            const double excess = est.partials[worst] - b;
            est.partials[worst] = b;
            est.raw_sum -= excess;
            out.clamp_fallback = true;
        }
    }
    out.clipped_sum = est.raw_sum;
    out.max_partial_after = 0;
    for (double p : est.partials) out.max_partial_after = std::max(out.max_partial_after, p);
    const double scale = b / eps2;
    out.noised = est.raw_sum + (scale > 0 ? rng.laplace(scale) : 0.0);
    return out;
}

// ---------------------------------------------------------------------------
// Smooth sensitivity
// ---------------------------------------------------------------------------

struct SmoothSensitivity {
    double ub_ls = 0;        // bound on the local sensitivity at the actual list
    double beta_smooth = 0;  // eps2 / (2 (gamma - 1)) with gamma = 4
    double ladder_step = 0;  // per-distance growth of the sensitivity ladder
    double s_star = 0;
    int gamma = 4;
};

// max over integer k >= 0 of e^{-beta k} (ub_ls + k step), located through the
// closed-form stationary point and checked at its integer neighbours.
inline double smooth_s_star(double ub_ls, double step, double beta) {
    if (!(beta > 0)) throw std::invalid_argument("beta must be positive");
    if (!(step > 0)) throw std::invalid_argument("ladder step must be positive");
    const double k_real = std::max(0.0, 1.0 / beta - ub_ls / step);
    const double candidates[3] = {0.0, std::floor(k_real), std::ceil(k_real)};
    double best = 0;
    for (double k : candidates) {
        if (k < 0) continue;
        best = std::max(best, std::exp(-beta * k) * (ub_ls + k * step));
    }
    return best;
}

// Largest magnitude any single edge estimate can take under the given
// parameter set; the ladder step must dominate it for the smoothness
// guarantee to hold even when noisy offsets leave the nominal range.
inline double max_term_magnitude(const std::vector<DebiasParams>& params, double mu_c) {
    double worst = 0;
    for (const auto& p : params) {
        const double w = p.omega / mu_c;
        worst = std::max({worst, std::fabs(p.sigma_tilde), std::fabs(w - p.sigma_tilde)});
    }
    return worst;
}

// Bound on the change of the published triangle count when one bit of user
// `user`'s adjacency list flips: for every candidate j, the magnitude of the
// sum of closing-edge estimates between j and the lower neighbors actually
// used by the count.
inline double triangle_ub_ls(const Graph& g, NodeId user, const DebiasedView& view) {
    const auto lower = g.lower_neighbors(user);
    double worst = 0;
    for (NodeId j = 0; j < g.n(); ++j) {
        if (j == user) continue;
        double sum = 0;
        for (NodeId k : lower) {
            if (k == j) continue;
            sum += view.estimate_pair(j, k);
        }
        worst = std::max(worst, std::fabs(sum));
    }
    return worst;
}

struct SmoothOutcome {
    double noised = 0;
    double raw_sum = 0;
    SmoothSensitivity sens;
};

inline SmoothOutcome smooth_sensitivity_noise(const Graph& g, NodeId user,
                                              const DebiasedView& view,
                                              const std::vector<DebiasParams>& params,
                                              double eps2, RandomStream& rng) {
    if (!(eps2 > 0)) throw std::invalid_argument("eps2 must be positive");
    SmoothOutcome out;
    out.raw_sum = triangle_raw_sum(g, user, view).raw_sum;
    out.sens.gamma = 4;
    out.sens.beta_smooth = eps2 / 6.0;  // eps2 / (2 (gamma - 1))
    out.sens.ub_ls = triangle_ub_ls(g, user, view);
    out.sens.ladder_step =
        std::max(view.omega_eff(), max_term_magnitude(params, view.mu_c()));
    out.sens.s_star = smooth_s_star(out.sens.ub_ls, out.sens.ladder_step,
                                    out.sens.beta_smooth);
    out.noised = out.raw_sum + 6.0 / eps2 * out.sens.s_star * z_gamma_sample(rng);
    return out;
}

// ---------------------------------------------------------------------------
// Four-cycle estimation
// ---------------------------------------------------------------------------

// Per-user 4-cycle quadratic form: for every unordered pair of neighbors
// (a, b) of the user, the inner sum over j of est(a,j) * est(j,b). The server
// total counts every 4-cycle once per corner, i.e. four times.
constexpr double kFourCycleCornerCount = 4.0;

// All bin indices h_j(k), precomputed once per trial; the quadratic form
// touches each pair many times across viewers.
struct PairHashTable {
    NodeId n = 0;
    std::vector<std::uint32_t> bins;  // publisher * n + key

    PairHashTable() = default;
    PairHashTable(const HashScheme& scheme, NodeId n_) : n(n_) {
        bins.resize(static_cast<std::size_t>(n) * n);
        for (NodeId j = 0; j < n; ++j) {
            for (NodeId k = 0; k < n; ++k) {
                bins[static_cast<std::size_t>(j) * n + k] =
                    static_cast<std::uint32_t>(scheme.hash(j, k));
            }
        }
    }

    std::uint32_t at(NodeId publisher, NodeId key) const {
        return bins[static_cast<std::size_t>(publisher) * n + key];
    }
};

struct LocalFourCycleEstimate {
    NodeId user = 0;
    std::vector<NodeId> nbrs;
    std::vector<std::pair<NodeId, NodeId>> pairs;  // indices into nbrs
    std::vector<double> pair_sums;
    double raw_sum = 0;
};

// For j above both pair members the two factors come from publisher j's own
// row. If the keys share a bin the product reuses one published bit and
// cannot estimate the edge product; those terms are dropped and the remaining
// same-row terms reweighted by the inverse non-collision probability, which
// keeps the inner sum unbiased.
inline LocalFourCycleEstimate four_cycle_raw(const Graph& g, NodeId user,
                                             const DebiasedView& view,
                                             const std::vector<double>& pair_table,
                                             const PairHashTable& hashes) {
    const NodeId n = g.n();
    LocalFourCycleEstimate est;
    est.user = user;
    est.nbrs = g.neighbors(user);
    const std::size_t d = est.nbrs.size();
    if (d < 2) return est;
    const double same_row_weight =
        1.0 / (1.0 - view.scheme().collision_probability());
    const auto* table = pair_table.data();
    for (std::size_t x = 0; x < d; ++x) {
        for (std::size_t y = x + 1; y < d; ++y) {
            const NodeId a = est.nbrs[x];
            const NodeId b = est.nbrs[y];
            const NodeId hi = std::max(a, b);
            const double* row_a = table + static_cast<std::size_t>(a) * n;
            const double* row_b = table + static_cast<std::size_t>(b) * n;
            double inner = 0;
            for (NodeId j = 0; j < hi; ++j) {
                if (j == user || j == a || j == b) continue;
                inner += row_a[j] * row_b[j];
            }
            for (NodeId j = hi + 1; j < n; ++j) {
                if (j == user) continue;
                if (hashes.at(j, a) == hashes.at(j, b)) continue;
                inner += same_row_weight * row_a[j] * row_b[j];
            }
            est.pairs.emplace_back(static_cast<NodeId>(x), static_cast<NodeId>(y));
            est.pair_sums.push_back(inner);
            est.raw_sum += inner;
        }
    }
    return est;
}

// Noise calibration for the quadratic form. Pair sums are clamped to
// [-pair_bound, pair_bound]; one adjacency bit touches at most d_hat_full
// pairs, so the Laplace scale is d_hat_full * pair_bound / eps2.
struct FourCycleClipParams {
    double beta = kDefaultClipBeta;
    double d_hat_full = 0;
    double pair_bound = 0;
    double contribution_bound = 0;
};

inline FourCycleClipParams make_four_cycle_params(double d_tilde_full, double eps0_full,
                                                  double beta, NodeId n,
                                                  double edge_var_bound,
                                                  double term_weight = 1.0) {
    FourCycleClipParams out;
    out.beta = beta;
    out.d_hat_full = std::max(0.0, d_tilde_full + std::log(2.0 / beta) / eps0_full);
    const double second_moment = (edge_var_bound + 1.0) * term_weight;  // E[w est^2]
    out.pair_bound = out.d_hat_full +
                     std::sqrt((2.0 / beta) * static_cast<double>(n) * second_moment *
                               second_moment);
    out.contribution_bound = out.d_hat_full * out.pair_bound;
    return out;
}

struct FourCycleClipOutcome {
    double noised = 0;
    double clipped_sum = 0;
    std::uint32_t clamped_pairs = 0;
    bool trimmed_neighbors = false;
};

inline FourCycleClipOutcome four_cycle_clip_and_noise(LocalFourCycleEstimate est,
                                                      const FourCycleClipParams& params,
                                                      double eps2, RandomStream& rng) {
    FourCycleClipOutcome out;
    // Degree enforcement: drop pairs whose neighbor rank exceeds the clipped
    // full degree (lowest-index neighbors are kept).
    const auto limit = static_cast<std::size_t>(std::ceil(params.d_hat_full));
    double total = 0;
    for (std::size_t idx = 0; idx < est.pairs.size(); ++idx) {
        const auto [x, y] = est.pairs[idx];
        if (x >= limit || y >= limit) {
            out.trimmed_neighbors = true;
            continue;
        }
        double v = est.pair_sums[idx];
        if (v > params.pair_bound) {
            v = params.pair_bound;
            ++out.clamped_pairs;
        } else if (v < -params.pair_bound) {
            v = -params.pair_bound;
            ++out.clamped_pairs;
        }
        total += v;
    }
    out.clipped_sum = total;
    const double scale = params.contribution_bound / eps2;
    out.noised = total + (scale > 0 ? rng.laplace(scale) : 0.0);
    return out;
}

// ---------------------------------------------------------------------------
// Aggregation
// ---------------------------------------------------------------------------

inline double aggregate(const std::vector<double>& per_user_values) {
    double sum = 0;
    for (double v : per_user_values) sum += v;
    return sum;
}

}  // namespace grouprr

#endif  // GROUPRR_ESTIMATORS_HPP
