#ifndef GROUPRR_MECHANISMS_HPP
#define GROUPRR_MECHANISMS_HPP

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

#include "grouprr/baseline.hpp"
#include "grouprr/estimators.hpp"
#include "grouprr/graph.hpp"
#include "grouprr/primitives.hpp"
#include "grouprr/protocol.hpp"
#include "grouprr/random.hpp"

namespace grouprr {

// ---------------------------------------------------------------------------
// Deterministic parallel loop
// ---------------------------------------------------------------------------

// Runs fn(i) for i in [0, total). Work items are claimed dynamically, but each
// item writes only to its own output slot and draws only from its own keyed
// substreams, so results do not depend on the schedule or thread count.
template <typename Fn>
void parallel_for(std::size_t total, unsigned threads, Fn&& fn) {
    if (threads <= 1 || total <= 1) {
        for (std::size_t i = 0; i < total; ++i) fn(i);
        return;
    }
    std::atomic<std::size_t> next{0};
    auto worker = [&] {
        for (;;) {
            const std::size_t i = next.fetch_add(1);
            if (i >= total) return;
            fn(i);
        }
    };
    std::vector<std::thread> pool;
    const unsigned count = std::min<unsigned>(threads, static_cast<unsigned>(total));
    pool.reserve(count);
    for (unsigned t = 0; t < count; ++t) pool.emplace_back(worker);
    for (auto& th : pool) th.join();
}

// ---------------------------------------------------------------------------
// Mechanism configuration
// ---------------------------------------------------------------------------

enum class Mechanism { grouprr_clip, grouprr_smooth, arr_style, rr_full };
enum class Stat { triangles, four_cycles };

inline std::string to_string(Mechanism m) {
    switch (m) {
        case Mechanism::grouprr_clip: return "grouprr-clip";
        case Mechanism::grouprr_smooth: return "grouprr-smooth";
        case Mechanism::arr_style: return "arr";
        case Mechanism::rr_full: return "rr";
    }
    return "?";
}

inline std::string to_string(Stat s) {
    return s == Stat::triangles ? "triangles" : "c4";
}

struct MechanismSettings {
    Stat stat = Stat::triangles;
    Mechanism mechanism = Mechanism::grouprr_clip;
    BudgetSplit split;
    std::uint32_t s = 1;   // group size (grouped mechanisms)
    double mu_c = 1.0;     // central server sampling rate
    double mu = 1.0;       // ARR-style bit sampling rate
    double beta = kDefaultClipBeta;
    unsigned threads = 1;
};

// Per-user record of consumed privacy budget; every noise-adding step debits
// the budget it spends.
struct BudgetLedger {
    std::vector<double> spent;

    explicit BudgetLedger(std::size_t n = 0) : spent(n, 0.0) {}
    void debit(NodeId user, double eps) { spent[user] += eps; }
    void debit_all(double eps) {
        for (auto& v : spent) v += eps;
    }
};

struct MechanismOutcome {
    double estimate = 0;          // published statistic
    double raw_total = 0;         // pre-final-noise total (diagnostic)
    std::uint64_t upload_bits = 0;
    std::uint64_t download_bits = 0;
    std::uint32_t clip_events = 0;      // users whose sums were altered by clipping
    std::uint32_t fallback_events = 0;  // clamp fallbacks / neighbor trims
    double worst_partial_slack = -1e300;  // max over users of (partial - b)
    BudgetLedger budget;
};

// ---------------------------------------------------------------------------
// GroupRR mechanisms
// ---------------------------------------------------------------------------

namespace detail {

// Download cost of one viewer under central server sampling, drawn from the
// same keyed substreams the estimators use.
inline std::uint64_t css_download_entries(const std::vector<ObfuscatedList>& lists,
                                          double mu_c, NodeId viewer,
                                          const TrialKeys& keys) {
    std::uint64_t entries = 0;
    for (std::size_t j = 0; j < lists.size(); ++j) {
        if (mu_c >= 1.0) {
            entries += lists[j].one_bins.size();
        } else {
            auto rng = keys.css(viewer, static_cast<NodeId>(j));
            for (std::size_t t = 0; t < lists[j].one_bins.size(); ++t) {
                if (rng.bernoulli(mu_c)) ++entries;
            }
        }
    }
    return entries;
}

}  // namespace detail

inline MechanismOutcome run_grouprr_triangles(const Graph& g, const MechanismSettings& st,
                                              const TrialKeys& keys) {
    const NodeId n = g.n();
    MechanismOutcome out;
    out.budget = BudgetLedger(n);

    auto scheme_rng = keys.scheme();
    const HashScheme scheme = HashScheme::create(n, st.s, scheme_rng);
    const auto reports = degree_sharing(g, st.split.eps0, keys);
    out.budget.debit_all(st.split.eps0);
    const auto lists = group_rr_step(g, scheme, st.split.eps1, keys);
    out.budget.debit_all(st.split.eps1);

    const double eps_prime = amplified_epsilon(st.split.eps1, st.s);
    std::vector<DebiasParams> params(n);
    for (NodeId j = 0; j < n; ++j) {
        params[j] = debias_params(reports[j].d_tilde, scheme.m, st.s, eps_prime);
    }

    std::vector<double> noised(n, 0.0), raw(n, 0.0), slack(n, -1e300);
    std::vector<std::uint64_t> download(n, 0);
    std::vector<std::uint8_t> clipped(n, 0), fallback(n, 0);
    const bool smooth = st.mechanism == Mechanism::grouprr_smooth;

    parallel_for(n, st.threads, [&](std::size_t ui) {
        const NodeId i = static_cast<NodeId>(ui);
        DebiasedView view(lists, scheme, params, st.mu_c, i, keys);
        auto rng = keys.final_noise(i);
        if (smooth) {
            const auto res = smooth_sensitivity_noise(g, i, view, params, st.split.eps2, rng);
            noised[i] = res.noised;
            raw[i] = res.raw_sum;
        } else {
            auto est = triangle_raw_sum(g, i, view);
            raw[i] = est.raw_sum;
            const auto cp = make_clipping_params(reports[i].d_tilde, st.split.eps0, st.beta,
                                                 scheme.m, st.s, eps_prime, st.mu_c);
            const auto res = clip_and_noise(std::move(est), cp, st.split.eps2, rng);
            noised[i] = res.noised;
            slack[i] = res.max_partial_after - cp.b;
            clipped[i] = res.clipped_terms > 0 || res.clamp_fallback;
            fallback[i] = res.clamp_fallback;
        }
        download[i] = detail::css_download_entries(lists, st.mu_c, i, keys);
    });
    out.budget.debit_all(st.split.eps2);

    const CommLedger led = ledger(lists);
    out.upload_bits = led.total_upload();
    for (NodeId i = 0; i < n; ++i) {
        out.estimate += noised[i];
        out.raw_total += raw[i];
        out.download_bits += download[i] * led.bits_per_index;
        out.clip_events += clipped[i];
        out.fallback_events += fallback[i];
        out.worst_partial_slack = std::max(out.worst_partial_slack, slack[i]);
    }
    return out;
}

inline MechanismOutcome run_grouprr_four_cycles(const Graph& g, const MechanismSettings& st,
                                                const TrialKeys& keys) {
    const NodeId n = g.n();
    MechanismOutcome out;
    out.budget = BudgetLedger(n);

    auto scheme_rng = keys.scheme();
    const HashScheme scheme = HashScheme::create(n, st.s, scheme_rng);
    // The 4-cycle pipeline needs two degree disclosures: the low degree for
    // debiasing and the full degree for the quadratic-form clipping. The
    // degree budget is split evenly between them.
    const double eps0_half = st.split.eps0 / 2.0;
    std::vector<DegreeReport> low_reports(n);
    std::vector<double> full_reports(n);
    for (NodeId i = 0; i < n; ++i) {
        auto rng = keys.degree(i);
        low_reports[i] =
            DegreeReport{i, static_cast<double>(g.low_degree(i)) + rng.laplace(1.0 / eps0_half)};
        full_reports[i] = static_cast<double>(g.degree(i)) + rng.laplace(1.0 / eps0_half);
    }
    out.budget.debit_all(st.split.eps0);
    const auto lists = group_rr_step(g, scheme, st.split.eps1, keys);
    out.budget.debit_all(st.split.eps1);

    const double eps_prime = amplified_epsilon(st.split.eps1, st.s);
    std::vector<DebiasParams> params(n);
    for (NodeId j = 0; j < n; ++j) {
        params[j] = debias_params(low_reports[j].d_tilde, scheme.m, st.s, eps_prime);
    }

    std::vector<double> noised(n, 0.0), raw(n, 0.0);
    std::vector<std::uint64_t> download(n, 0);
    std::vector<std::uint8_t> clipped(n, 0), trimmed(n, 0);
    const PairHashTable hashes(scheme, n);
    const double same_row_weight = 1.0 / (1.0 - scheme.collision_probability());

    parallel_for(n, st.threads, [&](std::size_t ui) {
        const NodeId i = static_cast<NodeId>(ui);
        DebiasedView view(lists, scheme, params, st.mu_c, i, keys);
        const auto table = view.pair_table(n);
        auto est = four_cycle_raw(g, i, view, table, hashes);
        raw[i] = est.raw_sum;
        const auto cp = make_clipping_params(low_reports[i].d_tilde, eps0_half, st.beta,
                                             scheme.m, st.s, eps_prime, st.mu_c);
        const auto qp = make_four_cycle_params(full_reports[i], eps0_half, st.beta, n,
                                               cp.var_bound, same_row_weight);
        auto rng = keys.final_noise(i);
        const auto res = four_cycle_clip_and_noise(std::move(est), qp, st.split.eps2, rng);
        noised[i] = res.noised;
        clipped[i] = res.clamped_pairs > 0;
        trimmed[i] = res.trimmed_neighbors;
        download[i] = detail::css_download_entries(lists, st.mu_c, i, keys);
    });
    out.budget.debit_all(st.split.eps2);

    const CommLedger led = ledger(lists);
    out.upload_bits = led.total_upload();
    for (NodeId i = 0; i < n; ++i) {
        out.estimate += noised[i];
        out.raw_total += raw[i];
        out.download_bits += download[i] * led.bits_per_index;
        out.clip_events += clipped[i];
        out.fallback_events += trimmed[i];
    }
    out.estimate /= kFourCycleCornerCount;
    out.raw_total /= kFourCycleCornerCount;
    return out;
}

// ---------------------------------------------------------------------------
// Baseline mechanisms
// ---------------------------------------------------------------------------

inline MechanismOutcome run_arr_triangles(const Graph& g, const MechanismSettings& st,
                                          const TrialKeys& keys) {
    const NodeId n = g.n();
    MechanismOutcome out;
    out.budget = BudgetLedger(n);

    const auto reports = degree_sharing(g, st.split.eps0, keys);
    out.budget.debit_all(st.split.eps0);
    const auto view = arr_publish(g, st.split.eps1, st.mu, keys);
    out.budget.debit_all(st.split.eps1);

    const auto res = two_step_triangle(g, view, reports, st.split.eps0, st.split.eps2,
                                       st.beta, keys);
    out.budget.debit_all(st.split.eps2);
    out.estimate = res.estimate;
    out.raw_total = res.raw_total;
    out.fallback_events = res.trimmed_users;

    const CommLedger led = baseline_ledger(view, /*gated=*/true);
    out.upload_bits = led.total_upload();
    out.download_bits = led.total_download();
    return out;
}

inline MechanismOutcome run_arr_four_cycles(const Graph& g, const MechanismSettings& st,
                                            const TrialKeys& keys) {
    const NodeId n = g.n();
    MechanismOutcome out;
    out.budget = BudgetLedger(n);

    std::vector<double> full_reports(n);
    for (NodeId i = 0; i < n; ++i) {
        auto rng = keys.degree(i);
        full_reports[i] = static_cast<double>(g.degree(i)) + rng.laplace(1.0 / st.split.eps0);
    }
    out.budget.debit_all(st.split.eps0);
    const auto view = arr_publish(g, st.split.eps1, st.mu, keys);
    out.budget.debit_all(st.split.eps1);

    const auto res = arr_four_cycle(g, view, full_reports, st.split.eps0, st.split.eps2,
                                    st.beta, keys);
    out.budget.debit_all(st.split.eps2);
    out.estimate = res.estimate;
    out.raw_total = res.raw_total;
    out.clip_events = res.clamped_pairs;
    out.fallback_events = res.trimmed_users;

    const CommLedger led = baseline_ledger(view, /*gated=*/false);
    out.upload_bits = led.total_upload();
    out.download_bits = led.total_download();
    return out;
}

inline MechanismOutcome run_mechanism(const Graph& g, const MechanismSettings& st,
                                      const TrialKeys& keys) {
    st.split.validate();
    if (st.stat == Stat::four_cycles && st.mechanism == Mechanism::grouprr_smooth) {
        throw std::invalid_argument("smooth sensitivity is only implemented for triangles");
    }
    MechanismSettings local = st;
    if (st.mechanism == Mechanism::rr_full) local.mu = 1.0;
    switch (st.mechanism) {
        case Mechanism::grouprr_clip:
        case Mechanism::grouprr_smooth:
            return st.stat == Stat::triangles ? run_grouprr_triangles(g, local, keys)
                                              : run_grouprr_four_cycles(g, local, keys);
        case Mechanism::arr_style:
        case Mechanism::rr_full:
            return st.stat == Stat::triangles ? run_arr_triangles(g, local, keys)
                                              : run_arr_four_cycles(g, local, keys);
    }
    throw std::logic_error("unknown mechanism");
}

}  // namespace grouprr

#endif  // GROUPRR_MECHANISMS_HPP
