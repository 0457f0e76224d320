#ifndef GROUPRR_PROTOCOL_HPP
#define GROUPRR_PROTOCOL_HPP

#include <algorithm>
#include <bit>
#include <cstdint>
#include <istream>
#include <ostream>
#include <stdexcept>
#include <vector>

#include "grouprr/graph.hpp"
#include "grouprr/primitives.hpp"
#include "grouprr/random.hpp"

namespace grouprr {

// Named substreams for one simulated protocol execution. Keying every duty by
// (master, trial, role, ids) makes results independent of scheduling, so
// parallel runs reproduce the sequential ones bit for bit.
struct TrialKeys {
    std::uint64_t master = 0;
    std::uint64_t trial = 0;

    RandomStream scheme() const { return substream(master, trial, StreamRole::hash_scheme); }
    RandomStream degree(NodeId u) const { return substream(master, trial, StreamRole::degree, u); }
    RandomStream publish(NodeId u) const { return substream(master, trial, StreamRole::publish, u); }
    RandomStream css(NodeId viewer, NodeId publisher) const {
        return substream(master, trial, StreamRole::css, viewer, publisher);
    }
    RandomStream final_noise(NodeId u) const {
        return substream(master, trial, StreamRole::final_noise, u);
    }
    RandomStream misc(std::uint64_t tag) const {
        return substream(master, trial, StreamRole::misc, tag);
    }
};

// ---------------------------------------------------------------------------
// Step 1: degree sharing
// ---------------------------------------------------------------------------

struct DegreeReport {
    NodeId user = 0;
    double d_tilde = 0;  // noisy low degree; may be negative
};

inline std::vector<DegreeReport> degree_sharing(const Graph& g, double eps0,
                                                const TrialKeys& keys) {
    if (!(eps0 > 0)) throw std::invalid_argument("eps0 must be positive");
    std::vector<DegreeReport> reports(g.n());
    for (NodeId i = 0; i < g.n(); ++i) {
        auto rng = keys.degree(i);
        reports[i] = DegreeReport{i, static_cast<double>(g.low_degree(i)) +
                                         rng.laplace(1.0 / eps0)};
    }
    return reports;
}

// ---------------------------------------------------------------------------
// Step 2: group randomized response
// ---------------------------------------------------------------------------

// Published sparse set of group indices whose obfuscated representative bit
// is one. Representative identities stay inside the publishing user's
// simulation.
struct ObfuscatedList {
    NodeId user = 0;
    std::uint64_t m = 0;
    std::vector<std::uint32_t> one_bins;  // sorted, unique

    bool contains(std::uint32_t bin) const {
        return std::binary_search(one_bins.begin(), one_bins.end(), bin);
    }
};

// Instrumentation record for one user's bins, exposed for tests that verify
// the zero-out convention. raw_bit ignores the index rule; pre_bit is the bit
// actually fed to randomized response.
struct GroupRrTraceEntry {
    std::uint64_t representative = 0;  // extended or padding key
    std::uint8_t raw_bit = 0;
    std::uint8_t pre_bit = 0;
    std::uint8_t post_bit = 0;
};

using GroupRrTrace = std::vector<std::vector<GroupRrTraceEntry>>;

inline std::vector<ObfuscatedList> group_rr_step(const Graph& g, const HashScheme& scheme,
                                                 double eps1, const TrialKeys& keys,
                                                 GroupRrTrace* trace = nullptr) {
    if (scheme.n < g.n()) throw std::invalid_argument("hash scheme does not cover graph");
    const double eps_prime = amplified_epsilon(eps1, scheme.s);
    const double p_keep = rr_keep_probability(eps_prime);
    const double p_spurious = inv_one_plus_exp(eps_prime);

    std::vector<ObfuscatedList> lists(g.n());
    if (trace) trace->assign(g.n(), {});
    for (NodeId i = 0; i < g.n(); ++i) {
        auto rng = keys.publish(i);
        const auto [theta, phi] = scheme.coeffs[i];
        const std::uint64_t theta_inv =
            detail::powmod_u64(theta, scheme.p - 2, scheme.p);
        auto& list = lists[i];
        list.user = i;
        list.m = scheme.m;
        if (trace) (*trace)[i].resize(scheme.m);
        for (std::uint64_t t = 0; t < scheme.m; ++t) {
            const std::uint32_t slot = static_cast<std::uint32_t>(rng.below(scheme.s));
            std::uint64_t rep;
            if (slot < scheme.bin_population(t)) {
                const std::uint64_t y = t + static_cast<std::uint64_t>(slot) * scheme.m;
                rep = detail::mulmod_u64(theta_inv, (y + scheme.p - phi) % scheme.p,
                                         scheme.p);
            } else {
                rep = scheme.p + slot;  // padding dummy
            }
            const bool raw_bit =
                rep < g.n() && rep != i && g.has_edge(i, static_cast<NodeId>(rep));
            const bool pre_bit = raw_bit && rep < i;  // zero out c_t > i
            const int post_bit = rng.bernoulli(pre_bit ? p_keep : p_spurious) ? 1 : 0;
            if (post_bit) list.one_bins.push_back(static_cast<std::uint32_t>(t));
            if (trace) {
                (*trace)[i][t] = GroupRrTraceEntry{rep, raw_bit, pre_bit,
                                                   static_cast<std::uint8_t>(post_bit)};
            }
        }
    }
    return lists;
}

// ---------------------------------------------------------------------------
// Central server sampling
// ---------------------------------------------------------------------------

// Per viewer: one thinned copy of every publisher's one-bins.
struct CssView {
    NodeId viewer = 0;
    std::vector<std::vector<std::uint32_t>> lists;  // indexed by publisher
};

inline CssView make_css_view(const std::vector<ObfuscatedList>& lists, double mu_c,
                             NodeId viewer, const TrialKeys& keys) {
    if (!(mu_c > 0) || mu_c > 1) throw std::invalid_argument("mu_c must be in (0, 1]");
    CssView view;
    view.viewer = viewer;
    view.lists.resize(lists.size());
    for (std::size_t j = 0; j < lists.size(); ++j) {
        auto rng = keys.css(viewer, static_cast<NodeId>(j));
        auto& retained = view.lists[j];
        retained.reserve(lists[j].one_bins.size());
        for (std::uint32_t t : lists[j].one_bins) {
            if (rng.bernoulli(mu_c)) retained.push_back(t);
        }
    }
    return view;
}

inline std::vector<CssView> central_server_sampling(const std::vector<ObfuscatedList>& lists,
                                                    double mu_c, NodeId n_viewers,
                                                    const TrialKeys& keys) {
    std::vector<CssView> views;
    views.reserve(n_viewers);
    for (NodeId i = 0; i < n_viewers; ++i) views.push_back(make_css_view(lists, mu_c, i, keys));
    return views;
}

// ---------------------------------------------------------------------------
// Edge estimation
// ---------------------------------------------------------------------------

// Unbiased estimate of a_{j,k} for k < j from publisher j's retained bins.
// Debiasing always uses the publisher's parameters.
inline double edge_estimate_bins(const std::vector<std::uint32_t>& retained_bins,
                                 const HashScheme& scheme, NodeId publisher, NodeId key,
                                 const DebiasParams& publisher_params, double mu_c) {
    if (key >= publisher) {
        throw std::invalid_argument("edge estimate requires key < publisher");
    }
    const std::uint32_t bin = static_cast<std::uint32_t>(scheme.hash(publisher, key));
    const bool present =
        std::binary_search(retained_bins.begin(), retained_bins.end(), bin);
    return (present ? publisher_params.omega / mu_c : 0.0) - publisher_params.sigma_tilde;
}

inline double edge_estimate(const CssView& view, const HashScheme& scheme, NodeId publisher,
                            NodeId key, const DebiasParams& publisher_params, double mu_c) {
    return edge_estimate_bins(view.lists.at(publisher), scheme, publisher, key,
                              publisher_params, mu_c);
}

inline double edge_estimate(const std::vector<ObfuscatedList>& lists, const HashScheme& scheme,
                            NodeId publisher, NodeId key,
                            const DebiasParams& publisher_params) {
    return edge_estimate_bins(lists.at(publisher).one_bins, scheme, publisher, key,
                              publisher_params, /*mu_c=*/1.0);
}

// ---------------------------------------------------------------------------
// Communication accounting
// ---------------------------------------------------------------------------

struct CommLedger {
    std::vector<std::uint64_t> upload_bits;    // per publisher
    std::vector<std::uint64_t> download_bits;  // per viewer
    std::uint32_t bits_per_index = 0;

    std::uint64_t total_upload() const {
        std::uint64_t sum = 0;
        for (auto b : upload_bits) sum += b;
        return sum;
    }
    std::uint64_t total_download() const {
        std::uint64_t sum = 0;
        for (auto b : download_bits) sum += b;
        return sum;
    }
    double mean_download() const {
        return download_bits.empty()
                   ? 0.0
                   : static_cast<double>(total_download()) / download_bits.size();
    }
    double mean_upload() const {
        return upload_bits.empty()
                   ? 0.0
                   : static_cast<double>(total_upload()) / upload_bits.size();
    }
};

inline std::uint32_t index_bits(std::uint64_t m) {
    return m <= 1 ? 0 : static_cast<std::uint32_t>(std::bit_width(m - 1));
}

// Upload: every published one-bin costs ceil(log2 m) bits. Download without
// CSS: every viewer receives every publisher's full one-bins.
inline CommLedger ledger(const std::vector<ObfuscatedList>& lists) {
    CommLedger led;
    const std::uint64_t m = lists.empty() ? 1 : lists.front().m;
    led.bits_per_index = index_bits(m);
    led.upload_bits.resize(lists.size());
    std::uint64_t all = 0;
    for (std::size_t j = 0; j < lists.size(); ++j) {
        led.upload_bits[j] = lists[j].one_bins.size() * led.bits_per_index;
        all += led.upload_bits[j];
    }
    led.download_bits.assign(lists.size(), all);
    return led;
}

inline CommLedger ledger(const std::vector<ObfuscatedList>& lists,
                         const std::vector<CssView>& views) {
    CommLedger led = ledger(lists);
    led.download_bits.assign(views.size(), 0);
    for (std::size_t i = 0; i < views.size(); ++i) {
        std::uint64_t bits = 0;
        for (const auto& retained : views[i].lists) {
            bits += retained.size() * led.bits_per_index;
        }
        led.download_bits[i] = bits;
    }
    return led;
}

// ---------------------------------------------------------------------------
// Binary replay dumps
// ---------------------------------------------------------------------------

namespace detail {

inline void put_u32_le(std::ostream& out, std::uint32_t v) {
    const unsigned char bytes[4] = {
        static_cast<unsigned char>(v & 0xff),
        static_cast<unsigned char>((v >> 8) & 0xff),
        static_cast<unsigned char>((v >> 16) & 0xff),
        static_cast<unsigned char>((v >> 24) & 0xff),
    };
    out.write(reinterpret_cast<const char*>(bytes), 4);
}

inline bool get_u32_le(std::istream& in, std::uint32_t& v) {
    unsigned char bytes[4];
    if (!in.read(reinterpret_cast<char*>(bytes), 4)) return false;
    v = static_cast<std::uint32_t>(bytes[0]) | (static_cast<std::uint32_t>(bytes[1]) << 8) |
        (static_cast<std::uint32_t>(bytes[2]) << 16) |
        (static_cast<std::uint32_t>(bytes[3]) << 24);
    return true;
}

}  // namespace detail

// One record per list: m, count, then the sorted bin indices, all little-
// endian 32-bit. Users are implied by record order.
inline void dump_obfuscated_lists(const std::vector<ObfuscatedList>& lists,
                                  std::ostream& out) {
    for (const auto& list : lists) {
        detail::put_u32_le(out, static_cast<std::uint32_t>(list.m));
        detail::put_u32_le(out, static_cast<std::uint32_t>(list.one_bins.size()));
        for (std::uint32_t t : list.one_bins) detail::put_u32_le(out, t);
    }
}

inline std::vector<ObfuscatedList> load_obfuscated_lists(std::istream& in) {
    std::vector<ObfuscatedList> lists;
    std::uint32_t m;
    while (detail::get_u32_le(in, m)) {
        ObfuscatedList list;
        list.user = static_cast<NodeId>(lists.size());
        list.m = m;
        std::uint32_t count;
        if (!detail::get_u32_le(in, count)) {
            throw std::runtime_error("truncated obfuscated-list record");
        }
        list.one_bins.resize(count);
        for (std::uint32_t& t : list.one_bins) {
            if (!detail::get_u32_le(in, t)) {
                throw std::runtime_error("truncated obfuscated-list record");
            }
        }
        lists.push_back(std::move(list));
    }
    return lists;
}

}  // namespace grouprr

#endif  // GROUPRR_PROTOCOL_HPP
