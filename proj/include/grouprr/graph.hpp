#ifndef GROUPRR_GRAPH_HPP
#define GROUPRR_GRAPH_HPP

#include <algorithm>
#include <cstdint>
#include <fstream>
#include <map>
#include <set>
#include <sstream>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "grouprr/random.hpp"

namespace grouprr {

using NodeId = std::uint32_t;

// Immutable undirected simple graph with 0-based node ids and sorted
// adjacency lists. Safe to share across threads once built.
class Graph {
public:
    Graph() = default;

    static Graph from_edges(NodeId n, std::vector<std::pair<NodeId, NodeId>> edges) {
        Graph g;
        g.adj_.assign(n, {});
        std::sort(edges.begin(), edges.end());
        edges.erase(std::unique(edges.begin(), edges.end()), edges.end());
        for (auto [u, v] : edges) {
            if (u == v) throw std::invalid_argument("self-loop in edge list");
            if (u >= n || v >= n) throw std::invalid_argument("edge endpoint out of range");
            g.adj_[u].push_back(v);
            g.adj_[v].push_back(u);
        }
        for (auto& nbrs : g.adj_) std::sort(nbrs.begin(), nbrs.end());
        g.edge_count_ = edges.size();
        return g;
    }

    NodeId n() const { return static_cast<NodeId>(adj_.size()); }
    std::size_t edge_count() const { return edge_count_; }

    const std::vector<NodeId>& neighbors(NodeId u) const { return adj_.at(u); }

    NodeId degree(NodeId u) const { return static_cast<NodeId>(adj_.at(u).size()); }

    // Number of neighbors with smaller index ("low degree").
    NodeId low_degree(NodeId u) const {
        const auto& nbrs = adj_.at(u);
        return static_cast<NodeId>(
            std::lower_bound(nbrs.begin(), nbrs.end(), u) - nbrs.begin());
    }

    // Neighbors with index < u, as a prefix of the sorted adjacency list.
    std::vector<NodeId> lower_neighbors(NodeId u) const {
        const auto& nbrs = adj_.at(u);
        return std::vector<NodeId>(nbrs.begin(),
                                   std::lower_bound(nbrs.begin(), nbrs.end(), u));
    }

    bool has_edge(NodeId u, NodeId v) const {
        const auto& nbrs = adj_.at(u);
        return std::binary_search(nbrs.begin(), nbrs.end(), v);
    }

    std::vector<std::pair<NodeId, NodeId>> edges() const {
        std::vector<std::pair<NodeId, NodeId>> out;
        out.reserve(edge_count_);
        for (NodeId u = 0; u < n(); ++u) {
            for (NodeId v : adj_[u]) {
                if (v > u) out.emplace_back(u, v);
            }
        }
        return out;
    }

private:
    std::vector<std::vector<NodeId>> adj_;
    std::size_t edge_count_ = 0;
};

// ---------------------------------------------------------------------------
// Loading
// ---------------------------------------------------------------------------

enum class IdBase { zero_based, one_based };

struct LoadStats {
    std::size_t lines = 0;
    std::size_t self_loops_dropped = 0;
    std::size_t duplicates_collapsed = 0;
};

struct LoadedGraph {
    Graph graph;
    LoadStats stats;
};

// Reads a whitespace-separated edge list (SNAP style; '#' lines are
// comments). Duplicate and reversed-duplicate lines collapse to one edge,
// self-loops are dropped and counted, and node ids are compacted to 0..n-1 in
// sorted order of the original ids.
inline LoadedGraph load_edge_list(const std::string& path,
                                  IdBase base = IdBase::zero_based) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open edge list: " + path);

    LoadStats stats;
    std::vector<std::pair<std::int64_t, std::int64_t>> raw_edges;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        const auto first = line.find_first_not_of(" \t\r\n");
        if (first == std::string::npos || line[first] == '#') continue;
        std::istringstream iss(line);
        std::int64_t u, v;
        if (!(iss >> u >> v)) {
            throw std::runtime_error(path + ":" + std::to_string(line_no) +
                                     ": expected two integer tokens");
        }
        ++stats.lines;
        if (base == IdBase::one_based) {
            --u;
            --v;
        }
        if (u < 0 || v < 0) {
            throw std::runtime_error(path + ":" + std::to_string(line_no) +
                                     ": node id below base");
        }
        if (u == v) {
            ++stats.self_loops_dropped;
            continue;
        }
        raw_edges.emplace_back(std::min(u, v), std::max(u, v));
    }

    std::map<std::int64_t, NodeId> remap;
    for (const auto& [u, v] : raw_edges) {
        remap.emplace(u, 0);
        remap.emplace(v, 0);
    }
    NodeId next = 0;
    for (auto& [id, compact] : remap) compact = next++;

    std::vector<std::pair<NodeId, NodeId>> edges;
    edges.reserve(raw_edges.size());
    for (const auto& [u, v] : raw_edges) edges.emplace_back(remap[u], remap[v]);
    std::sort(edges.begin(), edges.end());
    const auto unique_end = std::unique(edges.begin(), edges.end());
    stats.duplicates_collapsed =
        static_cast<std::size_t>(edges.end() - unique_end);
    edges.erase(unique_end, edges.end());

    LoadedGraph out;
    out.stats = stats;
    out.graph = Graph::from_edges(next, std::move(edges));
    return out;
}

// ---------------------------------------------------------------------------
// Sampling and synthesis
// ---------------------------------------------------------------------------

// Uniform node sample without replacement; returns the induced subgraph with
// retained ids compacted in increasing order.
inline Graph induced_random_subgraph(const Graph& g, NodeId target_n, RandomStream& rng) {
    if (target_n == 0 || target_n > g.n()) {
        throw std::invalid_argument("target_n must be in [1, n]");
    }
    std::vector<NodeId> ids(g.n());
    for (NodeId i = 0; i < g.n(); ++i) ids[i] = i;
    for (NodeId i = 0; i < target_n; ++i) {
        const NodeId j = i + static_cast<NodeId>(rng.below(g.n() - i));
        std::swap(ids[i], ids[j]);
    }
    ids.resize(target_n);
    std::sort(ids.begin(), ids.end());

    std::vector<NodeId> remap(g.n(), g.n());
    for (NodeId i = 0; i < target_n; ++i) remap[ids[i]] = i;

    std::vector<std::pair<NodeId, NodeId>> edges;
    for (NodeId u : ids) {
        for (NodeId v : g.neighbors(u)) {
            if (v > u && remap[v] != g.n()) edges.emplace_back(remap[u], remap[v]);
        }
    }
    return Graph::from_edges(target_n, std::move(edges));
}

// Configuration-model graph whose degrees are drawn iid with
// P(degree = d) proportional to d^(-exponent) on [1, n-1]. Self-loops and
// multi-edges from the pairing are discarded, so realized degrees can fall
// slightly below the drawn ones.
inline Graph generate_power_law(NodeId n, double exponent, RandomStream& rng) {
    if (n < 2) throw std::invalid_argument("power-law generator needs n >= 2");
    std::vector<double> cdf(n - 1);
    double total = 0;
    for (NodeId d = 1; d < n; ++d) {
        total += std::pow(static_cast<double>(d), -exponent);
        cdf[d - 1] = total;
    }
    for (auto& c : cdf) c /= total;

    std::vector<NodeId> deg(n);
    std::uint64_t stub_count = 0;
    for (NodeId i = 0; i < n; ++i) {
        const double u = rng.uniform();
        const auto it = std::lower_bound(cdf.begin(), cdf.end(), u);
        deg[i] = static_cast<NodeId>(it - cdf.begin()) + 1;
        stub_count += deg[i];
    }
    if (stub_count % 2 == 1) {
        // fix parity on a uniformly chosen node
        deg[rng.below(n)] += 1;
        ++stub_count;
    }

    std::vector<NodeId> stubs;
    stubs.reserve(stub_count);
    for (NodeId i = 0; i < n; ++i) stubs.insert(stubs.end(), deg[i], i);
    rng.shuffle(stubs);

    std::set<std::pair<NodeId, NodeId>> edge_set;
    for (std::size_t k = 0; k + 1 < stubs.size(); k += 2) {
        const NodeId u = stubs[k], v = stubs[k + 1];
        if (u == v) continue;
        edge_set.emplace(std::min(u, v), std::max(u, v));
    }
    return Graph::from_edges(
        n, std::vector<std::pair<NodeId, NodeId>>(edge_set.begin(), edge_set.end()));
}

inline Graph erdos_renyi(NodeId n, double p, RandomStream& rng) {
    std::vector<std::pair<NodeId, NodeId>> edges;
    for (NodeId u = 0; u < n; ++u) {
        for (NodeId v = u + 1; v < n; ++v) {
            if (rng.bernoulli(p)) edges.emplace_back(u, v);
        }
    }
    return Graph::from_edges(n, std::move(edges));
}

// ---------------------------------------------------------------------------
// Exact subgraph statistics
// ---------------------------------------------------------------------------

struct GroundTruth {
    std::uint64_t triangles = 0;
    std::uint64_t four_cycles = 0;
    std::uint64_t two_stars = 0;
    std::uint64_t three_stars = 0;
    std::uint64_t walks4 = 0;  // ordered walks with exactly 4 edges
};

// Exact triangle count via intersection over ordered triples i > j > k.
inline std::uint64_t count_triangles(const Graph& g) {
    std::uint64_t count = 0;
    std::vector<char> mark(g.n(), 0);
    for (NodeId i = 0; i < g.n(); ++i) {
        const auto lower = g.lower_neighbors(i);
        for (NodeId j : lower) mark[j] = 1;
        for (NodeId j : lower) {
            for (NodeId k : g.neighbors(j)) {
                if (k >= j) break;
                if (mark[k]) ++count;
            }
        }
        for (NodeId j : lower) mark[j] = 0;
    }
    return count;
}

// Exact number of (unordered) 4-cycles: half the sum over node pairs of
// C(codegree, 2), accumulated through 2-walk counting.
inline std::uint64_t count_four_cycles(const Graph& g) {
    std::uint64_t twice_count = 0;
    std::vector<std::uint32_t> codeg(g.n(), 0);
    std::vector<NodeId> touched;
    for (NodeId u = 0; u < g.n(); ++u) {
        touched.clear();
        for (NodeId v : g.neighbors(u)) {
            for (NodeId w : g.neighbors(v)) {
                if (w <= u) continue;
                if (codeg[w]++ == 0) touched.push_back(w);
            }
        }
        for (NodeId w : touched) {
            const std::uint64_t c = codeg[w];
            twice_count += c * (c - 1) / 2;
            codeg[w] = 0;
        }
    }
    return twice_count / 2;
}

// S2, S3 from binomial identities; W4 from iterated neighbor sums
// (1^T A^4 1 = || A^2 1 ||^2). Triangles and 4-cycles are filled in as well so
// the result can serve directly as a ground-truth record.
inline GroundTruth count_stars_and_walks(const Graph& g) {
    GroundTruth gt;
    std::vector<std::uint64_t> two_walk(g.n(), 0);
    for (NodeId u = 0; u < g.n(); ++u) {
        const std::uint64_t d = g.degree(u);
        gt.two_stars += d * (d - 1) / 2;
        gt.three_stars += d >= 3 ? d * (d - 1) * (d - 2) / 6 : 0;
        for (NodeId v : g.neighbors(u)) two_walk[u] += g.degree(v);
    }
    for (NodeId u = 0; u < g.n(); ++u) gt.walks4 += two_walk[u] * two_walk[u];
    gt.triangles = count_triangles(g);
    gt.four_cycles = count_four_cycles(g);
    return gt;
}

}  // namespace grouprr

#endif  // GROUPRR_GRAPH_HPP
