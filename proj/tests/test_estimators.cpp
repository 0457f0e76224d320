#include <catch_amalgamated.hpp>

#include <cmath>

#include "grouprr/estimators.hpp"
#include "grouprr/graph.hpp"
#include "grouprr/mechanisms.hpp"
#include "oracles.hpp"

using namespace grouprr;

namespace {

struct Pipeline {
    HashScheme scheme;
    std::vector<DegreeReport> reports;
    std::vector<ObfuscatedList> lists;
    std::vector<DebiasParams> params;
    double eps_prime = 0;
};

Pipeline run_protocol(const Graph& g, std::uint32_t s, double eps0, double eps1,
                      const TrialKeys& keys) {
    Pipeline p;
    auto scheme_rng = keys.scheme();
    p.scheme = HashScheme::create(g.n(), s, scheme_rng);
    p.reports = degree_sharing(g, eps0, keys);
    p.lists = group_rr_step(g, p.scheme, eps1, keys);
    p.eps_prime = amplified_epsilon(eps1, s);
    p.params.resize(g.n());
    for (NodeId j = 0; j < g.n(); ++j) {
        p.params[j] = debias_params(p.reports[j].d_tilde, p.scheme.m, s, p.eps_prime);
    }
    return p;
}

}  // namespace

TEST_CASE("triangle raw sum degenerate cases") {
    RandomStream seed(1);
    const auto g = erdos_renyi(25, 0.3, seed);
    const TrialKeys keys{42, 0};

    SECTION("fewer than two lower neighbors gives an empty sum") {
        const auto path = Graph::from_edges(3, {{0, 1}, {1, 2}});
        const auto p = run_protocol(path, 2, 1.0, 1.0, keys);
        DebiasedView view(p.lists, p.scheme, p.params, 1.0, 2, keys);
        const auto est = triangle_raw_sum(path, 0, view);
        CHECK(est.pairs.empty());
        CHECK(est.raw_sum == 0.0);
    }

    SECTION("noiseless degeneration recovers the exact per-user counts") {
        const auto p = run_protocol(g, 1, 1e7, 60.0, keys);
        double total = 0;
        for (NodeId i = 0; i < g.n(); ++i) {
            DebiasedView view(p.lists, p.scheme, p.params, 1.0, i, keys);
            const auto est = triangle_raw_sum(g, i, view);
            total += est.raw_sum;
        }
        CHECK(total == Catch::Approx(double(count_triangles(g))).margin(1e-4));
    }
}

TEST_CASE("triangle pipeline is unbiased before the final noise") {
    RandomStream seed(7);
    const auto g = erdos_renyi(40, 0.25, seed);
    const double truth = double(count_triangles(g));
    const int reps = 300;
    std::vector<double> totals(reps);
    for (int rep = 0; rep < reps; ++rep) {
        const TrialKeys keys{777, static_cast<std::uint64_t>(rep)};
        const auto p = run_protocol(g, 4, 1.0, 1.0, keys);
        double total = 0;
        for (NodeId i = 0; i < g.n(); ++i) {
            DebiasedView view(p.lists, p.scheme, p.params, 0.5, i, keys);
            total += triangle_raw_sum(g, i, view).raw_sum;
        }
        totals[rep] = total;
    }
    const double mean = oracles::sample_mean(totals);
    const double ci = 4.0 * std::sqrt(oracles::sample_variance(totals) / reps);
    CAPTURE(mean, truth, ci);
    CHECK(std::fabs(mean - truth) < ci);
}

TEST_CASE("clipping parameters use public quantities") {
    const auto cp = make_clipping_params(5.0, 0.1, 1e-3, 100, 5, 2.0, 0.5);
    const double d_hat = 5.0 + std::log(2000.0) / 0.1;
    CHECK(cp.d_hat == Catch::Approx(d_hat));
    const auto dp = debias_params(5.0, 100, 5, 2.0);
    CHECK(cp.var_bound == Catch::Approx(dp.omega * (1.0 + dp.sigma_tilde) / 0.5));
    CHECK(cp.cov_bound ==
          Catch::Approx(2.0 * 4.0 / 499.0 * dp.omega * (1.0 + dp.sigma_tilde) / 0.5));
    CHECK(cp.b == Catch::Approx(d_hat + std::sqrt(2000.0 * (d_hat * cp.var_bound +
                                                            d_hat * d_hat * cp.cov_bound))));

    // negative noisy degree clamps to zero
    const auto cp0 = make_clipping_params(-500.0, 0.1, 1e-3, 100, 5, 2.0, 0.5);
    CHECK(cp0.d_hat == 0.0);
    CHECK(cp0.b == 0.0);
}

TEST_CASE("clip and noise leaves compliant estimates untouched") {
    RandomStream seed(9);
    const auto g = erdos_renyi(30, 0.3, seed);
    const TrialKeys keys{55, 0};
    const auto p = run_protocol(g, 3, 1.0, 1.0, keys);
    const NodeId i = 29;
    DebiasedView view(p.lists, p.scheme, p.params, 1.0, i, keys);
    auto est = triangle_raw_sum(g, i, view);
    const double raw = est.raw_sum;

    const auto cp = make_clipping_params(p.reports[i].d_tilde, 1.0, 1e-3, p.scheme.m, 3,
                                         p.eps_prime, 1.0);
    auto rng = keys.final_noise(i);
    const auto out = clip_and_noise(est, cp, 1.0, rng);
    CHECK(out.clipped_terms == 0);
    CHECK_FALSE(out.clamp_fallback);
    CHECK(out.clipped_sum == Catch::Approx(raw));
    CHECK(out.max_partial_after <= cp.b + 1e-9);

    // the added noise is exactly one Laplace(b / eps2) draw
    auto rng2 = keys.final_noise(i);
    CHECK(out.noised == Catch::Approx(raw + rng2.laplace(cp.b / 1.0)));
}

TEST_CASE("clipping enforces the partial-sum bound when forced") {
    RandomStream seed(10);
    const auto g = erdos_renyi(30, 0.5, seed);
    const TrialKeys keys{56, 0};
    const auto p = run_protocol(g, 3, 1.0, 1.0, keys);
    const NodeId i = 29;
    DebiasedView view(p.lists, p.scheme, p.params, 1.0, i, keys);
    auto est = triangle_raw_sum(g, i, view);

    // tiny bound: clipping must fire and still satisfy the contract
    ClippingParams cp;
    cp.beta = 1e-3;
    cp.d_hat = 0.5;
    cp.b = 0.5;
    auto rng = keys.final_noise(i);
    const auto out = clip_and_noise(est, cp, 1.0, rng);
    CHECK(out.max_partial_after <= cp.b + 1e-9);
    CHECK(out.clipped_terms > 0);
}

TEST_CASE("laplace noise of the counting step has the advertised variance") {
    RandomStream rng(4711);
    const double b = 3.5, eps2 = 0.7;
    const int trials = 400000;
    std::vector<double> draws(trials);
    for (auto& d : draws) d = rng.laplace(b / eps2);
    const double var = oracles::sample_variance(draws);
    CHECK(var == Catch::Approx(2.0 * (b / eps2) * (b / eps2)).epsilon(0.03));
}

TEST_CASE("smooth sensitivity closed form equals integer scan") {
    RandomStream rng(2718);
    for (int rep = 0; rep < 20; ++rep) {
        const double ub = rng.uniform() * 50.0;
        const double step = 0.1 + rng.uniform() * 20.0;
        const double beta = 0.01 + rng.uniform() * 0.5;
        const double closed = smooth_s_star(ub, step, beta);
        double brute = 0;
        const int kmax = static_cast<int>(10.0 / beta) + 2;
        for (int k = 0; k <= kmax; ++k) {
            brute = std::max(brute, std::exp(-beta * k) * (ub + k * step));
        }
        CAPTURE(ub, step, beta);
        CHECK(closed == Catch::Approx(brute).margin(1e-9));
    }
}

TEST_CASE("smooth sensitivity of an isolated user follows the degenerate formula") {
    const double beta = 0.25, step = 2.0;
    const double s_star = smooth_s_star(0.0, step, beta);
    const double k_star = std::floor(1.0 / beta);
    CHECK(s_star == Catch::Approx(std::exp(-beta * k_star) * k_star * step));
}

TEST_CASE("smooth sensitivity dominates local sensitivity on small graphs") {
    RandomStream meta(33);
    int checked_users = 0;
    for (int rep = 0; rep < 8; ++rep) {
        RandomStream graph_rng(meta.next_u64());
        const auto g = erdos_renyi(8, 0.2 + 0.6 * meta.uniform(), graph_rng);
        const TrialKeys keys{static_cast<std::uint64_t>(600 + rep), 0};
        const auto p = run_protocol(g, 2, 1.0, 1.0, keys);
        for (NodeId i = 0; i < g.n(); ++i) {
            DebiasedView view(p.lists, p.scheme, p.params, 0.5, i, keys);
            auto rng = keys.final_noise(i);
            const auto res = smooth_sensitivity_noise(g, i, view, p.params, 1.0, rng);
            // exact local sensitivity by flipping every bit of user i's list
            const auto f_of = [&](const std::vector<char>& bits) {
                double sum = 0;
                std::vector<NodeId> lower;
                for (NodeId v = 0; v < i; ++v)
                    if (bits[v]) lower.push_back(v);
                for (std::size_t a = 0; a < lower.size(); ++a)
                    for (std::size_t b = a + 1; b < lower.size(); ++b)
                        sum += view.estimate_pair(lower[a], lower[b]);
                return sum;
            };
            std::vector<char> bits(g.n(), 0);
            for (NodeId v : g.neighbors(i)) bits[v] = 1;
            const double base = f_of(bits);
            double ls = 0;
            for (NodeId v = 0; v < g.n(); ++v) {
                if (v == i) continue;
                auto flipped = bits;
                flipped[v] ^= 1;
                ls = std::max(ls, std::fabs(f_of(flipped) - base));
            }
            CAPTURE(rep, i, ls, res.sens.s_star);
            CHECK(res.sens.s_star >= ls - 1e-9);
            ++checked_users;
        }
    }
    CHECK(checked_users > 0);
}

TEST_CASE("four-cycle estimator") {
    const TrialKeys keys{77, 0};

    SECTION("noiseless degeneration equals the exact count") {
        RandomStream seed(13);
        const auto g = erdos_renyi(18, 0.35, seed);
        const auto p = run_protocol(g, 1, 1e7, 60.0, keys);
        const PairHashTable hashes(p.scheme, g.n());
        double total = 0;
        for (NodeId i = 0; i < g.n(); ++i) {
            DebiasedView view(p.lists, p.scheme, p.params, 1.0, i, keys);
            const auto table = view.pair_table(g.n());
            total += four_cycle_raw(g, i, view, table, hashes).raw_sum;
        }
        total /= kFourCycleCornerCount;
        CHECK(total == Catch::Approx(double(count_four_cycles(g))).margin(1e-3));
    }

    SECTION("single 4-cycle graph, noiseless") {
        const auto g = Graph::from_edges(4, {{0, 1}, {1, 2}, {2, 3}, {3, 0}});
        const auto p = run_protocol(g, 1, 1e7, 60.0, keys);
        const PairHashTable hashes(p.scheme, g.n());
        double total = 0;
        for (NodeId i = 0; i < g.n(); ++i) {
            DebiasedView view(p.lists, p.scheme, p.params, 1.0, i, keys);
            const auto table = view.pair_table(g.n());
            total += four_cycle_raw(g, i, view, table, hashes).raw_sum;
        }
        CHECK(total / kFourCycleCornerCount == Catch::Approx(1.0).margin(1e-6));
    }

    SECTION("pre-noise unbiasedness on a random bipartite graph") {
        RandomStream seed(14);
        std::vector<std::pair<NodeId, NodeId>> edges;
        for (NodeId u = 0; u < 15; ++u)
            for (NodeId v = 15; v < 30; ++v)
                if (seed.bernoulli(0.3)) edges.emplace_back(u, v);
        const auto g = Graph::from_edges(30, edges);
        const double truth = double(count_four_cycles(g));
        const int reps = 300;
        std::vector<double> totals(reps);
        for (int rep = 0; rep < reps; ++rep) {
            const TrialKeys k{888, static_cast<std::uint64_t>(rep)};
            const auto p = run_protocol(g, 3, 1.0, 1.0, k);
            const PairHashTable hashes(p.scheme, g.n());
            double total = 0;
            for (NodeId i = 0; i < g.n(); ++i) {
                DebiasedView view(p.lists, p.scheme, p.params, 0.5, i, k);
                const auto table = view.pair_table(g.n());
                total += four_cycle_raw(g, i, view, table, hashes).raw_sum;
            }
            totals[rep] = total / kFourCycleCornerCount;
        }
        const double mean = oracles::sample_mean(totals);
        const double ci = 4.0 * std::sqrt(oracles::sample_variance(totals) / reps);
        CAPTURE(mean, truth, ci);
        CHECK(std::fabs(mean - truth) < ci);
    }
}

TEST_CASE("four-cycle clipping clamps pair sums") {
    RandomStream seed(15);
    const auto g = erdos_renyi(20, 0.4, seed);
    const TrialKeys keys{99, 0};
    const auto p = run_protocol(g, 2, 1.0, 1.0, keys);
    const NodeId i = 10;
    DebiasedView view(p.lists, p.scheme, p.params, 1.0, i, keys);
    const auto table = view.pair_table(g.n());
    const PairHashTable hashes(p.scheme, g.n());
    auto est = four_cycle_raw(g, i, view, table, hashes);
    if (est.pairs.empty()) return;

    FourCycleClipParams qp;
    qp.beta = 1e-3;
    qp.d_hat_full = 100.0;
    qp.pair_bound = 1e-6;  // force clamping of every nonzero pair sum
    qp.contribution_bound = qp.d_hat_full * qp.pair_bound;
    auto rng = keys.final_noise(i);
    const auto out = four_cycle_clip_and_noise(est, qp, 1.0, rng);
    CHECK(out.clamped_pairs > 0);
    CHECK(std::fabs(out.clipped_sum) <=
          qp.pair_bound * double(est.pairs.size()) + 1e-9);
}

TEST_CASE("aggregate is a plain sum") {
    CHECK(aggregate({}) == 0.0);
    CHECK(aggregate({0.0, 0.0}) == 0.0);
    CHECK(aggregate({3.5}) == 3.5);
    const std::vector<double> x{1, 2, 3}, y{4, 5, 6};
    std::vector<double> xy(3);
    for (int i = 0; i < 3; ++i) xy[i] = x[i] + y[i];
    CHECK(aggregate(x) + aggregate(y) == Catch::Approx(aggregate(xy)));
}

TEST_CASE("css variance ordering on a walk-heavy graph at matched download") {
    // star-of-stars: hubs produce many 4-walks; CSS at matched budget should
    // not be worse than plain grouping with a larger s.
    std::vector<std::pair<NodeId, NodeId>> edges;
    const NodeId hub_a = 0, hub_b = 1;
    edges.emplace_back(hub_a, hub_b);
    for (NodeId v = 2; v < 62; ++v) {
        edges.emplace_back(hub_a, v);
        edges.emplace_back(hub_b, v);
    }
    const auto g = Graph::from_edges(62, edges);
    const double truth = double(count_triangles(g));

    auto run_config = [&](std::uint32_t s, double mu_c, std::uint64_t master) {
        std::vector<double> errors;
        for (int rep = 0; rep < 21; ++rep) {
            const TrialKeys keys{master, static_cast<std::uint64_t>(rep)};
            const auto p = run_protocol(g, s, 1.0, 1.0, keys);
            double total = 0;
            for (NodeId i = 0; i < g.n(); ++i) {
                DebiasedView view(p.lists, p.scheme, p.params, mu_c, i, keys);
                total += triangle_raw_sum(g, i, view).raw_sum;
            }
            errors.push_back((total - truth) * (total - truth));
        }
        std::sort(errors.begin(), errors.end());
        return errors[errors.size() / 2];
    };

    // both configurations target mu* = 1/64
    const double css = run_config(4, 0.25, 31000);
    const double plain = run_config(8, 1.0, 32000);
    CAPTURE(css, plain);
    CHECK(css < plain);
}
