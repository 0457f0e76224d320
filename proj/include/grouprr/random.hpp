#ifndef GROUPRR_RANDOM_HPP
#define GROUPRR_RANDOM_HPP

#include <cmath>
#include <cstdint>
#include <initializer_list>
#include <random>

namespace grouprr {

// splitmix64 finalizer; used both as a mixer for stream derivation and to
// expand user seeds into full mt19937_64 state.
inline std::uint64_t splitmix64_next(std::uint64_t& state) {
    state += 0x9e3779b97f4a7c15ULL;
    std::uint64_t z = state;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

// Role tags keep substreams for different protocol duties disjoint even when
// the other key components collide.
enum class StreamRole : std::uint64_t {
    graph_gen = 1,
    subsample = 2,
    hash_scheme = 3,
    degree = 4,
    publish = 5,
    css = 6,
    final_noise = 7,
    trial = 8,
    misc = 9,
};

// Collapses (master seed, trial, user, role, ...) into one 64-bit seed.
// Every component feeds the splitmix chain, so streams keyed by different
// tuples are independent for simulation purposes.
inline std::uint64_t derive_seed(std::initializer_list<std::uint64_t> parts) {
    std::uint64_t state = 0x243f6a8885a308d3ULL;  // arbitrary nonzero start
    for (std::uint64_t p : parts) {
        state ^= splitmix64_next(state) ^ p;
        (void)splitmix64_next(state);
    }
    return splitmix64_next(state);
}

// Deterministic random stream. All transforms (uniform doubles, bounded
// integers, Laplace) are implemented on top of raw 64-bit output so that
// sequences are identical across standard library implementations.
class RandomStream {
public:
    explicit RandomStream(std::uint64_t seed) : gen_(seed) {}

    std::uint64_t next_u64() { return gen_(); }

    // Uniform in [0, 1), 53-bit resolution.
    double uniform() {
        return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
    }

    // Uniform in (0, 1); safe as input to logarithms.
    double uniform_open() {
        return (static_cast<double>(next_u64() >> 11) + 0.5) * 0x1.0p-53;
    }

    // Uniform integer in [0, bound) via rejection sampling.
    std::uint64_t below(std::uint64_t bound) {
        if (bound <= 1) return 0;
        const std::uint64_t limit = ~std::uint64_t{0} - (~std::uint64_t{0} % bound);
        std::uint64_t v;
        do {
            v = next_u64();
        } while (v >= limit);
        return v % bound;
    }

    bool bernoulli(double p) { return uniform() < p; }

    double laplace(double scale) {
        const double u = uniform_open() - 0.5;
        return (u < 0 ? scale : -scale) * std::log1p(-2.0 * std::fabs(u));
    }

    // Fisher-Yates over [0, n); writes a permutation into out[0..n).
    template <typename Vec>
    void shuffle(Vec& v) {
        for (std::size_t i = v.size(); i > 1; --i) {
            const std::size_t j = static_cast<std::size_t>(below(i));
            std::swap(v[i - 1], v[j]);
        }
    }

private:
    std::mt19937_64 gen_;
};

inline RandomStream substream(std::uint64_t master, std::uint64_t trial,
                              StreamRole role, std::uint64_t a = 0,
                              std::uint64_t b = 0) {
    return RandomStream(derive_seed(
        {master, trial, static_cast<std::uint64_t>(role), a, b}));
}

}  // namespace grouprr

#endif  // GROUPRR_RANDOM_HPP
