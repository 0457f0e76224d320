#ifndef GROUPRR_PRIMITIVES_HPP
#define GROUPRR_PRIMITIVES_HPP

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <vector>

#include "grouprr/random.hpp"

namespace grouprr {

// ---------------------------------------------------------------------------
// Numerically stable helpers for the randomized-response algebra. These keep
// the degenerate large-epsilon configurations (used as noiseless oracles in
// tests) free of inf/inf artifacts.
// ---------------------------------------------------------------------------

// e^x - 1, saturating to +inf for large x.
inline double expm1_pos(double x) { return std::expm1(x); }

// 1 / (1 + e^x), stable for large |x|.
inline double inv_one_plus_exp(double x) {
    if (x >= 0) {
        const double t = std::exp(-x);
        return t / (1.0 + t);
    }
    return 1.0 / (1.0 + std::exp(x));
}

// e^x / (1 + e^x) = probability that randomized response keeps a 1-bit.
inline double rr_keep_probability(double eps) { return 1.0 - inv_one_plus_exp(eps); }

// (e^x + 1) / (e^x - 1) = 1 + 2/(e^x - 1), -> 1 as x -> inf.
inline double coth_half_ratio(double x) { return 1.0 + 2.0 / std::expm1(x); }

// ---------------------------------------------------------------------------
// Primality
// ---------------------------------------------------------------------------

namespace detail {

inline std::uint64_t mulmod_u64(std::uint64_t a, std::uint64_t b, std::uint64_t mod) {
    return static_cast<std::uint64_t>(
        (static_cast<unsigned __int128>(a) * b) % mod);
}

inline std::uint64_t powmod_u64(std::uint64_t base, std::uint64_t exp, std::uint64_t mod) {
    std::uint64_t result = 1 % mod;
    base %= mod;
    while (exp > 0) {
        if (exp & 1) result = mulmod_u64(result, base, mod);
        base = mulmod_u64(base, base, mod);
        exp >>= 1;
    }
    return result;
}

}  // namespace detail

// Deterministic Miller-Rabin; the witness set below is exact for all 64-bit
// inputs.
inline bool is_prime(std::uint64_t n) {
    if (n < 2) return false;
    for (std::uint64_t p : {2ULL, 3ULL, 5ULL, 7ULL, 11ULL, 13ULL, 17ULL, 19ULL, 23ULL, 29ULL, 31ULL, 37ULL}) {
        if (n % p == 0) return n == p;
    }
    std::uint64_t d = n - 1;
    int r = 0;
    while ((d & 1) == 0) {
        d >>= 1;
        ++r;
    }
    for (std::uint64_t a : {2ULL, 3ULL, 5ULL, 7ULL, 11ULL, 13ULL, 17ULL, 19ULL, 23ULL, 29ULL, 31ULL, 37ULL}) {
        std::uint64_t x = detail::powmod_u64(a, d, n);
        if (x == 1 || x == n - 1) continue;
        bool composite = true;
        for (int i = 0; i < r - 1; ++i) {
            x = detail::mulmod_u64(x, x, n);
            if (x == n - 1) {
                composite = false;
                break;
            }
        }
        if (composite) return false;
    }
    return true;
}

// Smallest prime strictly greater than n.
inline std::uint64_t smallest_prime_above(std::uint64_t n) {
    std::uint64_t candidate = n + 1;
    if (candidate <= 2) return 2;
    if ((candidate & 1) == 0) ++candidate;
    while (!is_prime(candidate)) candidate += 2;
    return candidate;
}

// ---------------------------------------------------------------------------
// Linear congruence hash scheme
// ---------------------------------------------------------------------------

// Public per-user hashing parameters. The extended key space is [0, p-1];
// keys in [n, p-1] are dummies with no edges. Groups are padded with further
// dummies so every group has exactly s members.
struct HashScheme {
    std::uint64_t p = 0;   // prime, > n
    std::uint64_t m = 0;   // number of groups, ceil(p / s)
    std::uint32_t s = 0;   // sampling size (group size after padding)
    std::uint64_t n = 0;   // real key count
    std::vector<std::pair<std::uint64_t, std::uint64_t>> coeffs;  // (theta_i, phi_i)

    static HashScheme create(std::uint64_t n, std::uint32_t s, RandomStream& rng) {
        if (s < 1) throw std::invalid_argument("sampling size must be >= 1");
        HashScheme scheme;
        scheme.n = n;
        scheme.s = s;
        scheme.p = smallest_prime_above(std::max<std::uint64_t>(n, 1));
        scheme.m = (scheme.p + s - 1) / s;
        scheme.coeffs.reserve(n);
        for (std::uint64_t i = 0; i < n; ++i) {
            const std::uint64_t theta = 1 + rng.below(scheme.p - 1);
            const std::uint64_t phi = rng.below(scheme.p);
            scheme.coeffs.emplace_back(theta, phi);
        }
        return scheme;
    }

    // h_i(x) = ((theta_i * x + phi_i) mod p) mod m. Valid for p < 2^31 without
    // 128-bit arithmetic; we just use 64x64->128 to support the full range.
    std::uint64_t hash(std::uint64_t user, std::uint64_t key) const {
        if (key >= p) throw std::invalid_argument("hash key outside [0, p-1]");
        const auto [theta, phi] = coeffs.at(user);
        const std::uint64_t y =
            (detail::mulmod_u64(theta, key, p) + phi) % p;
        return y % m;
    }

    // Number of extended keys (members of [0, p-1]) in bin t, before padding.
    std::uint64_t bin_population(std::uint64_t t) const {
        return (p - 1 - t) / m + 1;
    }

    // Exact probability, over the draw of (theta, phi), that two fixed
    // distinct keys hash to the same bin.
    double collision_probability() const {
        const std::uint64_t lo = p / m;
        const std::uint64_t full = p - m * lo;  // bins holding lo + 1 keys
        const double pairs = static_cast<double>(full) * (lo + 1) * lo +
                             static_cast<double>(m - full) * lo * (lo - 1);
        return pairs / (static_cast<double>(p) * (p - 1));
    }

    // Key occupying slot `slot` of bin t for user `user`, where slots
    // [0, bin_population(t)) hold extended keys and higher slots are padding
    // dummies. Padding dummies are reported as p + slot (always >= n, never
    // adjacent to anything).
    std::uint64_t slot_key(std::uint64_t user, std::uint64_t t, std::uint32_t slot) const {
        if (slot >= bin_population(t)) return p + slot;
        const auto [theta, phi] = coeffs.at(user);
        const std::uint64_t y = t + static_cast<std::uint64_t>(slot) * m;
        const std::uint64_t theta_inv = detail::powmod_u64(theta, p - 2, p);
        const std::uint64_t delta = (y + p - phi % p) % p;
        return detail::mulmod_u64(theta_inv, delta, p);
    }
};

// Materialized partition of the extended key space for one user: m groups of
// exactly s keys each. Used by tests and by the representative picker.
inline std::vector<std::vector<std::uint64_t>> partition_groups(
    const HashScheme& scheme, std::uint64_t user) {
    std::vector<std::vector<std::uint64_t>> groups(scheme.m);
    const auto [theta, phi] = scheme.coeffs.at(user);
    const std::uint64_t theta_inv = detail::powmod_u64(theta, scheme.p - 2, scheme.p);
    for (std::uint64_t t = 0; t < scheme.m; ++t) {
        auto& g = groups[t];
        g.reserve(scheme.s);
        const std::uint64_t population = scheme.bin_population(t);
        for (std::uint64_t j = 0; j < population; ++j) {
            const std::uint64_t y = t + j * scheme.m;
            const std::uint64_t delta = (y + scheme.p - phi) % scheme.p;
            g.push_back(detail::mulmod_u64(theta_inv, delta, scheme.p));
        }
        for (std::uint64_t j = population; j < scheme.s; ++j) {
            g.push_back(scheme.p + j);  // padding dummy
        }
    }
    return groups;
}

// ---------------------------------------------------------------------------
// Privacy budget primitives
// ---------------------------------------------------------------------------

// Three-way split of the total privacy budget.
struct BudgetSplit {
    double eps0 = 0;  // degree sharing
    double eps1 = 0;  // edge publication
    double eps2 = 0;  // counting step

    double total() const { return eps0 + eps1 + eps2; }

    // Default split when only the total is given: eps0 is kept small and the
    // remainder is shared evenly between publication and counting.
    static BudgetSplit from_total(double eps) {
        if (!(eps > 0)) throw std::invalid_argument("total epsilon must be positive");
        return BudgetSplit{0.1 * eps, 0.45 * eps, 0.45 * eps};
    }

    void validate() const {
        if (!(eps0 > 0) || !(eps1 > 0) || !(eps2 > 0)) {
            throw std::invalid_argument("all budget components must be positive");
        }
    }
};

// Amplified budget for group randomized response: running randomized response
// with eps' on a 1/s-sampled representative costs only eps1 overall.
inline double amplified_epsilon(double eps1, std::uint32_t s) {
    if (!(eps1 > 0)) throw std::invalid_argument("eps1 must be positive");
    if (s < 1) throw std::invalid_argument("s must be >= 1");
    return std::log1p(static_cast<double>(s) * std::expm1(eps1));
}

// Randomized response on a single bit.
inline int rr_flip(int bit, double eps, RandomStream& rng) {
    if (!(eps > 0)) throw std::invalid_argument("eps must be positive");
    const double p_one = bit ? rr_keep_probability(eps) : inv_one_plus_exp(eps);
    return rng.bernoulli(p_one) ? 1 : 0;
}

inline double laplace_sample(double scale, RandomStream& rng) {
    if (!(scale > 0)) throw std::invalid_argument("scale must be positive");
    return rng.laplace(scale);
}

// ---------------------------------------------------------------------------
// Z_gamma sampler (gamma = 4)
// ---------------------------------------------------------------------------

namespace zgamma {

// Density h(z) = (sqrt(2)/pi) / (1 + z^4); unit variance.
inline double density(double z) {
    const double z2 = z * z;
    return (std::sqrt(2.0) / M_PI) / (1.0 + z2 * z2);
}

// Antiderivative of 1/(1+t^4) evaluated on [0, z] in closed form.
inline double primitive(double z) {
    const double r2 = std::sqrt(2.0);
    const double num = z * z + r2 * z + 1.0;
    const double den = z * z - r2 * z + 1.0;
    return std::log(num / den) / (4.0 * r2) +
           (std::atan(r2 * z + 1.0) + std::atan(r2 * z - 1.0)) / (2.0 * r2);
}

// Exact CDF.
inline double cdf(double z) {
    const double g = z >= 0 ? primitive(z) : -primitive(-z);
    return 0.5 + (std::sqrt(2.0) / M_PI) * g;
}

// Upper-tail mass beyond z > 0 is ~ sqrt(2)/(3 pi z^3); inverted to seed the
// bracket for extreme quantiles.
inline double tail_quantile(double upper_mass) {
    return std::cbrt(std::sqrt(2.0) / (3.0 * M_PI * upper_mass));
}

struct QuantileTable {
    static constexpr int kSize = 4096;
    static constexpr double kZMax = 64.0;
    std::array<double, kSize + 1> z{};
    double u_max = 0;

    QuantileTable() {
        u_max = cdf(kZMax);
        for (int i = 0; i <= kSize; ++i) {
            const double u = 0.5 + (u_max - 0.5) * static_cast<double>(i) / kSize;
            z[static_cast<std::size_t>(i)] = invert(u, i == 0 ? 0.0 : z[static_cast<std::size_t>(i - 1)], kZMax);
        }
    }

    static double invert(double u, double lo, double hi) {
        for (int iter = 0; iter < 200 && hi - lo > 1e-13 * (1.0 + hi); ++iter) {
            const double mid = 0.5 * (lo + hi);
            (cdf(mid) < u ? lo : hi) = mid;
        }
        return 0.5 * (lo + hi);
    }
};

inline const QuantileTable& table() {
    static const QuantileTable t;
    return t;
}

}  // namespace zgamma

// Draws from the unit-variance heavy-tailed distribution used by the smooth
// sensitivity mechanism. Only gamma = 4 is supported; the variance of the
// distribution is unknown for gamma <= 3.
inline double z_gamma_sample(RandomStream& rng, int gamma = 4) {
    if (gamma != 4) throw std::invalid_argument("only gamma = 4 is supported");
    const auto& tab = zgamma::table();
    const double u = rng.uniform_open();
    const double v = u >= 0.5 ? u : 1.0 - u;  // fold onto the upper half
    double z;
    if (v >= tab.u_max) {
        const double hint = zgamma::tail_quantile(1.0 - v);
        z = zgamma::QuantileTable::invert(v, zgamma::QuantileTable::kZMax,
                                          std::max(2.0 * hint, 128.0));
    } else {
        const double pos = (v - 0.5) / (tab.u_max - 0.5) * zgamma::QuantileTable::kSize;
        const int cell = std::min(static_cast<int>(pos), zgamma::QuantileTable::kSize - 1);
        z = zgamma::QuantileTable::invert(
            v, tab.z[static_cast<std::size_t>(cell)], tab.z[static_cast<std::size_t>(cell + 1)]);
    }
    return u >= 0.5 ? z : -z;
}

// ---------------------------------------------------------------------------
// Debiasing parameters
// ---------------------------------------------------------------------------

// Affine transform turning a published representative bit into an unbiased
// edge estimate: a_hat = omega * bit - sigma_tilde. omega depends only on
// (m, s, eps'); sigma_tilde additionally depends on the publisher's noisy low
// degree.
struct DebiasParams {
    double omega = 0;
    double sigma_tilde = 0;
    double eps_prime = 0;
};

inline DebiasParams debias_params(double d_tilde, std::uint64_t m, std::uint32_t s,
                                  double eps_prime) {
    if (m < 2) throw std::invalid_argument("m must be >= 2");
    if (s < 1) throw std::invalid_argument("s must be >= 1");
    if (!(eps_prime > 0)) throw std::invalid_argument("eps_prime must be positive");
    const double ms = static_cast<double>(m) * s;
    const double ratio = (ms - 1.0) / (static_cast<double>(m) - 1.0);
    DebiasParams out;
    out.eps_prime = eps_prime;
    out.omega = coth_half_ratio(eps_prime) * ratio;
    out.sigma_tilde = (static_cast<double>(s) - 1.0) / (ms - static_cast<double>(s)) * d_tilde +
                      ratio / std::expm1(eps_prime);
    return out;
}

// Pure-theory publication probabilities as functions of the true low degree d.
// p_present / p_absent condition on the queried edge bit being 1 / 0; the
// primed variants compose with the randomized response.
inline double p_present(double d, std::uint64_t m, std::uint32_t s) {
    const double ms = static_cast<double>(m) * s;
    if (s == 1) return 1.0;
    return (s - 1.0) / s * (d - 1.0) / (ms - 1.0) + 1.0 / s;
}

inline double p_absent(double d, std::uint64_t m, std::uint32_t s) {
    const double ms = static_cast<double>(m) * s;
    if (s == 1) return 0.0;
    return (s - 1.0) / s * d / (ms - 1.0);
}

inline double rr_output_probability(double p, double eps) {
    return rr_keep_probability(eps) * p + inv_one_plus_exp(eps) * (1.0 - p);
}

inline double p_present_prime(double d, std::uint64_t m, std::uint32_t s, double eps_prime) {
    return rr_output_probability(p_present(d, m, s), eps_prime);
}

inline double p_absent_prime(double d, std::uint64_t m, std::uint32_t s, double eps_prime) {
    return rr_output_probability(p_absent(d, m, s), eps_prime);
}

// sigma as a function of the true degree (sigma_tilde with d_tilde = d).
inline double sigma_of_degree(double d, std::uint64_t m, std::uint32_t s, double eps_prime) {
    return debias_params(d, m, s, eps_prime).sigma_tilde;
}

}  // namespace grouprr

#endif  // GROUPRR_PRIMITIVES_HPP
