#pragma once

#include <array>
#include <cstdint>
#include <random>

#include <gmpxx.h>

namespace polylcm {

enum class Primality { composite, prime, probable_prime };

namespace detail {

// One strong-probable-prime round to base a (2 <= a <= n-2).
inline bool sprp_round(const mpz_class& n, const mpz_class& n_minus_1,
                       const mpz_class& odd_part, unsigned long two_exp,
                       const mpz_class& a) {
    mpz_class x;
    mpz_powm(x.get_mpz_t(), a.get_mpz_t(), odd_part.get_mpz_t(), n.get_mpz_t());
    if (x == 1 || x == n_minus_1) return true;
    for (unsigned long i = 1; i < two_exp; ++i) {
        x = (x * x) % n;
        if (x == n_minus_1) return true;
        if (x == 1) return false;
    }
    return false;
}

} // namespace detail

// Miller-Rabin. Below 3.317e24 the 13-base set {2..41} is a proven
// certificate (Sorenson & Webster), so the answer is deterministic.
// Above it, 40 rounds with seeded random bases; a pass is reported as
// probable_prime, never prime.
inline Primality classify_prime(const mpz_class& n, std::uint64_t seed = 0) {
    static constexpr std::array<unsigned, 13> kBases{2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37, 41};

    if (n < 2) return Primality::composite;
    for (unsigned b : kBases) {
        if (n == b) return Primality::prime;
        if (mpz_divisible_ui_p(n.get_mpz_t(), b)) return Primality::composite;
    }

    const mpz_class n_minus_1 = n - 1;
    mpz_class odd_part = n_minus_1;
    unsigned long two_exp = 0;
    while (mpz_even_p(odd_part.get_mpz_t())) {
        odd_part >>= 1;
        ++two_exp;
    }

    static const mpz_class kDeterministicLimit("3317044064679887385961981");
    if (n < kDeterministicLimit) {
        for (unsigned b : kBases)
            if (!detail::sprp_round(n, n_minus_1, odd_part, two_exp, mpz_class(b)))
                return Primality::composite;
        return Primality::prime;
    }

    // Derive a per-input generator so results do not depend on call order.
    std::mt19937_64 rng(seed ^ (0x9e3779b97f4a7c15ull * (1 + mpz_fdiv_ui(n.get_mpz_t(), 0x7fffffffull))));
    const mpz_class span = n - 4;
    for (int round = 0; round < 40; ++round) {
        mpz_class a = 2 + mpz_class(rng()) % span;
        if (!detail::sprp_round(n, n_minus_1, odd_part, two_exp, a)) return Primality::composite;
    }
    return Primality::probable_prime;
}

inline bool is_prime_u64(std::uint64_t v, std::uint64_t seed = 0) {
    return classify_prime(mpz_class(static_cast<unsigned long>(v)), seed) == Primality::prime;
}

} // namespace polylcm
