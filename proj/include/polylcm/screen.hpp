#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "polylcm/fp.hpp"
#include "polylcm/poly.hpp"
#include "polylcm/primality.hpp"
#include "polylcm/primes.hpp"

namespace polylcm {

enum class TriState { yes, no, unknown };

inline const char* to_string(TriState t) {
    switch (t) {
        case TriState::yes: return "yes";
        case TriState::no: return "no";
        default: return "unknown";
    }
}

struct ScreenResult {
    TriState verdict = TriState::unknown;
    std::string witness; // factor for `no`, certifying prime for `yes`
};

struct PolyProfile {
    int degree = 0;
    mpz_class discriminant;
    ScreenResult irreducible;
    std::uint64_t rational_zero_free_on = 0; // f has no integer zero in [1, this]
};

namespace detail {

struct Factorization {
    std::vector<std::pair<mpz_class, unsigned>> factors;
    bool complete = true;
};

inline Factorization factor_by_trial(mpz_class v, std::uint64_t trial_bound = 1'000'000) {
    Factorization out;
    v = abs(v);
    if (v <= 1) return out;
    auto strip = [&](std::uint64_t d) {
        unsigned e = 0;
        while (mpz_divisible_ui_p(v.get_mpz_t(), d)) {
            mpz_divexact_ui(v.get_mpz_t(), v.get_mpz_t(), d);
            ++e;
        }
        if (e > 0) out.factors.emplace_back(mpz_class(static_cast<unsigned long>(d)), e);
    };
    strip(2);
    for (std::uint64_t d = 3; d <= trial_bound && d * d <= v; d += 2) strip(d);
    if (v > 1) {
        if (v <= trial_bound * trial_bound || classify_prime(v) == Primality::prime) {
            out.factors.emplace_back(v, 1);
        } else {
            out.complete = false; // cofactor not certified prime; caller must fall back
        }
    }
    return out;
}

// All divisors <= limit; empty optional when the enumeration would explode.
inline std::optional<std::vector<mpz_class>> divisors_up_to(const Factorization& fact, const mpz_class& limit,
                                                            std::size_t cap = 200'000) {
    std::vector<mpz_class> divs{1};
    if (divs[0] > limit) divs.clear();
    for (const auto& [p, e] : fact.factors) {
        std::size_t base = divs.size();
        mpz_class pw = 1;
        for (unsigned i = 1; i <= e; ++i) {
            pw *= p;
            if (pw > limit) break;
            for (std::size_t j = 0; j < base; ++j) {
                mpz_class d = divs[j] * pw;
                if (d <= limit) divs.push_back(d);
                if (divs.size() > cap) return std::nullopt;
            }
        }
    }
    return divs;
}

} // namespace detail

// First integer zero of f in [1, hi], if any. An integer zero n divides
// the constant term of f with powers of x stripped, so this is a divisor
// test rather than a scan; an O(hi) divisibility scan remains as the
// fallback when the constant term resists factoring.
inline std::optional<std::uint64_t> find_integer_zero(const IntPolynomial& f, std::uint64_t hi) {
    if (f.is_zero()) return 1;
    std::size_t shift = 0;
    while (f.coeff(shift) == 0) ++shift;
    std::vector<mpz_class> g_coeffs(f.coeffs().begin() + static_cast<long>(shift), f.coeffs().end());
    IntPolynomial g(std::move(g_coeffs)); // f = x^shift * g, g(0) != 0
    if (g.degree() == 0) return std::nullopt;

    const mpz_class& g0 = g.coeff(0);
    const mpz_class limit = mpz_from_u64(hi);
    auto fact = detail::factor_by_trial(g0);
    if (fact.complete) {
        if (auto divs = detail::divisors_up_to(fact, limit)) {
            std::optional<std::uint64_t> best;
            for (const auto& d : divs.value())
                if (g(d) == 0) {
                    std::uint64_t n = mpz_to_u64(d);
                    if (!best || n < *best) best = n;
                }
            return best;
        }
    }
    for (std::uint64_t n = 1; n <= hi; ++n)
        if (mpz_divisible_ui_p(g0.get_mpz_t(), static_cast<unsigned long>(n)) && g(n) == 0) return n;
    return std::nullopt;
}

// True iff f(n) != 0 for every n in [1, hi].
inline bool certify_no_integer_zero(const IntPolynomial& f, std::uint64_t hi) {
    return !find_integer_zero(f, hi).has_value();
}

// A rational root p/q (lowest terms, q >= 1) yields the factor qx - p.
// Returns the factor, or nullopt if there is none (or the coefficient
// factorizations are too hostile to enumerate, in which case the caller
// simply cannot conclude reducibility this way).
inline std::optional<IntPolynomial> rational_root_factor(const IntPolynomial& f) {
    const int d = f.degree();
    if (d < 1) return std::nullopt;
    if (f.coeff(0) == 0) return IntPolynomial::parse("x");

    auto num_fact = detail::factor_by_trial(f.coeff(0));
    auto den_fact = detail::factor_by_trial(f.leading());
    if (!num_fact.complete || !den_fact.complete) return std::nullopt;

    const mpz_class num_limit = abs(f.coeff(0)), den_limit = abs(f.leading());
    auto nums = detail::divisors_up_to(num_fact, num_limit, 4096);
    auto dens = detail::divisors_up_to(den_fact, den_limit, 4096);
    if (!nums || !dens) return std::nullopt;

    for (const mpz_class& q : dens.value()) {
        for (const mpz_class& p_abs : nums.value()) {
            mpz_class g;
            mpz_gcd(g.get_mpz_t(), p_abs.get_mpz_t(), q.get_mpz_t());
            if (g != 1) continue;
            for (int sign : {1, -1}) {
                mpz_class p = sign > 0 ? p_abs : mpz_class(-p_abs);
                // f(p/q) * q^d = sum a_i p^i q^(d-i)
                mpz_class acc = 0, p_pow = 1;
                std::vector<mpz_class> q_pow(static_cast<std::size_t>(d) + 1);
                q_pow[static_cast<std::size_t>(d)] = 1;
                for (int i = d - 1; i >= 0; --i) q_pow[static_cast<std::size_t>(i)] = q_pow[static_cast<std::size_t>(i) + 1] * q;
                for (int i = 0; i <= d; ++i) {
                    acc += f.coeff(static_cast<std::size_t>(i)) * p_pow * q_pow[static_cast<std::size_t>(i)];
                    p_pow *= p;
                }
                if (acc == 0) {
                    std::vector<mpz_class> factor{-p, q};
                    return IntPolynomial(std::move(factor));
                }
            }
        }
    }
    return std::nullopt;
}

// Sound irreducibility screen over Q:
//   no      - rational root found, or disc f = 0 (repeated factor)
//   yes     - irreducible mod p for a prime p not dividing lc or disc
//   unknown - neither test fired; callers proceed but flag the run
inline ScreenResult irreducibility_screen(const IntPolynomial& f) {
    const int d = f.degree();
    if (d < 1) throw std::invalid_argument("irreducibility screen requires degree >= 1");
    if (d == 1) return {TriState::yes, "degree 1"};

    if (auto factor = rational_root_factor(f)) return {TriState::no, factor->str()};

    const mpz_class disc = discriminant(f);
    if (disc == 0) return {TriState::no, "repeated factor (disc f = 0)"};

    const auto primes = primes_up_to(10'000);
    int tried = 0;
    for (std::uint32_t p : primes) {
        if (tried >= 25) break;
        if (mpz_divisible_ui_p(f.leading().get_mpz_t(), p)) continue;
        if (mpz_divisible_ui_p(disc.get_mpz_t(), p)) continue;
        ++tried;
        if (fp::irreducible_mod_p(f, p)) return {TriState::yes, "irreducible mod " + std::to_string(p)};
    }
    return {TriState::unknown, ""};
}

inline PolyProfile build_profile(const IntPolynomial& f, std::uint64_t range_hi) {
    PolyProfile prof;
    prof.degree = f.degree();
    prof.discriminant = discriminant(f);
    prof.irreducible = irreducibility_screen(f);
    // Irreducible of degree >= 2 has no rational zero at all.
    if (prof.irreducible.verdict == TriState::yes && prof.degree >= 2)
        prof.rational_zero_free_on = range_hi;
    else
        prof.rational_zero_free_on = certify_no_integer_zero(f, range_hi) ? range_hi : 0;
    return prof;
}

} // namespace polylcm
