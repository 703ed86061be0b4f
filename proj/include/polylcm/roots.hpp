#pragma once

#include <algorithm>
#include <cstdint>
#include <map>
#include <optional>
#include <stdexcept>
#include <vector>

#include "polylcm/fp.hpp"
#include "polylcm/poly.hpp"
#include "polylcm/primality.hpp"

namespace polylcm {

inline constexpr std::uint64_t kDenseModulusCap = 1ull << 62;
inline constexpr std::uint64_t kBruteForceRootBound = 1000;

// f(x) mod m with 64-bit arithmetic; m < 2^63.
inline std::uint64_t eval_mod_u64(const IntPolynomial& f, std::uint64_t x, std::uint64_t m) {
    if (m == 1) return 0;
    std::uint64_t acc = 0;
    x %= m;
    for (std::size_t i = f.coeffs().size(); i-- > 0;) {
        acc = static_cast<std::uint64_t>((static_cast<unsigned __int128>(acc) * x) % m);
        std::uint64_t c = mpz_fdiv_ui(f.coeff(i).get_mpz_t(), static_cast<unsigned long>(m));
        acc += c;
        if (acc >= m) acc -= m;
    }
    return acc;
}

// One level of a root table. Dense levels hold all residues r in
// [0, p^k) with f(r) = 0 mod p^k. Once p^k exceeds the table's n_limit,
// levels switch to sparse form and hold the integers n in [1, n_limit]
// with p^k | f(n) -- which is all the sieve or any counting ever needs.
struct RootLevel {
    std::uint32_t k = 0;
    std::uint64_t modulus = 0; // p^k when dense, 0 when sparse
    std::vector<std::uint64_t> roots;

    bool dense() const { return modulus != 0; }
};

struct RootTable {
    std::uint64_t p = 0;
    bool singular = false;     // p divides disc f or the leading coefficient
    std::uint64_t n_limit = 0; // sparse levels keep roots in [1, n_limit]
    std::vector<RootLevel> levels; // levels[i].k == i+1; no trailing empty levels

    std::uint32_t depth() const { return static_cast<std::uint32_t>(levels.size()); }

    const RootLevel* level(std::uint32_t k) const {
        return (k >= 1 && k <= levels.size()) ? &levels[k - 1] : nullptr;
    }

    std::uint64_t root_count(std::uint32_t k) const {
        const RootLevel* l = level(k);
        return l ? l->roots.size() : 0;
    }
};

// Sorted roots of f modulo prime p. Brute force for small p; gcd with
// x^p - x plus equal-degree splitting above the brute-force bound.
// Errors if f vanishes identically mod p.
inline std::vector<std::uint64_t> roots_mod_p_unchecked(const IntPolynomial& f, std::uint64_t p,
                                                        std::uint64_t seed = 0) {
    fp::Poly reduced = fp::reduce(f, p);
    if (reduced.empty()) throw std::domain_error("polynomial vanishes identically mod " + std::to_string(p));
    std::vector<std::uint64_t> roots;
    if (fp::degree(reduced) == 0) return roots;
    if (p < kBruteForceRootBound) {
        for (std::uint64_t r = 0; r < p; ++r)
            if (eval_mod_u64(f, r, p) == 0) roots.push_back(r);
        return roots;
    }
    roots = fp::roots_by_splitting(reduced, p, seed);
    std::sort(roots.begin(), roots.end());
    return roots;
}

inline std::vector<std::uint64_t> roots_mod_p(const IntPolynomial& f, std::uint64_t p, std::uint64_t seed = 0) {
    if (p < 2 || classify_prime(mpz_class(static_cast<unsigned long>(p))) == Primality::composite)
        throw std::domain_error("modulus " + std::to_string(p) + " is not prime");
    return roots_mod_p_unchecked(f, p, seed);
}

namespace detail {

struct LiftedRoot {
    std::uint64_t r;
    bool simple; // f'(r) != 0 mod p
};

inline std::uint64_t mulmod_u64(std::uint64_t a, std::uint64_t b, std::uint64_t m) {
    return static_cast<std::uint64_t>((static_cast<unsigned __int128>(a) * b) % m);
}

// v_p(f(c)), clamped; f(c) = 0 counts as "at least clamp".
inline std::uint32_t valuation_at(const IntPolynomial& f, std::uint64_t c, std::uint64_t p, std::uint32_t clamp) {
    mpz_class v = f(c);
    if (v == 0) return clamp;
    mpz_class scratch;
    mp_bitcnt_t e = mpz_remove(scratch.get_mpz_t(), v.get_mpz_t(), mpz_class(static_cast<unsigned long>(p)).get_mpz_t());
    return static_cast<std::uint32_t>(std::min<mp_bitcnt_t>(e, clamp));
}

} // namespace detail

// Root table of f for prime p with levels k = 1..k_max (stopping early
// once a level is empty). Simple roots advance by the Newton/Hensel
// step, one child per level; singular roots enumerate the p candidate
// lifts and keep those that verify. Dense levels stop at n_limit (or at
// 2^62); beyond, levels are computed from exact valuations of f at the
// surviving integer points.
inline RootTable lift_roots(const IntPolynomial& f, std::uint64_t p, std::uint32_t k_max,
                            std::uint64_t n_limit = UINT64_MAX / 2, std::uint64_t seed = 0,
                            const mpz_class* known_disc = nullptr) {
    if (k_max < 1) throw std::domain_error("k_max must be >= 1");
    if (p > kDenseModulusCap) throw std::domain_error("prime too large for root tables");

    RootTable table;
    table.p = p;
    table.n_limit = n_limit;

    const mpz_class disc = known_disc ? *known_disc : (f.degree() >= 1 ? discriminant(f) : mpz_class(0));
    const bool lc_divisible = f.degree() >= 0 && mpz_divisible_ui_p(f.leading().get_mpz_t(), static_cast<unsigned long>(p));
    table.singular = lc_divisible || mpz_divisible_ui_p(disc.get_mpz_t(), static_cast<unsigned long>(p));

    const IntPolynomial fprime = f.derivative();
    const std::uint64_t dense_cap = std::min(n_limit, kDenseModulusCap);

    // Nagell's bound: for p | disc f (disc != 0) the root count per level
    // stays below d (disc f)^2. Exceeding it means the lifting is broken.
    mpz_class nagell_bound = 0;
    if (table.singular && disc != 0) nagell_bound = mpz_class(f.degree()) * disc * disc;
    auto check_nagell = [&](std::size_t count, std::uint32_t k) {
        if (nagell_bound != 0 && mpz_class(static_cast<unsigned long>(count)) > nagell_bound)
            throw std::logic_error("singular root count at p=" + std::to_string(p) + " k=" + std::to_string(k) +
                                   " exceeds Nagell bound; lifting is inconsistent");
    };

    std::vector<detail::LiftedRoot> current;
    for (std::uint64_t r : roots_mod_p_unchecked(f, p, seed))
        current.push_back({r, eval_mod_u64(fprime, r, p) != 0});
    if (current.empty()) return table;

    check_nagell(current.size(), 1);
    {
        RootLevel l1;
        l1.k = 1;
        l1.modulus = p;
        for (const auto& root : current) l1.roots.push_back(root.r);
        table.levels.push_back(std::move(l1));
    }

    std::uint64_t modulus = p;
    std::uint32_t k = 1;
    while (k < k_max) {
        if (modulus > dense_cap / p) break; // next level would leave the dense range
        const std::uint64_t next_modulus = modulus * p;
        ++k;

        std::vector<detail::LiftedRoot> next;
        for (const auto& root : current) {
            if (root.simple) {
                // r' = r - f(r) * f'(r)^-1 (mod p^k)
                std::uint64_t fr = eval_mod_u64(f, root.r, next_modulus);
                std::uint64_t fpr = eval_mod_u64(fprime, root.r, next_modulus);
                mpz_class inv;
                const mpz_class fpr_z = mpz_from_u64(fpr), mod_z = mpz_from_u64(next_modulus);
                if (!mpz_invert(inv.get_mpz_t(), fpr_z.get_mpz_t(), mod_z.get_mpz_t()))
                    throw std::logic_error("Hensel step: derivative not invertible at a simple root");
                std::uint64_t inv_u = mpz_fdiv_ui(inv.get_mpz_t(), static_cast<unsigned long>(next_modulus));
                std::uint64_t delta = detail::mulmod_u64(fr, inv_u, next_modulus);
                std::uint64_t lifted = (root.r + next_modulus - delta) % next_modulus;
                if (eval_mod_u64(f, lifted, next_modulus) != 0)
                    throw std::logic_error("Hensel step produced a non-root");
                next.push_back({lifted, true});
            } else {
                for (std::uint64_t t = 0; t < p; ++t) {
                    std::uint64_t candidate = root.r + t * modulus;
                    if (eval_mod_u64(f, candidate, next_modulus) == 0) next.push_back({candidate, false});
                }
            }
        }
        if (next.empty()) return table;
        check_nagell(next.size(), k);

        RootLevel level;
        level.k = k;
        level.modulus = next_modulus;
        for (const auto& root : next) level.roots.push_back(root.r);
        std::sort(level.roots.begin(), level.roots.end());
        table.levels.push_back(std::move(level));
        current = std::move(next);
        modulus = next_modulus;
    }

    if (k >= k_max) return table;

    // Sparse continuation: enumerate the integers in [1, n_limit] over
    // each dense root's progression and read off exact valuations.
    if ((n_limit / modulus + 1) * current.size() > 20'000'000)
        throw std::domain_error("root lifting for p=" + std::to_string(p) +
                                " beyond the dense range needs an unreasonable enumeration; lower n_limit");
    std::vector<std::pair<std::uint64_t, std::uint32_t>> points; // (n, v_p(f(n)))
    for (const auto& root : current) {
        std::uint64_t c = root.r == 0 ? modulus : root.r;
        for (; c <= n_limit; c += modulus) {
            std::uint32_t v = detail::valuation_at(f, c, p, k_max);
            if (v > k) points.emplace_back(c, v);
            if (c > n_limit - modulus) break; // next step would overflow
        }
    }

    for (std::uint32_t level_k = k + 1; level_k <= k_max; ++level_k) {
        RootLevel level;
        level.k = level_k;
        level.modulus = 0;
        for (const auto& [n, v] : points)
            if (v >= level_k) level.roots.push_back(n);
        if (level.roots.empty()) break;
        std::sort(level.roots.begin(), level.roots.end());
        check_nagell(level.roots.size(), level_k);
        table.levels.push_back(std::move(level));
    }
    return table;
}

// Memoizing holder for one polynomial's root tables, shared read-only by
// sieve workers after construction.
class RootTableSet {
  public:
    RootTableSet(IntPolynomial f, std::uint64_t seed = 0)
        : f_(std::move(f)), disc_(f_.degree() >= 1 ? discriminant(f_) : mpz_class(0)), seed_(seed) {}

    const IntPolynomial& poly() const { return f_; }
    const mpz_class& disc() const { return disc_; }
    std::uint64_t seed() const { return seed_; }

    // Tables are cached per (p, n_limit) and only ever deepened, never
    // replaced with shallower ones: callers hold long-lived pointers.
    const RootTable& table(std::uint64_t p, std::uint32_t k_max, std::uint64_t n_limit) {
        const auto key = std::make_pair(p, n_limit);
        auto it = tables_.find(key);
        if (it != tables_.end() && it->second.covered_k >= k_max) return it->second.table;
        RootTable t = lift_roots(f_, p, k_max, n_limit, seed_, &disc_);
        auto& entry = tables_[key];
        entry.table = std::move(t);
        entry.covered_k = std::max(entry.covered_k, k_max);
        return entry.table;
    }

    // Number of roots of f modulo p^k. Exact for every k: within the
    // dense range by table lookup, beyond it by Hensel invariance for
    // non-singular primes. Singular primes past the dense range would
    // need unpruned big-integer lifting, which nothing at this scale
    // reaches, so that case is rejected.
    std::uint64_t rho(std::uint64_t p, std::uint32_t k) {
        if (k < 1) throw std::domain_error("rho requires k >= 1");
        bool fits_dense = true;
        std::uint64_t m = 1;
        for (std::uint32_t i = 0; i < k; ++i) {
            if (m > kDenseModulusCap / p) {
                fits_dense = false;
                break;
            }
            m *= p;
        }
        if (fits_dense) {
            const RootTable& t = table(p, k, UINT64_MAX / 2);
            return t.root_count(k);
        }
        const RootTable& t = table(p, 1, UINT64_MAX / 2);
        if (!t.singular) return t.root_count(1); // Hensel: rho(p^k) = rho(p)
        throw std::domain_error("rho: modulus exceeds the dense range for singular prime " + std::to_string(p));
    }

    struct Entry {
        RootTable table;
        std::uint32_t covered_k = 0;
    };

    using Cache = std::map<std::pair<std::uint64_t, std::uint64_t>, Entry>;

    const Cache& entries() const { return tables_; }

    // Install a table built elsewhere (e.g. read back from a cache file).
    void adopt(RootTable table, std::uint32_t covered_k) {
        const auto key = std::make_pair(table.p, table.n_limit);
        auto it = tables_.find(key);
        if (it != tables_.end() && it->second.covered_k >= covered_k) return;
        tables_[key] = Entry{std::move(table), covered_k};
    }

  private:
    IntPolynomial f_;
    mpz_class disc_;
    std::uint64_t seed_;
    Cache tables_;
};

} // namespace polylcm
