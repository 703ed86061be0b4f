#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <numeric>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "polylcm/numeric.hpp"
#include "polylcm/primes.hpp"
#include "polylcm/roots.hpp"
#include "polylcm/sieve.hpp"

namespace polylcm {

// Thresholds for the pass/fail checks. The bounds in the source results
// are asymptotic; the epsilons make the finite-N slack explicit, and the
// minimum sizes keep checks soft below the scale where they are meaningful.
struct CheckThresholds {
    double density_eps = 0.05;
    std::uint64_t density_min_n = 10'000;
    double chebotarev_max_abs = 5.0;
    double chebotarev_max_drift = 1.0;
    double exceptional_eps = 0.05;
    std::uint64_t exceptional_min_n = 10'000;
    double granville_min_fraction = 0.02;
    std::uint64_t granville_min_n = 10'000;
    double cilleruelo_band_lo = 0.7;
    double cilleruelo_band_hi = 1.05;
    std::uint64_t cilleruelo_min_n = 10'000;
    double psi_ratio_lo = 0.98;
    double psi_ratio_hi = 1.02;
    std::uint64_t psi_min_n = 1'000;
    double alpha_residual_constant = 4.0;
    double oracle_rel_tol = 1e-9;
    double logq_ratio_lo = 0.8;
    double logq_ratio_hi = 1.0;
};

// First n strictly above N/log N; the window (N/log N, N] is where the
// exceptional set and the set N of large-P+ points live.
inline std::uint64_t window_lo(std::uint64_t N) {
    if (N < 3) return N + 1; // empty window
    const double n_minus = static_cast<double>(N) / std::log(static_cast<double>(N));
    return static_cast<std::uint64_t>(std::floor(n_minus)) + 1;
}

// ---------------------------------------------------------------------------
// psi baseline: log lcm(1..N) two ways

struct PsiBaseline {
    std::uint64_t N = 0;
    double log_lcm = 0;   // sum over p of floor(log_p N) log p, integer powers
    double psi = 0;       // sum of von Mangoldt Lambda(n), n <= N
    double ratio_to_N = 0;
};

inline PsiBaseline psi_baseline(std::uint64_t N) {
    if (N < 2) throw std::invalid_argument("psi baseline requires N >= 2");
    PsiBaseline out;
    out.N = N;
    for (std::uint32_t p : primes_up_to(N)) {
        std::uint64_t pk = p, k = 1;
        while (pk <= N / p) {
            pk *= p;
            ++k;
        }
        out.log_lcm += static_cast<double>(k) * std::log(static_cast<double>(p));
    }
    const auto spf = smallest_prime_factor_table(N);
    for (std::uint64_t n = 2; n <= N; ++n) {
        const std::uint32_t q = spf[n];
        std::uint64_t m = n;
        while (m % q == 0) m /= q;
        if (m == 1) out.psi += std::log(static_cast<double>(q)); // n is a prime power
    }
    out.ratio_to_N = out.psi / static_cast<double>(N);
    return out;
}

// ---------------------------------------------------------------------------
// Cilleruelo ratio series

struct RatioPoint {
    std::uint64_t n = 0;
    double log_lcm = 0;
    double ratio = 0; // log L / ((d-1) n log n); for d = 1, log L / n
};

inline std::vector<RatioPoint> cilleruelo_ratio(int degree, std::span<const LcmCheckpoint> series) {
    std::vector<RatioPoint> out;
    for (const auto& cp : series) {
        RatioPoint pt;
        pt.n = cp.n;
        pt.log_lcm = cp.log_lcm;
        if (cp.n >= 2) {
            const double denom = degree >= 2
                                     ? (degree - 1) * static_cast<double>(cp.n) * std::log(static_cast<double>(cp.n))
                                     : static_cast<double>(cp.n);
            pt.ratio = cp.log_lcm / denom;
        }
        out.push_back(pt);
    }
    return out;
}

// ---------------------------------------------------------------------------
// densities over [1, N] and over the window

struct DensityResult {
    std::uint64_t count_true = 0;
    std::uint64_t total = 0;
    Fraction fraction() const { return {count_true, std::max<std::uint64_t>(total, 1)}; }
};

// Fraction of n in [1, N] with P+(f(n)) > n. Exact; demands B = N, since
// below that the cofactor cannot certify the decision.
inline DensityResult density_p_plus(std::span<const FactoredValue> records, std::uint64_t N, std::uint64_t B) {
    if (B < N) throw std::invalid_argument("P+ > n decisions need B >= N");
    DensityResult out;
    for (const auto& rec : records) {
        if (rec.n > N) continue;
        ++out.total;
        if (p_plus_info(rec, B).greater_than_n) ++out.count_true;
    }
    return out;
}

inline DensityResult window_density_p_plus(std::span<const FactoredValue> records, std::uint64_t N, std::uint64_t B) {
    if (B < N) throw std::invalid_argument("P+ > n decisions need B >= N");
    DensityResult out;
    const std::uint64_t lo = window_lo(N);
    for (const auto& rec : records) {
        if (rec.n < lo || rec.n > N) continue;
        ++out.total;
        if (p_plus_info(rec, B).greater_than_n) ++out.count_true;
    }
    return out;
}

// ---------------------------------------------------------------------------
// multiplicity of largest prime factors over the set N (at most d per prime)

struct MultiplicityResult {
    std::uint64_t set_size = 0;         // #N
    std::uint64_t bucket_count = 0;     // #P: distinct largest primes
    std::uint64_t max_multiplicity = 0; // max bucket size (exact unless merged)
    bool exact = true;                  // false if unresolved cofactors had to be merged
    std::uint64_t partition_total = 0;  // sum of bucket sizes; equals set_size
    double sum_log_p = 0;               // sum over buckets of log P+ (lower bounds where inexact)
    bool gate_ok = false;               // N/log N > max(|disc f|, height f, d^2)
};

namespace detail {

// gcd-free basis of a set of integers > 1: pairwise coprime numbers that
// multiplicatively generate every input.
inline std::vector<mpz_class> coprime_basis(std::vector<mpz_class> values) {
    std::vector<mpz_class> basis;
    for (auto& v : values) {
        std::vector<mpz_class> queue{v};
        while (!queue.empty()) {
            mpz_class cur = queue.back();
            queue.pop_back();
            if (cur == 1) continue;
            bool split = false;
            for (std::size_t i = 0; i < basis.size(); ++i) {
                mpz_class g;
                mpz_gcd(g.get_mpz_t(), cur.get_mpz_t(), basis[i].get_mpz_t());
                if (g == 1) continue;
                if (g == basis[i]) {
                    mpz_divexact(cur.get_mpz_t(), cur.get_mpz_t(), g.get_mpz_t());
                    queue.push_back(cur);
                    split = true;
                    break;
                }
                // split basis[i] into g and basis[i]/g, requeue the rest of cur
                mpz_class rest = basis[i] / g;
                basis[i] = g;
                basis.push_back(rest);
                mpz_divexact(cur.get_mpz_t(), cur.get_mpz_t(), g.get_mpz_t());
                queue.push_back(cur);
                split = true;
                break;
            }
            if (!split && cur > 1) basis.push_back(cur);
        }
    }
    return basis;
}

struct UnionFind {
    std::vector<std::size_t> parent;
    explicit UnionFind(std::size_t n) : parent(n) { std::iota(parent.begin(), parent.end(), 0); }
    std::size_t find(std::size_t x) {
        while (parent[x] != x) x = parent[x] = parent[parent[x]];
        return x;
    }
    bool unite(std::size_t a, std::size_t b) {
        a = find(a);
        b = find(b);
        if (a == b) return false;
        parent[a] = b;
        return true;
    }
};

} // namespace detail

// Upper-bounds (and in practice pins exactly) the largest multiplicity of
// any prime as P+(f(m)) over m in N = {window : P+(f(m)) > m}. Records
// whose P+ is exact bucket by its value. Composite cofactors are reduced
// over a gcd-free basis: after reduction, two unresolved cofactors that
// are coprime provably have distinct largest primes, so they cannot share
// a bucket; anything still ambiguous is merged conservatively.
inline MultiplicityResult multiplicity_check(const IntPolynomial& f, std::span<const FactoredValue> records,
                                             std::uint64_t N, std::uint64_t B) {
    if (B < N) throw std::invalid_argument("multiplicity grouping needs B >= N");
    MultiplicityResult out;

    const double n_minus = static_cast<double>(N) / std::log(std::max(2.0, static_cast<double>(N)));
    const mpz_class abs_disc = abs(discriminant(f));
    const double gate = std::max({abs_disc.get_d(), f.height().get_d(),
                                  static_cast<double>(f.degree()) * f.degree()});
    out.gate_ok = n_minus > gate;

    struct Member {
        const FactoredValue* rec;
        PPlusInfo info;
    };
    std::vector<Member> members;
    const std::uint64_t lo = window_lo(N);
    for (const auto& rec : records) {
        if (rec.n < lo || rec.n > N) continue;
        PPlusInfo info = p_plus_info(rec, B);
        if (!info.greater_than_n) continue;
        members.push_back({&rec, std::move(info)});
    }
    out.set_size = members.size();
    if (members.empty()) return out;

    // Exact records bucket by P+ value; composite cofactors go through the
    // basis reduction below.
    std::map<mpz_class, std::vector<std::size_t>> exact_buckets;
    std::vector<std::size_t> unresolved;
    std::vector<mpz_class> basis_inputs;
    for (std::size_t i = 0; i < members.size(); ++i) {
        if (members[i].info.exact) {
            exact_buckets[members[i].info.value].push_back(i);
            if (members[i].rec->cofactor > 1) basis_inputs.push_back(members[i].rec->cofactor);
        } else {
            unresolved.push_back(i);
            basis_inputs.push_back(members[i].rec->cofactor);
        }
    }

    detail::UnionFind uf(members.size());
    bool any_merge_of_unresolved = false;

    if (!unresolved.empty()) {
        auto basis = detail::coprime_basis(std::move(basis_inputs));
        std::vector<bool> basis_prime(basis.size());
        for (std::size_t i = 0; i < basis.size(); ++i)
            basis_prime[i] = classify_prime(basis[i]) != Primality::composite;

        // factor every unresolved cofactor over the basis
        std::map<std::size_t, std::vector<std::size_t>> element_users; // basis idx -> member idx list
        std::vector<std::optional<mpz_class>> resolved_max(members.size());
        for (std::size_t mi : unresolved) {
            mpz_class c = members[mi].rec->cofactor;
            bool all_prime = true;
            mpz_class max_prime = 0;
            for (std::size_t bi = 0; bi < basis.size() && c > 1; ++bi) {
                if (!mpz_divisible_p(c.get_mpz_t(), basis[bi].get_mpz_t())) continue;
                while (mpz_divisible_p(c.get_mpz_t(), basis[bi].get_mpz_t()))
                    mpz_divexact(c.get_mpz_t(), c.get_mpz_t(), basis[bi].get_mpz_t());
                element_users[bi].push_back(mi);
                if (basis_prime[bi]) {
                    if (basis[bi] > max_prime) max_prime = basis[bi];
                } else {
                    all_prime = false;
                }
            }
            if (all_prime && max_prime > 0 && c == 1) resolved_max[mi] = max_prime;
        }

        // fully split cofactors now have an exact P+ after all
        for (std::size_t mi : unresolved)
            if (resolved_max[mi]) {
                members[mi].info.exact = true;
                members[mi].info.value = *resolved_max[mi];
                exact_buckets[members[mi].info.value].push_back(mi);
            }

        // remaining ambiguity: connect records sharing any basis element
        // with a record that still carries a composite part
        for (auto& [bi, users] : element_users) {
            bool any_ambiguous = false;
            for (std::size_t mi : users)
                if (!members[mi].info.exact) any_ambiguous = true;
            if (!any_ambiguous) continue;
            for (std::size_t j = 1; j < users.size(); ++j)
                if (uf.unite(users[0], users[j])) any_merge_of_unresolved = true;
            // an exact bucket keyed by a prime basis element shared with an
            // ambiguous record merges with it too
            if (basis_prime[bi]) {
                auto it = exact_buckets.find(basis[bi]);
                if (it != exact_buckets.end() && !it->second.empty() && !users.empty())
                    if (uf.unite(it->second.front(), users.front())) any_merge_of_unresolved = true;
            }
        }
    }

    // exact buckets: members share one component
    for (auto& [value, idxs] : exact_buckets)
        for (std::size_t j = 1; j < idxs.size(); ++j) uf.unite(idxs[0], idxs[j]);

    std::map<std::size_t, std::vector<std::size_t>> components;
    for (std::size_t i = 0; i < members.size(); ++i) components[uf.find(i)].push_back(i);

    out.bucket_count = components.size();
    out.exact = !any_merge_of_unresolved;
    for (auto& [root, idxs] : components) {
        out.partition_total += idxs.size();
        out.max_multiplicity = std::max<std::uint64_t>(out.max_multiplicity, idxs.size());
        double bucket_log = 0;
        for (std::size_t mi : idxs) bucket_log = std::max(bucket_log, log_mpz(members[mi].info.value));
        out.sum_log_p += bucket_log;
    }
    return out;
}

// ---------------------------------------------------------------------------
// Chebotarev-type sum S(N) = sum_{p <= N} rho_f(p) log p/(p-1) - log N

struct ChebotarevPoint {
    std::uint64_t N = 0;
    double deviation = 0;
};

inline std::vector<ChebotarevPoint> chebotarev_sum(RootTableSet& tables, std::vector<std::uint64_t> checkpoints) {
    std::sort(checkpoints.begin(), checkpoints.end());
    checkpoints.erase(std::unique(checkpoints.begin(), checkpoints.end()), checkpoints.end());
    if (checkpoints.empty()) return {};
    std::vector<ChebotarevPoint> out;
    const auto primes = primes_up_to(checkpoints.back());
    const mpz_class content = tables.poly().content();
    double running = 0;
    std::size_t pi = 0;
    for (std::uint64_t cp : checkpoints) {
        for (; pi < primes.size() && primes[pi] <= cp; ++pi) {
            // f vanishes identically mod a content prime (rho would be p);
            // those finitely many terms only shift the O(1) constant.
            if (mpz_divisible_ui_p(content.get_mpz_t(), primes[pi])) continue;
            const std::uint64_t rho = tables.rho(primes[pi], 1);
            if (rho > 0)
                running += static_cast<double>(rho) * std::log(static_cast<double>(primes[pi])) /
                           static_cast<double>(primes[pi] - 1);
        }
        out.push_back({cp, running - std::log(static_cast<double>(cp))});
    }
    return out;
}

// ---------------------------------------------------------------------------
// exceptional set E(N) = {window : P+(f(n)) <= n} and Q(N)

struct ExceptionalReport {
    std::uint64_t count = 0;         // #E(N)
    std::uint64_t window_size = 0;
    double fraction_of_N = 0;        // #E(N) / N
    double log_q_direct = 0;         // sum over E of log |f(n)|
    double log_q_gamma = 0;          // sum over p of gamma_p log p
    double d_log_n_count = 0;        // d log N #E(N)
    double ratio = 0;                // log_q_direct / d_log_n_count
    double alpha_log_sum = 0;        // sum over p of alpha_p log p
    bool within_alpha_bound = true;  // log Q <= alpha bound
    std::map<std::uint32_t, std::uint64_t> gamma; // gamma_p(N), exactly
};

inline ExceptionalReport exceptional_set_report(const IntPolynomial& f, std::span<const FactoredValue> records,
                                                std::uint64_t N, std::uint64_t B, const ExponentMap& exponents) {
    if (B < N) throw std::invalid_argument("exceptional set needs B >= N");
    ExceptionalReport out;
    const std::uint64_t lo = window_lo(N);
    for (const auto& rec : records) {
        if (rec.n < lo || rec.n > N) continue;
        ++out.window_size;
        if (p_plus_info(rec, B).greater_than_n) continue;
        ++out.count;
        out.log_q_direct += log_mpz(f(rec.n));
        for (const auto& [p, e] : rec.small_factors) out.gamma[p] += e;
        // members of E are fully sieved: a cofactor > 1 would certify a
        // prime factor > N >= n
        if (rec.cofactor != 1) throw std::logic_error("exceptional record with nontrivial cofactor");
    }
    for (const auto& [p, g] : out.gamma) out.log_q_gamma += static_cast<double>(g) * std::log(static_cast<double>(p));
    out.fraction_of_N = static_cast<double>(out.count) / static_cast<double>(N);
    out.d_log_n_count = static_cast<double>(f.degree()) * std::log(static_cast<double>(N)) * static_cast<double>(out.count);
    out.ratio = out.count == 0 ? 0.0 : out.log_q_direct / out.d_log_n_count;
    for (std::size_t i = 0; i < exponents.primes.size(); ++i)
        if (exponents.alpha[i] > 0)
            out.alpha_log_sum += static_cast<double>(exponents.alpha[i]) * std::log(static_cast<double>(exponents.primes[i]));
    out.within_alpha_bound = out.log_q_direct <= out.alpha_log_sum;
    return out;
}

// ---------------------------------------------------------------------------
// Granville-style density: P+(f(n)) > delta n log n over the window

struct GranvilleResult {
    double delta = 0;
    std::uint64_t definite_true = 0;
    std::uint64_t definite_false = 0;
    std::uint64_t indeterminate = 0;
    std::uint64_t total = 0;
    bool delta_flagged = false; // delta >= 1/d^2: outside the proven range

    Fraction definite_fraction() const { return {definite_true, std::max<std::uint64_t>(total, 1)}; }
};

inline GranvilleResult granville_density(const IntPolynomial& f, std::span<const FactoredValue> records,
                                         std::uint64_t N, std::uint64_t B, double delta) {
    if (B < N) throw std::invalid_argument("granville density needs B >= N");
    if (delta <= 0) throw std::invalid_argument("delta must be positive");
    GranvilleResult out;
    out.delta = delta;
    const int d = f.degree();
    out.delta_flagged = delta >= 1.0 / (static_cast<double>(d) * d);
    const std::uint64_t lo = window_lo(N);
    const mpz_class b_plus_1 = mpz_from_u64(B + 1);
    for (const auto& rec : records) {
        if (rec.n < lo || rec.n > N) continue;
        ++out.total;
        const double threshold = delta * static_cast<double>(rec.n) * std::log(static_cast<double>(rec.n));
        PPlusInfo info = p_plus_info(rec, B);
        const double lower = log_mpz(info.value); // log of exact value or certified lower bound
        const double log_threshold = std::log(std::max(threshold, 1e-300));
        if (info.exact) {
            if (lower > log_threshold)
                ++out.definite_true;
            else
                ++out.definite_false;
            continue;
        }
        if (lower > log_threshold) {
            ++out.definite_true;
            continue;
        }
        // upper bound: at least two factors > B, so P+ <= cofactor/(B+1)
        mpz_class upper = rec.cofactor / b_plus_1;
        if (log_mpz(upper) <= log_threshold)
            ++out.definite_false;
        else
            ++out.indeterminate;
    }
    return out;
}

} // namespace polylcm
