#pragma once

#include <algorithm>
#include <atomic>
#include <condition_variable>
#include <cstdint>
#include <functional>
#include <map>
#include <mutex>
#include <optional>
#include <stdexcept>
#include <thread>
#include <vector>

#include "polylcm/numeric.hpp"
#include "polylcm/poly.hpp"
#include "polylcm/primality.hpp"
#include "polylcm/primes.hpp"
#include "polylcm/roots.hpp"
#include "polylcm/screen.hpp"

namespace polylcm {

enum class CofactorClass { unit, prime, probable_prime, composite_unknown };

inline const char* to_string(CofactorClass c) {
    switch (c) {
        case CofactorClass::unit: return "unit";
        case CofactorClass::prime: return "prime";
        case CofactorClass::probable_prime: return "probable_prime";
        default: return "composite_unknown";
    }
}

// Exact factorization of |f(n)| into primes <= B times a cofactor whose
// prime factors all exceed B.
struct FactoredValue {
    std::uint64_t n = 0;
    std::vector<std::pair<std::uint32_t, std::uint32_t>> small_factors; // (p, e), p ascending
    mpz_class cofactor = 1;
    CofactorClass cofactor_class = CofactorClass::unit;

    std::uint64_t largest_sieved() const { return small_factors.empty() ? 0 : small_factors.back().first; }
};

// Per-prime running aggregates over n <= (current point), plus the lcm of
// all cofactors. log L_f = sum max_exp * log p + log cofactor_lcm, exactly,
// because the cofactor lcm is coprime to every sieved prime.
struct ExponentMap {
    std::vector<std::uint32_t> primes;  // all primes <= B, ascending
    std::vector<std::uint32_t> max_exp; // index-aligned with primes
    std::vector<std::uint64_t> alpha;
    mpz_class cofactor_lcm = 1;

    double sieved_log() const {
        double s = 0;
        for (std::size_t i = 0; i < primes.size(); ++i)
            if (max_exp[i] > 0) s += static_cast<double>(max_exp[i]) * std::log(static_cast<double>(primes[i]));
        return s;
    }

    double log_lcm() const { return sieved_log() + log_mpz(cofactor_lcm); }
};

struct LcmCheckpoint {
    std::uint64_t n = 0;
    double log_lcm = 0;
    double sieved_log = 0;
    double cofactor_log = 0;
};

struct SieveConfig {
    std::uint64_t N = 0;
    std::uint64_t B = 0;                     // 0: defaults to N
    std::uint64_t segment_size = 1ull << 16;
    std::vector<std::uint64_t> checkpoints;  // ascending; N is always included
    unsigned workers = 0;                    // 0: hardware concurrency
    std::uint64_t seed = 0x5eed;
    bool oracle_mode = false;                // also fold the raw big-integer lcm (slow)
    std::uint64_t oracle_cap = 200'000;
    std::vector<std::uint64_t> prime_filter; // non-empty: restrict sieving to these primes
    bool collect_records = true;
    std::uint64_t max_segments = 0;          // non-zero: stop after this many segments
};

// State needed to continue an interrupted run from a segment boundary.
struct ResumeState {
    std::uint64_t completed_through = 0;
    ExponentMap exponents;
    std::vector<LcmCheckpoint> lcm_series;
    mpz_class oracle_lcm = 1;
};

struct SieveOutcome {
    ExponentMap exponents;
    std::vector<LcmCheckpoint> lcm_series;
    std::vector<FactoredValue> records; // only when collect_records
    std::uint64_t completed_through = 0;
    bool complete = false;
    mpz_class oracle_lcm = 1;                  // raw lcm of |f(n)| (oracle mode)
    std::optional<double> oracle_log_lcm;      // log of the above, when complete
};

// Derived largest-prime-factor view of one record. The boolean
// P+(f(n)) > n is exact whenever B = N: a nontrivial cofactor certifies a
// prime factor > N >= n. The value is exact unless the cofactor is
// composite, in which case it is a certified lower bound.
struct PPlusInfo {
    bool exact = false;
    mpz_class value;
    bool greater_than_n = false;
};

inline PPlusInfo p_plus_info(const FactoredValue& rec, std::uint64_t B) {
    PPlusInfo info;
    const std::uint64_t sieved = rec.largest_sieved();
    if (rec.cofactor == 1) {
        info.exact = true;
        info.value = sieved == 0 ? 1 : mpz_from_u64(sieved); // |f(n)| = 1 has no prime factor
    } else if (rec.cofactor_class != CofactorClass::composite_unknown) {
        info.exact = true;
        info.value = rec.cofactor;
    } else {
        // cofactor = product of j >= 2 primes, all > B, so j <= log c / log(B+1)
        // and the largest one is >= c^(1/j).
        info.exact = false;
        mpz_class bp1 = mpz_from_u64(B + 1), pw = bp1;
        unsigned j = 1;
        while (pw * bp1 <= rec.cofactor) {
            pw *= bp1;
            ++j;
        }
        mpz_class root;
        if (mpz_root(root.get_mpz_t(), rec.cofactor.get_mpz_t(), j) == 0) root += 1;
        info.value = root;
        if (info.value <= bp1) info.value = bp1;
        mpz_class sieved_z = mpz_from_u64(sieved);
        if (info.value < sieved_z) info.value = sieved_z;
    }
    info.greater_than_n = rec.cofactor != 1 || sieved > rec.n;
    return info;
}

namespace detail {

struct ActivePrime {
    std::uint32_t p = 0;
    const RootTable* table = nullptr; // null: factor by direct trial division (p | lc f)
};

struct SegmentResult {
    std::uint64_t lo = 0, hi = 0;
    std::vector<FactoredValue> records;
    mpz_class cofactor_lcm = 1;
    mpz_class oracle_lcm = 1;
};

template <typename Residual>
struct ResidualOps;

template <>
struct ResidualOps<std::uint64_t> {
    static bool divisible(std::uint64_t v, std::uint32_t p) { return v % p == 0; }
    static void divexact(std::uint64_t& v, std::uint32_t p) { v /= p; }
    static bool is_unit(std::uint64_t v) { return v == 1; }
    static mpz_class to_mpz(std::uint64_t v) { return mpz_from_u64(v); }
};

template <>
struct ResidualOps<mpz_class> {
    static bool divisible(const mpz_class& v, std::uint32_t p) { return mpz_divisible_ui_p(v.get_mpz_t(), p); }
    static void divexact(mpz_class& v, std::uint32_t p) { mpz_divexact_ui(v.get_mpz_t(), v.get_mpz_t(), p); }
    static bool is_unit(const mpz_class& v) { return v == 1; }
    static mpz_class to_mpz(const mpz_class& v) { return v; }
};

template <typename Residual>
inline void process_segment_impl(const IntPolynomial& f, const std::vector<ActivePrime>& active,
                                 bool oracle_mode, std::uint64_t seed, SegmentResult& out) {
    const std::uint64_t lo = out.lo, hi = out.hi;
    const std::size_t count = static_cast<std::size_t>(hi - lo);

    std::vector<Residual> residuals(count);
    if constexpr (std::is_same_v<Residual, std::uint64_t>) {
        std::vector<long long> coeffs(f.coeffs().size());
        for (std::size_t i = 0; i < coeffs.size(); ++i) coeffs[i] = f.coeff(i).get_si();
        for (std::size_t i = 0; i < count; ++i) {
            __int128 acc = 0;
            const std::uint64_t n = lo + i;
            for (std::size_t c = coeffs.size(); c-- > 0;) acc = acc * static_cast<__int128>(n) + coeffs[c];
            residuals[i] = static_cast<std::uint64_t>(acc < 0 ? -acc : acc);
        }
    } else {
        for (std::size_t i = 0; i < count; ++i) residuals[i] = abs(f(lo + i));
    }

    if (oracle_mode)
        for (std::size_t i = 0; i < count; ++i) {
            mpz_class v = ResidualOps<Residual>::to_mpz(residuals[i]);
            if (v > 1) mpz_lcm(out.oracle_lcm.get_mpz_t(), out.oracle_lcm.get_mpz_t(), v.get_mpz_t());
        }

    std::vector<std::vector<std::pair<std::uint32_t, std::uint32_t>>> factors(count);

    auto bump = [&](std::size_t idx, std::uint32_t p) {
        auto& list = factors[idx];
        if (!list.empty() && list.back().first == p)
            ++list.back().second;
        else
            list.emplace_back(p, 1);
    };

    for (const ActivePrime& ap : active) {
        const std::uint32_t p = ap.p;
        if (ap.table == nullptr) {
            // p divides the leading coefficient: no progression structure
            // is guaranteed, extract exponents by direct division.
            for (std::size_t i = 0; i < count; ++i)
                while (ResidualOps<Residual>::divisible(residuals[i], p)) {
                    ResidualOps<Residual>::divexact(residuals[i], p);
                    bump(i, p);
                }
            continue;
        }
        const RootTable& table = *ap.table;
        const std::uint32_t depth = table.depth();
        for (const RootLevel& level : table.levels) {
            const bool deepest = level.k == depth;
            if (level.dense()) {
                const std::uint64_t m = level.modulus;
                for (std::uint64_t r : level.roots) {
                    const std::uint64_t rem = lo % m;
                    std::uint64_t n = lo + (r >= rem ? r - rem : r + m - rem);
                    if (n < 1) n += m;
                    for (; n < hi; n += m) {
                        const std::size_t idx = static_cast<std::size_t>(n - lo);
                        ResidualOps<Residual>::divexact(residuals[idx], p);
                        bump(idx, p);
                        if (deepest)
                            while (ResidualOps<Residual>::divisible(residuals[idx], p)) {
                                ResidualOps<Residual>::divexact(residuals[idx], p);
                                bump(idx, p);
                            }
                    }
                }
            } else {
                for (std::uint64_t r : level.roots) {
                    if (r < lo || r >= hi) continue;
                    const std::size_t idx = static_cast<std::size_t>(r - lo);
                    ResidualOps<Residual>::divexact(residuals[idx], p);
                    bump(idx, p);
                    if (deepest)
                        while (ResidualOps<Residual>::divisible(residuals[idx], p)) {
                            ResidualOps<Residual>::divexact(residuals[idx], p);
                            bump(idx, p);
                        }
                }
            }
        }
    }

    out.records.resize(count);
    for (std::size_t i = 0; i < count; ++i) {
        FactoredValue& rec = out.records[i];
        rec.n = lo + i;
        rec.small_factors = std::move(factors[i]);
        rec.cofactor = ResidualOps<Residual>::to_mpz(residuals[i]);
        if (ResidualOps<Residual>::is_unit(residuals[i])) {
            rec.cofactor_class = CofactorClass::unit;
        } else {
            switch (classify_prime(rec.cofactor, seed)) {
                case Primality::prime: rec.cofactor_class = CofactorClass::prime; break;
                case Primality::probable_prime: rec.cofactor_class = CofactorClass::probable_prime; break;
                default: rec.cofactor_class = CofactorClass::composite_unknown; break;
            }
            mpz_lcm(out.cofactor_lcm.get_mpz_t(), out.cofactor_lcm.get_mpz_t(), rec.cofactor.get_mpz_t());
        }
    }
}

} // namespace detail

// Segmented factor sieve over n in [1, N]: factors every |f(n)| over the
// primes <= B by marking the progressions n = r (mod p^k) from the root
// tables, and accumulates the exponent map those factorizations define.
// Segments are processed by a worker pool and merged in order, so
// checkpoint series and record streams are deterministic.
class FactorSieve {
  public:
    // `external_tables` lets callers share a preloaded RootTableSet (e.g.
    // from a cache file); it must outlive the sieve and use the same seed.
    FactorSieve(IntPolynomial f, SieveConfig cfg, RootTableSet* external_tables = nullptr)
        : f_(std::move(f)), cfg_(std::move(cfg)), own_tables_(external_tables ? std::nullopt
                                                                              : std::optional<RootTableSet>(std::in_place, f_, cfg_.seed)),
          tables_(external_tables ? *external_tables : *own_tables_) {
        if (f_.degree() < 1) throw std::invalid_argument("sieve requires a non-constant polynomial");
        if (cfg_.N < 1) throw std::invalid_argument("N must be >= 1");
        if (cfg_.B == 0) cfg_.B = cfg_.N;
        if (cfg_.B > cfg_.N) throw std::invalid_argument("sieve bound B must not exceed N");
        if (cfg_.segment_size < 1) throw std::invalid_argument("segment size must be >= 1");
        if (cfg_.workers == 0) cfg_.workers = std::max(1u, std::thread::hardware_concurrency());
        if (cfg_.oracle_mode && cfg_.N > cfg_.oracle_cap)
            throw std::invalid_argument("oracle mode is capped at N = " + std::to_string(cfg_.oracle_cap) +
                                        " (the raw big-integer lcm is quadratic)");
        if (auto zero = find_integer_zero(f_, cfg_.N))
            throw std::domain_error("f(" + std::to_string(*zero) + ") = 0: lcm degenerates to 0 on [1, N]");

        if (!cfg_.checkpoints.empty()) {
            std::sort(cfg_.checkpoints.begin(), cfg_.checkpoints.end());
            cfg_.checkpoints.erase(std::unique(cfg_.checkpoints.begin(), cfg_.checkpoints.end()),
                                   cfg_.checkpoints.end());
            if (cfg_.checkpoints.front() < 1 || cfg_.checkpoints.back() > cfg_.N)
                throw std::invalid_argument("checkpoints must lie in [1, N]");
        }
        if (cfg_.checkpoints.empty() || cfg_.checkpoints.back() != cfg_.N) cfg_.checkpoints.push_back(cfg_.N);

        build_plan();
    }

    const SieveConfig& config() const { return cfg_; }
    const IntPolynomial& poly() const { return f_; }
    RootTableSet& tables() { return tables_; }
    const std::vector<std::uint32_t>& primes() const { return primes_; }

    // Exact alpha_p(N) for every sieved prime, computed from the root
    // tables without touching any f(n): per level, the residues r mod p^k
    // are counted in [1, N] exactly. Primes dividing the leading
    // coefficient fall back to direct valuation sums.
    std::vector<std::uint64_t> alpha_by_formula() const {
        std::vector<std::uint64_t> alpha(primes_.size(), 0);
        for (std::size_t i = 0; i < primes_.size(); ++i) {
            const detail::ActivePrime* ap = active_by_index_[i];
            if (ap == nullptr) continue; // no roots: alpha = 0
            if (ap->table == nullptr) {
                std::uint64_t total = 0;
                for (std::uint64_t n = 1; n <= cfg_.N; ++n) total += oracle_valuation(f_(n), ap->p);
                alpha[i] = total;
                continue;
            }
            std::uint64_t total = 0;
            for (const RootLevel& level : ap->table->levels) {
                if (level.dense()) {
                    const std::uint64_t m = level.modulus;
                    for (std::uint64_t r : level.roots) {
                        if (r == 0)
                            total += cfg_.N / m;
                        else if (r <= cfg_.N)
                            total += (cfg_.N - r) / m + 1;
                    }
                } else {
                    total += level.roots.size(); // already pruned to [1, N]
                }
            }
            alpha[i] = total;
        }
        return alpha;
    }

    SieveOutcome run(const std::function<void(const FactoredValue&)>& sink = {},
                     const ResumeState* resume = nullptr,
                     const std::function<void(const ResumeState&)>& on_segment_merged = {}) {
        SieveOutcome out;
        out.exponents.primes = primes_;
        out.exponents.max_exp.assign(primes_.size(), 0);
        out.exponents.alpha.assign(primes_.size(), 0);

        std::uint64_t start_n = 1;
        if (resume != nullptr) {
            if (resume->exponents.primes != primes_)
                throw std::invalid_argument("resume state does not match this configuration");
            out.exponents = resume->exponents;
            out.lcm_series = resume->lcm_series;
            out.oracle_lcm = resume->oracle_lcm;
            start_n = resume->completed_through + 1;
        }

        const auto segments = plan_segments(start_n);
        const std::uint64_t segment_budget =
            cfg_.max_segments == 0 ? segments.size() : std::min<std::uint64_t>(cfg_.max_segments, segments.size());

        std::atomic<std::size_t> next_segment{0};
        std::map<std::size_t, detail::SegmentResult> parked;
        std::mutex mtx;
        std::condition_variable cv_done, cv_space;
        std::size_t merged_count = 0;
        std::exception_ptr worker_error;

        const unsigned worker_count = static_cast<unsigned>(
            std::min<std::uint64_t>(cfg_.workers, std::max<std::uint64_t>(segment_budget, 1)));
        const std::size_t window = static_cast<std::size_t>(4) * worker_count;

        auto worker = [&]() {
            try {
                while (true) {
                    const std::size_t idx = next_segment.fetch_add(1);
                    if (idx >= segment_budget) return;
                    {
                        std::unique_lock lk(mtx);
                        cv_space.wait(lk, [&] { return idx < merged_count + window || worker_error; });
                        if (worker_error) return;
                    }
                    detail::SegmentResult res;
                    res.lo = segments[idx].first;
                    res.hi = segments[idx].second;
                    const bool fits_u64 = f_.abs_value_bound(res.hi - 1) < (mpz_class(1) << 63);
                    if (fits_u64)
                        detail::process_segment_impl<std::uint64_t>(f_, active_, cfg_.oracle_mode, cfg_.seed, res);
                    else
                        detail::process_segment_impl<mpz_class>(f_, active_, cfg_.oracle_mode, cfg_.seed, res);
                    {
                        std::lock_guard lk(mtx);
                        parked.emplace(idx, std::move(res));
                    }
                    cv_done.notify_all();
                }
            } catch (...) {
                {
                    std::lock_guard lk(mtx);
                    if (!worker_error) worker_error = std::current_exception();
                }
                cv_done.notify_all();
                cv_space.notify_all();
            }
        };

        std::vector<std::thread> pool;
        for (unsigned i = 0; i < worker_count; ++i) pool.emplace_back(worker);

        std::uint64_t completed = start_n - 1;
        auto checkpoint_it = std::lower_bound(cfg_.checkpoints.begin(), cfg_.checkpoints.end(), start_n);
        for (std::size_t idx = 0; idx < segment_budget; ++idx) {
            detail::SegmentResult res;
            {
                std::unique_lock lk(mtx);
                cv_done.wait(lk, [&] { return parked.count(idx) != 0 || worker_error; });
                if (worker_error) break;
                res = std::move(parked.at(idx));
                parked.erase(idx);
                ++merged_count;
            }
            cv_space.notify_all();

            for (const FactoredValue& rec : res.records) {
                for (const auto& [p, e] : rec.small_factors) {
                    const std::size_t pi = prime_index_[p];
                    out.exponents.alpha[pi] += e;
                    if (e > out.exponents.max_exp[pi]) out.exponents.max_exp[pi] = e;
                }
                if (sink) sink(rec);
            }
            if (res.cofactor_lcm > 1)
                mpz_lcm(out.exponents.cofactor_lcm.get_mpz_t(), out.exponents.cofactor_lcm.get_mpz_t(),
                        res.cofactor_lcm.get_mpz_t());
            if (cfg_.oracle_mode && res.oracle_lcm > 1)
                mpz_lcm(out.oracle_lcm.get_mpz_t(), out.oracle_lcm.get_mpz_t(), res.oracle_lcm.get_mpz_t());

            if (cfg_.collect_records) {
                out.records.insert(out.records.end(), std::make_move_iterator(res.records.begin()),
                                   std::make_move_iterator(res.records.end()));
            }

            completed = res.hi - 1;
            while (checkpoint_it != cfg_.checkpoints.end() && *checkpoint_it == completed) {
                LcmCheckpoint cp;
                cp.n = completed;
                cp.sieved_log = out.exponents.sieved_log();
                cp.cofactor_log = log_mpz(out.exponents.cofactor_lcm);
                cp.log_lcm = cp.sieved_log + cp.cofactor_log;
                out.lcm_series.push_back(cp);
                ++checkpoint_it;
            }

            if (on_segment_merged) {
                ResumeState state;
                state.completed_through = completed;
                state.exponents = out.exponents;
                state.lcm_series = out.lcm_series;
                state.oracle_lcm = out.oracle_lcm;
                on_segment_merged(state);
            }
        }

        for (auto& t : pool) t.join();
        if (worker_error) std::rethrow_exception(worker_error);

        out.completed_through = completed;
        out.complete = completed == cfg_.N;
        if (out.complete && cfg_.oracle_mode) out.oracle_log_lcm = log_mpz(out.oracle_lcm);
        return out;
    }

  private:
    IntPolynomial f_;
    SieveConfig cfg_;
    std::optional<RootTableSet> own_tables_;
    RootTableSet& tables_;
    std::vector<std::uint32_t> primes_;
    std::vector<std::uint32_t> prime_index_; // prime value -> index in primes_
    std::vector<detail::ActivePrime> active_;
    std::vector<const detail::ActivePrime*> active_by_index_;

    static std::uint64_t oracle_valuation(const mpz_class& v, std::uint64_t p) {
        mpz_class scratch;
        mpz_class pz(static_cast<unsigned long>(p));
        mpz_class av = abs(v);
        return mpz_remove(scratch.get_mpz_t(), av.get_mpz_t(), pz.get_mpz_t());
    }

    void build_plan() {
        primes_ = primes_up_to(cfg_.B);
        prime_index_.assign(cfg_.B + 1, 0);
        for (std::size_t i = 0; i < primes_.size(); ++i) prime_index_[primes_[i]] = static_cast<std::uint32_t>(i);

        const mpz_class bound = f_.abs_value_bound(cfg_.N);
        std::vector<bool> wanted;
        if (!cfg_.prime_filter.empty()) {
            wanted.assign(cfg_.B + 1, false);
            for (std::uint64_t p : cfg_.prime_filter)
                if (p <= cfg_.B) wanted[p] = true;
        }

        active_.reserve(primes_.size());
        for (std::uint32_t p : primes_) {
            if (!wanted.empty() && !wanted[p]) continue;
            detail::ActivePrime ap;
            ap.p = p;
            if (mpz_divisible_ui_p(f_.leading().get_mpz_t(), p)) {
                ap.table = nullptr; // trial-division prime
                active_.push_back(ap);
                continue;
            }
            // depth: smallest k with p^k > bound, plus one safety level
            std::uint32_t k_max = 1;
            mpz_class pk(static_cast<unsigned long>(p));
            while (pk <= bound) {
                pk *= static_cast<unsigned long>(p);
                ++k_max;
            }
            const RootTable& table = tables_.table(p, k_max + 1, cfg_.N);
            if (table.depth() == 0) continue; // no roots: p never divides f(n)
            ap.table = &table;
            active_.push_back(ap);
        }

        active_by_index_.assign(primes_.size(), nullptr);
        for (const auto& ap : active_) active_by_index_[prime_index_[ap.p]] = &ap;
    }

    // Segment boundaries depend only on (N, segment_size, checkpoints), so
    // a resumed run sees exactly the boundaries the original would have.
    std::vector<std::pair<std::uint64_t, std::uint64_t>> plan_segments(std::uint64_t start_n) const {
        std::vector<std::uint64_t> cuts; // exclusive segment ends
        for (std::uint64_t base = 1 + cfg_.segment_size; base <= cfg_.N; base += cfg_.segment_size)
            cuts.push_back(base);
        for (std::uint64_t c : cfg_.checkpoints) cuts.push_back(c + 1);
        cuts.push_back(cfg_.N + 1);
        std::sort(cuts.begin(), cuts.end());
        cuts.erase(std::unique(cuts.begin(), cuts.end()), cuts.end());

        std::vector<std::pair<std::uint64_t, std::uint64_t>> segments;
        std::uint64_t lo = start_n;
        for (std::uint64_t hi : cuts) {
            if (hi <= lo) continue;
            segments.emplace_back(lo, hi);
            lo = hi;
        }
        return segments;
    }
};

} // namespace polylcm
