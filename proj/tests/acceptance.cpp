// Acceptance suite: one line per criterion, nonzero exit on any failure.
// Criterion 11 exercises the CLI binary end to end; pass its path as argv[1].

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "polylcm/report_io.hpp"
#include "polylcm/verify.hpp"

#include "oracles.hpp"

using namespace polylcm;
namespace fs = std::filesystem;

namespace {

int g_failures = 0;

void report(int criterion, bool pass, const std::string& detail) {
    std::printf("criterion %2d: %s  %s\n", criterion, pass ? "PASS" : "FAIL", detail.c_str());
    if (!pass) ++g_failures;
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

SieveOutcome run(const IntPolynomial& f, std::uint64_t N, bool oracle = false,
                 std::vector<std::uint64_t> checkpoints = {}, FactorSieve** sieve_out = nullptr) {
    SieveConfig cfg;
    cfg.N = N;
    cfg.oracle_mode = oracle;
    cfg.checkpoints = std::move(checkpoints);
    static std::vector<std::unique_ptr<FactorSieve>> keep;
    keep.push_back(std::make_unique<FactorSieve>(f, cfg));
    if (sieve_out) *sieve_out = keep.back().get();
    return keep.back()->run();
}

// 1. Sieve factorizations match trial division for n <= 2000, and the
//    exponent-map log L matches the slow big-integer lcm to 1e-9.
void criterion_1() {
    const auto t0 = std::chrono::steady_clock::now();
    struct Pin {
        const char* poly;
        double log_lcm_2000; // frozen from the slow-oracle run
    };
    const Pin pins[] = {{"x^2+1", 14995.773679005219},
                        {"x^3-x+7", 28078.634643424608},
                        {"x^4+x+1", 41670.631860079375}};
    bool ok = true;
    std::string detail;
    const auto primes = primes_up_to(2000);
    for (const Pin& pin : pins) {
        auto f = IntPolynomial::parse(pin.poly);
        auto outcome = run(f, 2000, /*oracle=*/true);
        for (const auto& rec : outcome.records) {
            auto want = oracle::trial_factor(f(rec.n), primes);
            bool match = rec.cofactor == want.cofactor && rec.small_factors.size() == want.factors.size();
            if (match)
                for (const auto& [p, e] : rec.small_factors)
                    if (!want.factors.count(p) || want.factors.at(p) != e) match = false;
            if (!match) {
                ok = false;
                detail = std::string(pin.poly) + " factorization mismatch at n = " + std::to_string(rec.n);
                break;
            }
        }
        const double exp_map = outcome.exponents.log_lcm();
        const double oracle_log = *outcome.oracle_log_lcm;
        const double rel = std::fabs(exp_map - oracle_log) / std::fabs(oracle_log);
        if (rel > 1e-9) {
            ok = false;
            detail = std::string(pin.poly) + " log L mismatch: rel err " + std::to_string(rel);
        }
        if (std::fabs(exp_map - pin.log_lcm_2000) / pin.log_lcm_2000 > 1e-9) {
            ok = false;
            detail = std::string(pin.poly) + " log L(2000) drifted from frozen value";
        }
    }
    const double secs = seconds_since(t0);
    if (secs >= 60) {
        ok = false;
        detail += " (too slow)";
    }
    std::ostringstream d;
    d << "exactness vs trial division + slow-lcm oracle, three polynomials, n <= 2000 (" << std::fixed
      << std::setprecision(1) << secs << "s)";
    report(1, ok, ok ? d.str() : detail);
}

// 2. Hand-pinned values: L(5) = 2210, alpha_5(10) = 5, rho(5) = rho(25) = 2.
void criterion_2() {
    auto f = IntPolynomial::parse("x^2+1");
    bool ok = true;
    std::string detail = "L(5) = 2210, alpha_5(10) = 5, rho(25) = rho(5) = 2";

    auto outcome5 = run(f, 5, /*oracle=*/true);
    if (outcome5.oracle_lcm != 2210) {
        ok = false;
        detail = "lcm(f(1..5)) != 2210";
    }

    FactorSieve* sieve = nullptr;
    auto outcome10 = run(f, 10, false, {}, &sieve);
    const auto& primes = sieve->primes();
    std::uint64_t alpha5 = 0;
    for (std::size_t i = 0; i < primes.size(); ++i)
        if (primes[i] == 5) alpha5 = outcome10.exponents.alpha[i];
    if (alpha5 != 5) {
        ok = false;
        detail = "alpha_5(10) = " + std::to_string(alpha5);
    }

    RootTableSet tables(f);
    if (tables.rho(5, 1) != 2 || tables.rho(5, 2) != 2) {
        ok = false;
        detail = "rho(5)/rho(25) wrong";
    }
    report(2, ok, detail);
}

// 3. alpha main-term residuals at N = 1e4 for x^2+1, every p <= N.
void criterion_3() {
    const auto t0 = std::chrono::steady_clock::now();
    auto f = IntPolynomial::parse("x^2+1");
    const std::uint64_t N = 10'000;
    const int d = f.degree();
    const mpz_class disc = discriminant(f);
    const double disc_d = 4.0; // |disc(x^2+1)|

    FactorSieve* sieve = nullptr;
    auto outcome = run(f, N, false, {}, &sieve);
    bool ok = true;
    std::string detail;
    double worst = 0;
    for (std::size_t i = 0; i < sieve->primes().size(); ++i) {
        const std::uint32_t p = sieve->primes()[i];
        const double alpha = static_cast<double>(outcome.exponents.alpha[i]);
        if (mpz_divisible_ui_p(disc.get_mpz_t(), p)) {
            const double cap = 2.0 * d * disc_d * disc_d * static_cast<double>(N) / p;
            if (alpha > cap) {
                ok = false;
                detail = "singular bound fails at p = " + std::to_string(p);
            }
        } else {
            const double rho = static_cast<double>(sieve->tables().rho(p, 1));
            const double main_term = static_cast<double>(N) * rho / (p - 1);
            const double bound = 4.0 * d * std::log(static_cast<double>(N)) / std::log(static_cast<double>(p));
            const double resid = std::fabs(alpha - main_term);
            worst = std::max(worst, resid / bound);
            if (resid > bound) {
                ok = false;
                detail = "regular bound fails at p = " + std::to_string(p);
            }
        }
    }
    const double secs = seconds_since(t0);
    if (secs >= 300) {
        ok = false;
        detail += " (too slow)";
    }
    std::ostringstream d2;
    d2 << "alpha residuals within 4 d log N / log p for all p <= 1e4 (worst " << std::setprecision(3) << worst
       << " of bound, " << std::fixed << std::setprecision(1) << secs << "s)";
    report(3, ok, ok ? d2.str() : detail);
}

// 4. The largest multiplicity of any prime as P+ over the set N is <= d.
void criterion_4() {
    bool ok = true;
    std::string parts;
    const struct {
        const char* poly;
        std::uint64_t expect; // regression values pinned from the first oracle run
    } cases[] = {{"x^2+1", 2}, {"x^3-x+7", 3}};
    for (const auto& c : cases) {
        auto f = IntPolynomial::parse(c.poly);
        auto outcome = run(f, 10'000);
        auto rep = multiplicity_check(f, outcome.records, 10'000, 10'000);
        if (rep.max_multiplicity > static_cast<std::uint64_t>(f.degree())) ok = false;
        if (rep.max_multiplicity != c.expect) ok = false;
        if (rep.partition_total != rep.set_size) ok = false;
        parts += std::string(c.poly) + ": max " + std::to_string(rep.max_multiplicity) + " <= d" +
                 (rep.exact ? " (exact)" : " (conservative)") + "  ";
    }
    report(4, ok, parts);
}

// 5. Density of P+(f(n)) > n at N = 1e4 stays above 1 - 1/d - 0.05, with the
//    exact fractions frozen as regression values.
void criterion_5() {
    bool ok = true;
    std::string parts;
    const struct {
        const char* poly;
        std::uint64_t num; // frozen exact counts out of 1e4
    } cases[] = {{"x^2+1", 7915}, {"x^3-x+7", 9723}};
    for (const auto& c : cases) {
        auto f = IntPolynomial::parse(c.poly);
        auto outcome = run(f, 10'000);
        auto dens = density_p_plus(outcome.records, 10'000, 10'000);
        const double floor_bound = 1.0 - 1.0 / f.degree() - 0.05;
        if (dens.fraction().value() < floor_bound) ok = false;
        if (dens.count_true != c.num) ok = false;
        parts += std::string(c.poly) + ": " + dens.fraction().str() + " >= " + std::to_string(floor_bound).substr(0, 5) + "  ";
    }
    report(5, ok, parts);
}

// 6. Chebotarev sum bounded over N in {1e3, 1e4, 1e5} with no drift.
void criterion_6() {
    const auto t0 = std::chrono::steady_clock::now();
    auto f = IntPolynomial::parse("x^2+1");
    RootTableSet tables(f);
    auto series = chebotarev_sum(tables, {1000, 10'000, 100'000});
    double max_abs = 0;
    for (const auto& pt : series) max_abs = std::max(max_abs, std::fabs(pt.deviation));
    const double drift = std::fabs(series[2].deviation - series[1].deviation);
    const double secs = seconds_since(t0);
    bool ok = max_abs <= 5.0 && drift <= 1.0 && secs < 120;
    std::ostringstream d;
    d << "max |S| = " << std::setprecision(4) << max_abs << " <= 5, drift " << drift << " <= 1 (" << std::fixed
      << std::setprecision(1) << secs << "s)";
    report(6, ok, d.str());
}

// 7. Cilleruelo d = 2: ratio in [0.7, 1.05] at 1e5 and closer to 1 than at
//    1e3. The d = 3 ratio is reported without assertion.
void criterion_7() {
    auto f = IntPolynomial::parse("x^2+1");
    auto outcome = run(f, 100'000, false, {1000, 10'000, 100'000});
    auto ratios = cilleruelo_ratio(2, outcome.lcm_series);
    const double r_first = ratios.front().ratio, r_last = ratios.back().ratio;
    bool ok = r_last >= 0.7 && r_last <= 1.05 && std::fabs(1 - r_last) <= std::fabs(1 - r_first);

    auto cubic = IntPolynomial::parse("x^3-x+7");
    auto outcome3 = run(cubic, 10'000);
    auto r3 = cilleruelo_ratio(3, outcome3.lcm_series);
    std::ostringstream d;
    d << "ratio(1e5) = " << std::setprecision(6) << r_last << " in [0.7, 1.05], |1-r| " << std::fabs(1 - r_last)
      << " <= " << std::fabs(1 - r_first) << "; d=3 ratio " << r3.back().ratio << " reported (no assertion)";
    report(7, ok, d.str());
}

// 8. Granville density: definite-true fraction of P+ > (1/8) n log n over the
//    window at N = 1e4 exceeds 0.02.
void criterion_8() {
    auto f = IntPolynomial::parse("x^2+1");
    auto outcome = run(f, 10'000);
    auto g = granville_density(f, outcome.records, 10'000, 10'000, 0.125);
    const double frac = g.definite_fraction().value();
    bool ok = frac > 0.02;
    if (g.definite_true != 6971) ok = false; // frozen from the first oracle run
    std::ostringstream d;
    d << "definite fraction " << g.definite_fraction().str() << " = " << std::setprecision(4) << frac << " > 0.02";
    report(8, ok, d.str());
}

// 9. Exceptional set: #E(N)/N <= 1/d + 0.05 and log Q <= sum alpha_p log p.
void criterion_9() {
    bool ok = true;
    std::string parts;
    const struct {
        const char* poly;
        std::uint64_t expect_count; // frozen
    } cases[] = {{"x^2+1", 1893}, {"x^3-x+7", 251}};
    for (const auto& c : cases) {
        auto f = IntPolynomial::parse(c.poly);
        auto outcome = run(f, 10'000);
        auto rep = exceptional_set_report(f, outcome.records, 10'000, 10'000, outcome.exponents);
        if (rep.fraction_of_N > 1.0 / f.degree() + 0.05) ok = false;
        if (!rep.within_alpha_bound) ok = false;
        if (rep.count != c.expect_count) ok = false;
        parts += std::string(c.poly) + ": #E = " + std::to_string(rep.count) + ", logQ " +
                 std::to_string(rep.log_q_direct).substr(0, 7) + " <= " + std::to_string(rep.alpha_log_sum).substr(0, 7) + "  ";
    }
    report(9, ok, parts);
}

// 10. psi baseline at N = 1e5: the two log lcm(1..N) routes agree and
//     psi(N)/N is within [0.98, 1.02].
void criterion_10() {
    auto b = psi_baseline(100'000);
    const double rel = std::fabs(b.log_lcm - b.psi) / b.log_lcm;
    bool ok = rel <= 1e-9 && b.ratio_to_N >= 0.98 && b.ratio_to_N <= 1.02;
    std::ostringstream d;
    d << "route agreement rel err " << std::setprecision(3) << rel << ", psi/N = " << std::setprecision(6)
      << b.ratio_to_N;
    report(10, ok, d.str());
}

// 11. Determinism/resume through the CLI: an interrupted-and-resumed verify
//     produces a summary identical to an uninterrupted one (runtime aside).
void criterion_11(const char* cli_path) {
    if (cli_path == nullptr) {
        report(11, false, "CLI binary path not supplied");
        return;
    }
    const fs::path dir = fs::temp_directory_path() / "polylcm_acceptance";
    fs::remove_all(dir);
    fs::create_directories(dir);
    const std::string base = std::string(cli_path) + " verify --poly x^2+1 --N 10000 --segment-size 1000 --workers 2";
    const fs::path full_dir = dir / "full", resumed_dir = dir / "resumed";

    auto sh = [](const std::string& cmd) { return std::system((cmd + " > /dev/null 2>&1").c_str()); };
    int rc = sh(base + " --out " + full_dir.string());
    int rc_int = sh(base + " --out " + resumed_dir.string() + " --max-segments 3");
    int rc_res = sh(std::string(cli_path) + " verify --resume " + resumed_dir.string());
    if (rc != 0 || rc_int != 0 || rc_res != 0) {
        report(11, false, "CLI runs failed (exit codes " + std::to_string(rc) + "," + std::to_string(rc_int) + "," +
                              std::to_string(rc_res) + ")");
        return;
    }

    auto load_minus_runtime = [](const fs::path& p) {
        std::ifstream in(p);
        nlohmann::ordered_json j;
        in >> j;
        j.erase("runtime");
        return j.dump();
    };
    const std::string a = load_minus_runtime(full_dir / "summary.json");
    const std::string b = load_minus_runtime(resumed_dir / "summary.json");
    const bool ok = !a.empty() && a == b;
    report(11, ok, ok ? "interrupted+resumed verify summary is byte-identical to the uninterrupted one"
                      : "summaries differ after resume");
}

} // namespace

int main(int argc, char** argv) {
    std::printf("acceptance suite: lcm-of-polynomial-values toolkit\n");
    const auto t0 = std::chrono::steady_clock::now();
    criterion_1();
    criterion_2();
    criterion_3();
    criterion_4();
    criterion_5();
    criterion_6();
    criterion_7();
    criterion_8();
    criterion_9();
    criterion_10();
    criterion_11(argc > 1 ? argv[1] : nullptr);
    std::printf("total: %s (%.1fs)\n", g_failures == 0 ? "all criteria PASS" : "FAILURES PRESENT",
                seconds_since(t0));
    return g_failures == 0 ? 0 : 1;
}
