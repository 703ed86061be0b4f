#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include "polylcm/sieve.hpp"

#include "oracles.hpp"

using polylcm::CofactorClass;
using polylcm::FactoredValue;
using polylcm::FactorSieve;
using polylcm::IntPolynomial;
using polylcm::SieveConfig;

namespace {

SieveConfig basic_config(std::uint64_t N, std::uint64_t B = 0) {
    SieveConfig cfg;
    cfg.N = N;
    cfg.B = B;
    cfg.workers = 2;
    return cfg;
}

void require_matches_trial_division(const IntPolynomial& f, std::uint64_t N) {
    auto cfg = basic_config(N);
    FactorSieve sieve(f, cfg);
    auto outcome = sieve.run();
    REQUIRE(outcome.complete);
    REQUIRE(outcome.records.size() == N);
    const auto primes = polylcm::primes_up_to(N);
    for (const auto& rec : outcome.records) {
        auto want = oracle::trial_factor(f(rec.n), primes);
        REQUIRE(rec.cofactor == want.cofactor);
        REQUIRE(rec.small_factors.size() == want.factors.size());
        for (const auto& [p, e] : rec.small_factors) {
            REQUIRE(want.factors.count(p) == 1);
            REQUIRE(want.factors.at(p) == e);
        }
        // reconstruction: product of p^e times cofactor = |f(n)|
        mpz_class prod = rec.cofactor;
        for (const auto& [p, e] : rec.small_factors)
            for (std::uint32_t i = 0; i < e; ++i) prod *= p;
        REQUIRE(prod == abs(f(rec.n)));
    }
}

} // namespace

TEST_CASE("sieve factorizations equal trial division") {
    require_matches_trial_division(IntPolynomial::parse("x^2+1"), 500);
    require_matches_trial_division(IntPolynomial::parse("x^3-x+7"), 300);
    require_matches_trial_division(IntPolynomial::parse("x^4+x+1"), 200);
    // non-monic, singular 2 and 5: exercises the trial-division primes
    require_matches_trial_division(IntPolynomial::parse("6x^2+5"), 200);
}

TEST_CASE("sieve factorizations equal trial division on the big-integer path") {
    // |f(n)| blows past 64 bits immediately, forcing the mpz residuals
    require_matches_trial_division(IntPolynomial::parse("1000000000000000000x^2+7"), 80);
    require_matches_trial_division(IntPolynomial::parse("999999999999999999999x^3+2x+9"), 60);
}

TEST_CASE("sieve matches trial division for random polynomials") {
    // f(1) = 1 here: a value with no prime factors at all
    require_matches_trial_division(IntPolynomial::parse("x^2-x+1"), 150);
    // negative leading coefficient: values are negative, |f(n)| is sieved
    require_matches_trial_division(IntPolynomial::parse("-x^2-1"), 150);

    std::mt19937_64 rng(20240831);
    std::uniform_int_distribution<int> coef(-40, 40);
    std::uniform_int_distribution<int> deg(1, 4);
    int tested = 0;
    while (tested < 12) {
        std::vector<mpz_class> coeffs(static_cast<std::size_t>(deg(rng)) + 1);
        for (auto& c : coeffs) c = coef(rng);
        IntPolynomial f{std::move(coeffs)};
        if (f.degree() < 1) continue;
        if (polylcm::find_integer_zero(f, 120).has_value()) continue;
        require_matches_trial_division(f, 120);
        ++tested;
    }
}

TEST_CASE("hand-factored records") {
    FactorSieve sieve(IntPolynomial::parse("x^2+1"), basic_config(10));
    auto outcome = sieve.run();

    const auto& rec7 = outcome.records[6];
    REQUIRE(rec7.n == 7);
    REQUIRE(rec7.small_factors == std::vector<std::pair<std::uint32_t, std::uint32_t>>{{2, 1}, {5, 2}});
    REQUIRE(rec7.cofactor == 1);
    REQUIRE(rec7.cofactor_class == CofactorClass::unit);

    const auto& rec1 = outcome.records[0];
    REQUIRE(rec1.small_factors == std::vector<std::pair<std::uint32_t, std::uint32_t>>{{2, 1}});
    REQUIRE(rec1.cofactor == 1);

    FactorSieve small_bound(IntPolynomial::parse("x^2+1"), basic_config(4, 3));
    auto partial = small_bound.run();
    const auto& rec4 = partial.records[3];
    REQUIRE(rec4.small_factors.empty());
    REQUIRE(rec4.cofactor == 17);
    REQUIRE(rec4.cofactor_class == CofactorClass::prime);
}

TEST_CASE("alpha: hand values via formula, sieve, and direct valuations") {
    auto f = IntPolynomial::parse("x^2+1");

    FactorSieve s10(f, basic_config(10));
    auto out10 = s10.run();
    auto formula10 = s10.alpha_by_formula();
    const auto& primes10 = s10.primes();
    for (std::size_t i = 0; i < primes10.size(); ++i) {
        REQUIRE(formula10[i] == out10.exponents.alpha[i]);
        REQUIRE(formula10[i] == oracle::direct_alpha(f, primes10[i], 10));
    }
    // alpha_5(10) = 5 (n = 2,3,7,8 contribute 1+1+2+1), alpha_2(10) = 5
    auto idx = [&](std::uint32_t p) {
        return static_cast<std::size_t>(std::find(primes10.begin(), primes10.end(), p) - primes10.begin());
    };
    REQUIRE(out10.exponents.alpha[idx(5)] == 5);
    REQUIRE(out10.exponents.alpha[idx(2)] == 5);

    FactorSieve s100(f, basic_config(100));
    auto out100 = s100.run();
    const auto& primes100 = s100.primes();
    auto it3 = std::find(primes100.begin(), primes100.end(), 3u);
    REQUIRE(out100.exponents.alpha[static_cast<std::size_t>(it3 - primes100.begin())] == 0);
}

TEST_CASE("alpha double computation at medium scale") {
    for (const char* poly : {"x^2+1", "x^3-x+7"}) {
        auto f = IntPolynomial::parse(poly);
        FactorSieve sieve(f, basic_config(2000));
        auto outcome = sieve.run();
        auto formula = sieve.alpha_by_formula();
        REQUIRE(formula.size() == outcome.exponents.alpha.size());
        for (std::size_t i = 0; i < formula.size(); ++i) REQUIRE(formula[i] == outcome.exponents.alpha[i]);
    }
}

TEST_CASE("alpha main-term residuals at medium scale") {
    auto f = IntPolynomial::parse("x^2+1");
    const std::uint64_t N = 2000;
    const int d = f.degree();
    const mpz_class disc = polylcm::discriminant(f);
    FactorSieve sieve(f, basic_config(N));
    auto outcome = sieve.run();
    const auto& primes = sieve.primes();
    for (std::size_t i = 0; i < primes.size(); ++i) {
        const std::uint32_t p = primes[i];
        const double alpha = static_cast<double>(outcome.exponents.alpha[i]);
        if (mpz_divisible_ui_p(disc.get_mpz_t(), p)) {
            // singular bound: alpha_p <= 2 d (disc f)^2 N / p
            const double cap = 2.0 * d * disc.get_d() * disc.get_d() * static_cast<double>(N) / p;
            REQUIRE(alpha <= cap);
        } else {
            const double rho = static_cast<double>(sieve.tables().rho(p, 1));
            const double main_term = static_cast<double>(N) * rho / (p - 1);
            const double bound = 4.0 * d * std::log(static_cast<double>(N)) / std::log(static_cast<double>(p));
            REQUIRE(std::fabs(alpha - main_term) <= bound);
        }
    }
}

TEST_CASE("lcm log: hand values and the exponent-map identity") {
    auto f = IntPolynomial::parse("x^2+1");
    SieveConfig cfg = basic_config(5);
    cfg.checkpoints = {1, 5};
    cfg.oracle_mode = true;
    FactorSieve sieve(f, cfg);
    auto outcome = sieve.run();

    REQUIRE(outcome.lcm_series.size() == 2);
    REQUIRE(outcome.lcm_series[0].n == 1);
    REQUIRE(outcome.lcm_series[0].log_lcm == Catch::Approx(std::log(2.0)).epsilon(1e-12));
    REQUIRE(outcome.lcm_series[1].n == 5);
    // lcm(2, 5, 10, 17, 26) = 2 * 5 * 13 * 17 = 2210
    REQUIRE(outcome.oracle_lcm == 2210);
    REQUIRE(outcome.lcm_series[1].log_lcm == Catch::Approx(std::log(2210.0)).epsilon(1e-12));
    REQUIRE(outcome.lcm_series[1].log_lcm == Catch::Approx(7.70075).epsilon(1e-5));
}

TEST_CASE("exponent-map log agrees with the slow oracle") {
    for (const char* poly : {"x^2+1", "x^3-x+7", "x^4+x+1"}) {
        auto f = IntPolynomial::parse(poly);
        SieveConfig cfg = basic_config(300);
        cfg.oracle_mode = true;
        FactorSieve sieve(f, cfg);
        auto outcome = sieve.run();
        REQUIRE(outcome.oracle_log_lcm.has_value());
        const double exp_map = outcome.exponents.log_lcm();
        const double oracle = *outcome.oracle_log_lcm;
        REQUIRE(std::fabs(exp_map - oracle) <= 1e-9 * std::max(1.0, std::fabs(oracle)));
    }
}

TEST_CASE("cofactor lcm is coprime to every sieved prime with positive max exponent") {
    auto f = IntPolynomial::parse("x^3-x+7");
    FactorSieve sieve(f, basic_config(400, 50));
    auto outcome = sieve.run();
    for (std::size_t i = 0; i < sieve.primes().size(); ++i) {
        if (outcome.exponents.max_exp[i] > 0)
            REQUIRE_FALSE(mpz_divisible_ui_p(outcome.exponents.cofactor_lcm.get_mpz_t(), sieve.primes()[i]));
        REQUIRE(outcome.exponents.alpha[i] >= outcome.exponents.max_exp[i]);
    }
}

TEST_CASE("segmentation and worker count do not change results") {
    auto f = IntPolynomial::parse("x^3-x+7");
    SieveConfig base = basic_config(700);
    base.checkpoints = {100, 700};

    FactorSieve reference(f, base);
    auto want = reference.run();

    for (std::uint64_t seg : {1ull, 37ull, 100000ull}) {
        for (unsigned workers : {1u, 2u, 5u}) {
            SieveConfig cfg = base;
            cfg.segment_size = seg;
            cfg.workers = workers;
            FactorSieve sieve(f, cfg);
            auto got = sieve.run();
            REQUIRE(got.exponents.alpha == want.exponents.alpha);
            REQUIRE(got.exponents.max_exp == want.exponents.max_exp);
            REQUIRE(got.exponents.cofactor_lcm == want.exponents.cofactor_lcm);
            REQUIRE(got.records.size() == want.records.size());
            for (std::size_t i = 0; i < got.records.size(); ++i) {
                REQUIRE(got.records[i].n == want.records[i].n);
                REQUIRE(got.records[i].small_factors == want.records[i].small_factors);
                REQUIRE(got.records[i].cofactor == want.records[i].cofactor);
            }
            REQUIRE(got.lcm_series.size() == want.lcm_series.size());
            for (std::size_t i = 0; i < got.lcm_series.size(); ++i) {
                REQUIRE(got.lcm_series[i].n == want.lcm_series[i].n);
                REQUIRE(got.lcm_series[i].log_lcm == want.lcm_series[i].log_lcm);
            }
        }
    }
}

TEST_CASE("interrupted run resumes to an identical outcome") {
    auto f = IntPolynomial::parse("x^2+1");
    SieveConfig cfg = basic_config(500);
    cfg.segment_size = 64;
    cfg.checkpoints = {100, 250, 500};

    FactorSieve full(f, cfg);
    auto want = full.run();

    SieveConfig first_half = cfg;
    first_half.max_segments = 3;
    FactorSieve interrupted(f, first_half);
    auto partial = interrupted.run();
    REQUIRE_FALSE(partial.complete);
    REQUIRE(partial.completed_through < 500);

    polylcm::ResumeState state;
    state.completed_through = partial.completed_through;
    state.exponents = partial.exponents;
    state.lcm_series = partial.lcm_series;
    state.oracle_lcm = partial.oracle_lcm;

    FactorSieve resumed(f, cfg);
    auto finished = resumed.run({}, &state);
    REQUIRE(finished.complete);
    REQUIRE(finished.exponents.alpha == want.exponents.alpha);
    REQUIRE(finished.exponents.max_exp == want.exponents.max_exp);
    REQUIRE(finished.exponents.cofactor_lcm == want.exponents.cofactor_lcm);
    REQUIRE(finished.lcm_series.size() == want.lcm_series.size());
    for (std::size_t i = 0; i < finished.lcm_series.size(); ++i) {
        REQUIRE(finished.lcm_series[i].n == want.lcm_series[i].n);
        REQUIRE(finished.lcm_series[i].log_lcm == want.lcm_series[i].log_lcm);
    }
}

TEST_CASE("streaming sink sees every n once, in order") {
    auto f = IntPolynomial::parse("x^2+1");
    SieveConfig cfg = basic_config(200);
    cfg.segment_size = 17;
    cfg.collect_records = false;
    FactorSieve sieve(f, cfg);
    std::uint64_t expect = 1;
    auto outcome = sieve.run([&](const FactoredValue& rec) {
        REQUIRE(rec.n == expect);
        ++expect;
    });
    REQUIRE(expect == 201);
    REQUIRE(outcome.records.empty());
}

TEST_CASE("largest prime factor decisions") {
    auto f = IntPolynomial::parse("x^2+1");
    FactorSieve sieve(f, basic_config(10));
    auto outcome = sieve.run();
    auto info = [&](std::uint64_t n) { return polylcm::p_plus_info(outcome.records[n - 1], 10); };

    REQUIRE(info(3).exact);
    REQUIRE(info(3).value == 5);
    REQUIRE(info(3).greater_than_n);

    REQUIRE(info(7).exact);
    REQUIRE(info(7).value == 5);
    REQUIRE_FALSE(info(7).greater_than_n);

    REQUIRE(info(2).exact);
    REQUIRE(info(2).value == 5);
    REQUIRE(info(2).greater_than_n);
}

TEST_CASE("prime filter restricts the sieve but keeps the lcm identity") {
    auto f = IntPolynomial::parse("x^2+1");
    SieveConfig cfg = basic_config(100);
    cfg.prime_filter = {5};
    FactorSieve sieve(f, cfg);
    auto outcome = sieve.run();
    auto formula = sieve.alpha_by_formula();
    const auto& primes = sieve.primes();
    for (std::size_t i = 0; i < primes.size(); ++i) {
        REQUIRE(outcome.exponents.alpha[i] == formula[i]);
        if (primes[i] != 5) REQUIRE(outcome.exponents.alpha[i] == 0);
    }

    SieveConfig full_cfg = basic_config(100);
    full_cfg.oracle_mode = true;
    FactorSieve full(f, full_cfg);
    auto complete = full.run();
    // the filtered exponent map still reproduces log L exactly: everything
    // unsieved lands in the cofactor lcm
    REQUIRE(std::fabs(outcome.exponents.log_lcm() - complete.exponents.log_lcm()) <= 1e-9);
}

TEST_CASE("error paths") {
    REQUIRE_THROWS_AS(FactorSieve(IntPolynomial::parse("x^2-4"), basic_config(10)), std::domain_error);
    REQUIRE_THROWS_AS(FactorSieve(IntPolynomial::parse("7"), basic_config(10)), std::invalid_argument);
    SieveConfig bad = basic_config(10, 20);
    REQUIRE_THROWS_AS(FactorSieve(IntPolynomial::parse("x^2+1"), bad), std::invalid_argument);
}
