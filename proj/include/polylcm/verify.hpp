#pragma once

#include <chrono>
#include <cmath>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "polylcm/experiments.hpp"
#include "polylcm/screen.hpp"
#include "polylcm/sieve.hpp"

namespace polylcm {

struct CheckOutcome {
    std::string name;
    double measured = 0;
    std::string threshold; // human-readable bound the measurement is held to
    bool hard = false;     // hard checks gate the exit code
    bool applied = true;   // false: below the scale where the bound is meaningful
    bool pass = true;
    std::string note;
};

struct CheckpointStats {
    std::uint64_t N = 0;
    double log_lcm = 0;
    double cilleruelo_ratio = 0;
    Fraction density;               // P+(f(n)) > n over [1, N]
    Fraction window_density;        // same, over (N/log N, N]
    Fraction exceptional_fraction;  // #E(N) / N
    double chebotarev_S = 0;
    double psi_ratio = 0;
    std::vector<GranvilleResult> granville; // one per delta
};

struct AlphaResidualSummary {
    double max_regular_normalized = 0;  // max over p not dividing disc of |alpha - main| / (d log N / log p)
    std::uint64_t worst_regular_p = 0;
    double max_singular_normalized = 0; // max over p | disc of alpha * p / (2 d disc^2 N)
    std::uint64_t worst_singular_p = 0;
    bool formula_matches_sieve = true;
};

struct StatsReport {
    std::string poly;
    int degree = 0;
    mpz_class discriminant;
    ScreenResult screen;
    std::uint64_t N = 0, B = 0, segment_size = 0, seed = 0;
    unsigned workers = 0;
    std::vector<double> deltas;
    std::vector<CheckpointStats> series;
    MultiplicityResult multiplicity;       // at the final N
    ExceptionalReport exceptional;         // at the final N
    AlphaResidualSummary alpha_residuals;  // at the final N
    PsiBaseline psi;                       // at the final N
    std::optional<double> oracle_log_lcm;
    double log_lcm = 0;
    std::vector<CheckOutcome> checks;
    double wall_ms = 0;

    bool hard_failure() const {
        for (const auto& c : checks)
            if (c.hard && c.applied && !c.pass) return true;
        return false;
    }
};

namespace detail {

inline void add_check(std::vector<CheckOutcome>& out, std::string name, double measured, std::string threshold,
                      bool hard, bool applied, bool pass, std::string note = "") {
    out.push_back({std::move(name), measured, std::move(threshold), hard, applied, pass, std::move(note)});
}

} // namespace detail

// Full statistics pass over a completed sieve run. `sieve` must be the
// instance that produced `outcome` (its root tables and prime list are
// reused); `records` must cover n = 1..N in order.
inline StatsReport build_stats_report(FactorSieve& sieve, const SieveOutcome& outcome,
                                      std::span<const FactoredValue> records, const PolyProfile& profile,
                                      std::vector<double> deltas, const CheckThresholds& thr = {}) {
    const IntPolynomial& f = sieve.poly();
    const SieveConfig& cfg = sieve.config();
    const int d = f.degree();
    if (!outcome.complete) throw std::invalid_argument("stats need a completed run");
    if (records.size() != cfg.N) throw std::invalid_argument("stats need records for every n in [1, N]");
    // the delta the hard check is pinned to is always evaluated
    const double default_delta = 1.0 / (2.0 * d * d);
    bool has_default = false;
    for (double delta : deltas) has_default |= std::fabs(delta - default_delta) < 1e-12;
    if (!has_default) deltas.push_back(default_delta);

    StatsReport rep;
    rep.poly = f.str();
    rep.degree = d;
    rep.discriminant = profile.discriminant;
    rep.screen = profile.irreducible;
    rep.N = cfg.N;
    rep.B = cfg.B;
    rep.segment_size = cfg.segment_size;
    rep.seed = cfg.seed;
    rep.workers = cfg.workers;
    rep.deltas = deltas;
    rep.oracle_log_lcm = outcome.oracle_log_lcm;
    rep.log_lcm = outcome.exponents.log_lcm();

    auto ratios = cilleruelo_ratio(d, outcome.lcm_series);
    auto cheb = chebotarev_sum(sieve.tables(), cfg.checkpoints);

    for (std::size_t ci = 0; ci < cfg.checkpoints.size(); ++ci) {
        const std::uint64_t n_i = cfg.checkpoints[ci];
        CheckpointStats cs;
        cs.N = n_i;
        cs.log_lcm = outcome.lcm_series[ci].log_lcm;
        cs.cilleruelo_ratio = ratios[ci].ratio;
        auto sub = records.first(static_cast<std::size_t>(n_i));
        DensityResult dens = density_p_plus(sub, n_i, cfg.B);
        cs.density = dens.fraction();
        DensityResult wdens = window_density_p_plus(sub, n_i, cfg.B);
        cs.window_density = wdens.fraction();
        const std::uint64_t exc = wdens.total - wdens.count_true;
        cs.exceptional_fraction = {exc, n_i};
        cs.chebotarev_S = cheb[ci].deviation;
        cs.psi_ratio = n_i >= 2 ? psi_baseline(n_i).ratio_to_N : 0.0;
        for (double delta : deltas) cs.granville.push_back(granville_density(f, sub, n_i, cfg.B, delta));
        rep.series.push_back(std::move(cs));
    }

    rep.multiplicity = multiplicity_check(f, records, cfg.N, cfg.B);
    rep.exceptional = exceptional_set_report(f, records, cfg.N, cfg.B, outcome.exponents);
    rep.psi = psi_baseline(std::max<std::uint64_t>(cfg.N, 2));

    // alpha residuals against the main-term formula, both routes
    {
        auto formula = sieve.alpha_by_formula();
        AlphaResidualSummary& ars = rep.alpha_residuals;
        ars.formula_matches_sieve = formula == outcome.exponents.alpha;
        const double log_n = std::log(static_cast<double>(cfg.N));
        const mpz_class abs_disc = abs(rep.discriminant);
        const double disc_d = abs_disc.get_d();
        for (std::size_t i = 0; i < sieve.primes().size(); ++i) {
            const std::uint32_t p = sieve.primes()[i];
            const double alpha = static_cast<double>(outcome.exponents.alpha[i]);
            const double log_p = std::log(static_cast<double>(p));
            if (mpz_divisible_ui_p(rep.discriminant.get_mpz_t(), p)) {
                const double normalized = alpha * p / (2.0 * d * disc_d * disc_d * static_cast<double>(cfg.N));
                if (normalized > ars.max_singular_normalized) {
                    ars.max_singular_normalized = normalized;
                    ars.worst_singular_p = p;
                }
            } else if (!mpz_divisible_ui_p(f.leading().get_mpz_t(), p)) {
                const double rho = static_cast<double>(sieve.tables().rho(p, 1));
                const double main_term = static_cast<double>(cfg.N) * rho / (p - 1);
                const double normalized = std::fabs(alpha - main_term) * log_p / (d * log_n);
                if (normalized > ars.max_regular_normalized) {
                    ars.max_regular_normalized = normalized;
                    ars.worst_regular_p = p;
                }
            }
        }
    }

    // ---- pass/fail table -------------------------------------------------
    auto& checks = rep.checks;
    const CheckpointStats& last = rep.series.back();

    detail::add_check(checks, "alpha.double_computation", rep.alpha_residuals.formula_matches_sieve ? 1 : 0,
                      "formula alpha == sieved alpha, exactly", true, true, rep.alpha_residuals.formula_matches_sieve);
    detail::add_check(checks, "alpha.main_term.regular", rep.alpha_residuals.max_regular_normalized,
                      "<= " + std::to_string(thr.alpha_residual_constant) + " (units of d log N / log p)", true, cfg.N >= 100,
                      rep.alpha_residuals.max_regular_normalized <= thr.alpha_residual_constant,
                      "worst p = " + std::to_string(rep.alpha_residuals.worst_regular_p));
    detail::add_check(checks, "alpha.main_term.singular", rep.alpha_residuals.max_singular_normalized,
                      "<= 1 (units of 2 d disc^2 N / p)", true, true,
                      rep.alpha_residuals.max_singular_normalized <= 1.0,
                      "worst p = " + std::to_string(rep.alpha_residuals.worst_singular_p));

    {
        const bool applied = rep.multiplicity.gate_ok && rep.multiplicity.set_size > 0;
        detail::add_check(checks, "multiplicity.max_per_prime", static_cast<double>(rep.multiplicity.max_multiplicity),
                          "<= d = " + std::to_string(d), true, applied,
                          rep.multiplicity.max_multiplicity <= static_cast<std::uint64_t>(d),
                          rep.multiplicity.exact ? "exact grouping" : "conservative grouping");
        detail::add_check(checks, "multiplicity.partition_identity",
                          static_cast<double>(rep.multiplicity.partition_total), "== #N (exact partition)", true,
                          rep.multiplicity.set_size > 0, rep.multiplicity.partition_total == rep.multiplicity.set_size);
        const double floor_log = std::log(static_cast<double>(cfg.N) / std::log(static_cast<double>(std::max<std::uint64_t>(cfg.N, 3))));
        detail::add_check(checks, "chain.sum_log_p", rep.multiplicity.sum_log_p,
                          ">= #P log(N/log N) = " + std::to_string(rep.multiplicity.bucket_count * floor_log), true,
                          rep.multiplicity.set_size > 0,
                          rep.multiplicity.sum_log_p >= static_cast<double>(rep.multiplicity.bucket_count) * floor_log);
        detail::add_check(checks, "chain.log_lcm_dominates", rep.log_lcm, ">= sum of log p over P", true,
                          rep.multiplicity.set_size > 0, rep.log_lcm >= rep.multiplicity.sum_log_p);
    }

    detail::add_check(checks, "density.p_plus_gt_n", last.density.value(),
                      ">= 1 - 1/d - eps = " + std::to_string(1.0 - 1.0 / d - thr.density_eps), true,
                      cfg.N >= thr.density_min_n && d >= 2, last.density.value() >= 1.0 - 1.0 / d - thr.density_eps,
                      "exact fraction " + last.density.str());

    {
        double max_abs = 0;
        for (const auto& pt : cheb) max_abs = std::max(max_abs, std::fabs(pt.deviation));
        detail::add_check(checks, "chebotarev.bound", max_abs, "max |S(N_i)| <= " + std::to_string(thr.chebotarev_max_abs),
                          true, cfg.checkpoints.back() >= 1000 && rep.screen.verdict != TriState::no,
                          max_abs <= thr.chebotarev_max_abs);
        bool drift_applied = false;
        double drift = 0;
        for (std::size_t i = 1; i < cheb.size(); ++i)
            if (cheb[i].N == 10 * cheb[i - 1].N && cheb[i].N >= 100'000) {
                drift_applied = true;
                drift = std::max(drift, std::fabs(cheb[i].deviation - cheb[i - 1].deviation));
            }
        detail::add_check(checks, "chebotarev.drift", drift, "<= " + std::to_string(thr.chebotarev_max_drift), true,
                          drift_applied, drift <= thr.chebotarev_max_drift);
    }

    detail::add_check(checks, "exceptional.fraction", rep.exceptional.fraction_of_N,
                      "<= 1/d + eps = " + std::to_string(1.0 / d + thr.exceptional_eps), true,
                      cfg.N >= thr.exceptional_min_n && d >= 2,
                      rep.exceptional.fraction_of_N <= 1.0 / d + thr.exceptional_eps);
    detail::add_check(checks, "exceptional.log_q_bound", rep.exceptional.log_q_direct,
                      "<= sum alpha_p log p = " + std::to_string(rep.exceptional.alpha_log_sum), true, true,
                      rep.exceptional.within_alpha_bound);
    {
        // log Q summed over values must equal log Q summed over gamma_p
        const double rel = std::fabs(rep.exceptional.log_q_direct - rep.exceptional.log_q_gamma) /
                           std::max(1.0, rep.exceptional.log_q_direct);
        detail::add_check(checks, "exceptional.log_q_two_routes", rel, "<= 1e-9 (relative)", true,
                          rep.exceptional.count > 0, rel <= 1e-9);
    }
    detail::add_check(checks, "exceptional.log_q_ratio", rep.exceptional.ratio,
                      "in [" + std::to_string(thr.logq_ratio_lo) + ", " + std::to_string(thr.logq_ratio_hi) + "]",
                      false, rep.exceptional.count > 0 && cfg.N >= thr.exceptional_min_n,
                      rep.exceptional.ratio >= thr.logq_ratio_lo && rep.exceptional.ratio <= thr.logq_ratio_hi);

    {
        // complement: window density + exceptional count partition the window
        const auto& wd = last.window_density;
        const std::uint64_t exc_count = rep.exceptional.count;
        detail::add_check(checks, "window.complementary_counts", static_cast<double>(wd.num + exc_count),
                          "== window size = " + std::to_string(rep.exceptional.window_size), true, true,
                          wd.num + exc_count == rep.exceptional.window_size);
    }

    for (std::size_t di = 0; di < deltas.size(); ++di) {
        const GranvilleResult& g = last.granville[di];
        const bool is_default_delta = std::fabs(deltas[di] - 1.0 / (2.0 * d * d)) < 1e-12;
        detail::add_check(checks, "granville.positive_fraction[delta=" + std::to_string(deltas[di]) + "]",
                          g.definite_fraction().value(), "> " + std::to_string(thr.granville_min_fraction),
                          is_default_delta, cfg.N >= thr.granville_min_n && d >= 2 && is_default_delta,
                          g.definite_fraction().value() > thr.granville_min_fraction,
                          g.delta_flagged ? "delta >= 1/d^2: outside the proven range" : "");
    }

    if (d == 2) {
        detail::add_check(checks, "cilleruelo.band.d2", last.cilleruelo_ratio,
                          "in [" + std::to_string(thr.cilleruelo_band_lo) + ", " + std::to_string(thr.cilleruelo_band_hi) + "]",
                          true, cfg.N >= thr.cilleruelo_min_n,
                          last.cilleruelo_ratio >= thr.cilleruelo_band_lo &&
                              last.cilleruelo_ratio <= thr.cilleruelo_band_hi);
        const auto& first = rep.series.front();
        const bool trend_applied = cfg.N >= 100'000 && first.N * 100 <= cfg.N;
        detail::add_check(checks, "cilleruelo.trend.d2", std::fabs(1.0 - last.cilleruelo_ratio),
                          "<= |1 - ratio(first)| = " + std::to_string(std::fabs(1.0 - first.cilleruelo_ratio)), true,
                          trend_applied,
                          std::fabs(1.0 - last.cilleruelo_ratio) <= std::fabs(1.0 - first.cilleruelo_ratio));
    } else if (d >= 3) {
        detail::add_check(checks, "cilleruelo.ratio.reported", last.cilleruelo_ratio,
                          "reported only: conjecture open for d >= 3", false, false, true);
    }

    {
        const double rel = std::fabs(rep.psi.log_lcm - rep.psi.psi) / std::max(1.0, rep.psi.log_lcm);
        detail::add_check(checks, "psi.identity", rel, "two routes agree to 1e-9 (relative)", true, true, rel <= 1e-9);
        detail::add_check(checks, "psi.ratio", rep.psi.ratio_to_N,
                          "in [" + std::to_string(thr.psi_ratio_lo) + ", " + std::to_string(thr.psi_ratio_hi) + "]",
                          true, cfg.N >= thr.psi_min_n,
                          rep.psi.ratio_to_N >= thr.psi_ratio_lo && rep.psi.ratio_to_N <= thr.psi_ratio_hi);
    }

    if (rep.oracle_log_lcm) {
        const double rel = std::fabs(rep.log_lcm - *rep.oracle_log_lcm) / std::max(1.0, std::fabs(*rep.oracle_log_lcm));
        detail::add_check(checks, "lcm.oracle_identity", rel, "<= " + std::to_string(thr.oracle_rel_tol), true, true,
                          rel <= thr.oracle_rel_tol);
    }

    detail::add_check(checks, "screen.irreducible", rep.screen.verdict == TriState::yes ? 1 : 0,
                      "screen verdict (1 = certified irreducible)", false, true, rep.screen.verdict != TriState::no,
                      rep.screen.verdict == TriState::unknown ? "unknown: proceeding with caveat" : rep.screen.witness);

    return rep;
}

// Convenience wrapper: sieve + stats in one call.
inline StatsReport run_verify(const IntPolynomial& f, SieveConfig cfg, std::vector<double> deltas = {},
                              const CheckThresholds& thr = {}) {
    const auto t0 = std::chrono::steady_clock::now();
    PolyProfile profile = build_profile(f, cfg.N);
    if (profile.irreducible.verdict == TriState::no)
        throw std::invalid_argument("polynomial is reducible (" + profile.irreducible.witness +
                                    "); theorem-level statistics need an irreducible polynomial");
    if (f.degree() < 2) throw std::invalid_argument("theorem-level statistics need degree >= 2");
    if (cfg.B == 0) cfg.B = cfg.N;
    if (cfg.B != cfg.N) throw std::invalid_argument("verify needs B = N for exact P+ decisions");

    FactorSieve sieve(f, cfg);
    SieveOutcome outcome = sieve.run();
    StatsReport rep = build_stats_report(sieve, outcome, outcome.records, profile, std::move(deltas), thr);
    rep.wall_ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();
    return rep;
}

} // namespace polylcm
