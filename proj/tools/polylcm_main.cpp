// polylcm: exact lcm/largest-prime-factor statistics for polynomial
// sequences. Subcommands: lcm, verify, alpha.

#include <chrono>
#include <cstdlib>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>

#include "polylcm/report_io.hpp"

namespace fs = std::filesystem;
using namespace polylcm;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitUsage = 1;
constexpr int kExitCheckFailure = 2;

struct CommonOpts {
    std::string poly;
    std::uint64_t N = 0;
    std::uint64_t B = 0;
    std::uint64_t segment_size = 1ull << 16;
    std::vector<std::uint64_t> checkpoints;
    unsigned workers = 0;
    std::uint64_t seed = 0x5eed;
    bool oracle = false;
    std::string out_dir;
    std::string resume_dir;
    std::string root_cache;
    std::uint64_t max_segments = 0;
    bool write_records = false;
    bool allow_linear = false;
    std::vector<double> deltas;
};

void add_common_options(CLI::App* cmd, CommonOpts& o) {
    cmd->add_option("--poly", o.poly, "polynomial, e.g. \"x^2+1\" or \"1,0,1\" (constant first)");
    cmd->add_option("--N", o.N, "range limit: run over n = 1..N");
    cmd->add_option("--B", o.B, "sieve bound (default N; P+ statistics require B = N)");
    cmd->add_option("--segment-size", o.segment_size, "values of n per sieve segment")->capture_default_str();
    cmd->add_option("--checkpoints", o.checkpoints, "checkpoint list (default geometric 10^3, 10^4, ..., N)")->delimiter(',');
    cmd->add_option("--workers", o.workers, "worker threads (default: hardware, or POLYLCM_WORKERS)");
    cmd->add_option("--seed", o.seed, "seed for the reproducible RNG")->capture_default_str();
    cmd->add_flag("--oracle", o.oracle, "also fold the slow big-integer lcm and cross-check");
    cmd->add_option("--out", o.out_dir, "run directory (default under POLYLCM_OUT_DIR or ./polylcm-runs)");
    cmd->add_option("--resume", o.resume_dir, "resume an interrupted run from its directory");
    cmd->add_option("--root-cache", o.root_cache, "root-table cache file to load/update");
    cmd->add_option("--max-segments", o.max_segments, "stop after this many segments (leaves a resumable checkpoint)");
    cmd->add_flag("--records", o.write_records, "stream per-n factorizations to records.jsonl");
    cmd->add_flag("--allow-linear", o.allow_linear, "allow degree-1 polynomials (baseline exploration only)");
}

std::string now_iso8601() {
    const auto t = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
    std::tm tm{};
    gmtime_r(&t, &tm);
    std::ostringstream out;
    out << std::put_time(&tm, "%Y-%m-%dT%H:%M:%SZ");
    return out.str();
}

std::string poly_slug(const std::string& poly) {
    std::string slug;
    for (char c : poly) {
        if (std::isalnum(static_cast<unsigned char>(c)))
            slug.push_back(c);
        else if (c == '+')
            slug.push_back('p');
        else if (c == '-')
            slug.push_back('m');
    }
    return slug.empty() ? "poly" : slug;
}

std::vector<std::uint64_t> default_checkpoints(std::uint64_t N) {
    std::vector<std::uint64_t> cps;
    for (std::uint64_t c = 1000; c < N; c *= 10) cps.push_back(c);
    cps.push_back(N);
    return cps;
}

unsigned workers_from_env(unsigned cli_value) {
    if (cli_value != 0) return cli_value;
    if (const char* env = std::getenv("POLYLCM_WORKERS")) {
        const long v = std::strtol(env, nullptr, 10);
        if (v > 0) return static_cast<unsigned>(v);
    }
    return 0; // sieve falls back to hardware concurrency
}

fs::path choose_run_dir(const CommonOpts& o, const std::string& command) {
    if (!o.resume_dir.empty()) return o.resume_dir;
    if (!o.out_dir.empty()) return o.out_dir;
    fs::path base = "polylcm-runs";
    if (const char* env = std::getenv("POLYLCM_OUT_DIR")) base = env;
    const auto stamp = std::chrono::duration_cast<std::chrono::seconds>(
                           std::chrono::system_clock::now().time_since_epoch())
                           .count();
    return base / (command + "-" + poly_slug(o.poly) + "-N" + std::to_string(o.N) + "-" + std::to_string(stamp));
}

void print_checks(const std::vector<CheckOutcome>& checks, std::ostream& out) {
    out << "\n  " << std::left << std::setw(44) << "check" << std::setw(14) << "measured" << std::setw(10) << "status"
        << "threshold\n";
    for (const auto& c : checks) {
        std::string status = !c.applied ? "n/a" : (c.pass ? "pass" : "FAIL");
        if (c.hard && c.applied) status += "*";
        out << "  " << std::left << std::setw(44) << c.name << std::setw(14) << std::setprecision(6) << c.measured
            << std::setw(10) << status << c.threshold;
        if (!c.note.empty()) out << "  (" << c.note << ")";
        out << "\n";
    }
    out << "  (* = hard check: failures set exit code 2)\n";
}

struct LoadedRun {
    SieveConfig cfg;
    IntPolynomial f;
    std::vector<double> deltas;
    std::optional<ResumeState> resume;
    std::vector<FactoredValue> head_records;
};

SieveConfig config_from_opts(const CommonOpts& o) {
    SieveConfig cfg;
    cfg.N = o.N;
    cfg.B = o.B == 0 ? o.N : o.B;
    cfg.segment_size = o.segment_size;
    cfg.checkpoints = o.checkpoints.empty() ? default_checkpoints(o.N) : o.checkpoints;
    cfg.workers = workers_from_env(o.workers);
    cfg.seed = o.seed;
    cfg.oracle_mode = o.oracle;
    cfg.max_segments = o.max_segments;
    return cfg;
}

LoadedRun load_resume(const fs::path& dir, const std::string& command) {
    LoadedRun run;
    const auto cfg_json = io_detail::read_json_file(dir / "config.json");
    if (cfg_json.at("command").get<std::string>() != command)
        throw std::runtime_error("run directory belongs to subcommand '" +
                                 cfg_json.at("command").get<std::string>() + "'");
    run.f = IntPolynomial::parse(cfg_json.at("poly").get<std::string>());
    run.cfg.N = cfg_json.at("N").get<std::uint64_t>();
    run.cfg.B = cfg_json.at("B").get<std::uint64_t>();
    run.cfg.segment_size = cfg_json.at("segment_size").get<std::uint64_t>();
    run.cfg.checkpoints = cfg_json.at("checkpoints").get<std::vector<std::uint64_t>>();
    run.cfg.workers = cfg_json.at("workers").get<unsigned>();
    run.cfg.seed = cfg_json.at("seed").get<std::uint64_t>();
    run.cfg.oracle_mode = cfg_json.at("oracle_mode").get<bool>();
    run.deltas = cfg_json.at("deltas").get<std::vector<double>>();

    const auto cp_path = dir / "checkpoint.json";
    if (!fs::exists(cp_path)) throw std::runtime_error("no checkpoint.json in " + dir.string() + "; nothing to resume");
    run.resume = resume_from_json(io_detail::read_json_file(cp_path), run.f, run.cfg);

    const auto rec_path = dir / "records.jsonl";
    if (fs::exists(rec_path))
        run.head_records = load_records(rec_path, run.resume->completed_through, &run.f, &run.cfg);
    return run;
}

// Shared driver for `lcm` and `verify`.
int run_sieve_command(const CommonOpts& opts, const std::string& command) {
    const auto t0 = std::chrono::steady_clock::now();
    const bool is_verify = command == "verify";

    LoadedRun run;
    if (!opts.resume_dir.empty()) {
        run = load_resume(opts.resume_dir, command);
        run.cfg.max_segments = opts.max_segments;
    } else {
        if (opts.poly.empty() || opts.N == 0)
            throw CLI::ValidationError("--poly and --N are required (unless resuming)");
        run.f = IntPolynomial::parse(opts.poly);
        run.cfg = config_from_opts(opts);
        run.deltas = opts.deltas;
        if (run.deltas.empty() && run.f.degree() >= 1)
            run.deltas.push_back(1.0 / (2.0 * run.f.degree() * run.f.degree()));
    }
    const IntPolynomial& f = run.f;
    SieveConfig& cfg = run.cfg;

    if (f.degree() < 1) throw CLI::ValidationError("constant polynomial: nothing to sieve");
    if (f.degree() == 1 && !(command == "lcm" && opts.allow_linear))
        throw CLI::ValidationError("degree-1 polynomial: theorem-level runs need degree >= 2 "
                                   "(use `lcm --allow-linear` for baseline exploration)");
    if (is_verify && cfg.B != cfg.N) throw CLI::ValidationError("verify needs B = N for exact P+ decisions");

    const PolyProfile profile = build_profile(f, cfg.N);
    if (f.degree() >= 2) {
        if (profile.irreducible.verdict == TriState::no)
            throw CLI::ValidationError("polynomial is reducible (witness: " + profile.irreducible.witness +
                                       "); theorem-level runs need an irreducible polynomial");
        if (profile.irreducible.verdict == TriState::unknown)
            std::cerr << "warning: irreducibility screen returned 'unknown'; proceeding, report will be flagged\n";
    }
    if (profile.rational_zero_free_on < cfg.N)
        throw CLI::ValidationError("f has an integer zero in [1, N]: lcm degenerates to 0");

    const fs::path dir = choose_run_dir(opts, command);
    fs::create_directories(dir);
    RunPaths paths{dir};

    if (opts.resume_dir.empty())
        io_detail::write_file_atomic(paths.config(), config_to_json(f, cfg, run.deltas, command).dump(1) + "\n");

    RootTableSet tables(f, cfg.seed);
    if (!opts.root_cache.empty()) {
        const auto adopted = load_root_cache(opts.root_cache, tables);
        if (adopted > 0) std::cerr << "root cache: adopted " << adopted << " tables\n";
    }

    cfg.collect_records = is_verify;
    const bool stream_records = is_verify || opts.write_records;

    FactorSieve sieve(f, cfg, &tables);

    const std::optional<std::uint64_t> p_plus_B =
        cfg.B == cfg.N ? std::optional<std::uint64_t>(cfg.B) : std::nullopt;
    std::ofstream records_out;
    if (stream_records) {
        records_out.open(paths.records(), std::ios::trunc);
        records_out << record_header_line(f, cfg) << "\n";
        for (const auto& rec : run.head_records) records_out << record_to_line(rec, p_plus_B) << "\n";
    }

    auto sink = [&](const FactoredValue& rec) {
        if (stream_records) records_out << record_to_line(rec, p_plus_B) << "\n";
    };
    auto on_merged = [&](const ResumeState& state) {
        if (stream_records) records_out.flush();
        io_detail::write_file_atomic(paths.checkpoint(), resume_to_json(f, cfg, state).dump(1) + "\n");
    };

    SieveOutcome outcome = sieve.run(sink, run.resume ? &*run.resume : nullptr, on_merged);

    if (!opts.root_cache.empty()) save_root_cache(opts.root_cache, tables);

    if (!outcome.complete) {
        std::cout << command << ": incomplete run, processed n <= " << outcome.completed_through << " of "
                  << cfg.N << "\nresume with: polylcm " << command << " --resume " << dir.string() << "\n";
        return kExitOk;
    }

    const double wall_ms =
        std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();

    if (is_verify) {
        std::vector<FactoredValue> all_records = std::move(run.head_records);
        all_records.insert(all_records.end(), std::make_move_iterator(outcome.records.begin()),
                           std::make_move_iterator(outcome.records.end()));
        StatsReport rep = build_stats_report(sieve, outcome, all_records, profile, run.deltas);
        rep.wall_ms = wall_ms;
        io_detail::write_file_atomic(paths.summary(), summary_to_json(rep, command, now_iso8601()).dump(1) + "\n");
        write_series_csvs(paths, rep);

        std::cout << "verify: " << f.str() << ", N = " << cfg.N << ", log L = " << std::setprecision(12)
                  << rep.log_lcm << "\n";
        print_checks(rep.checks, std::cout);
        std::cout << "report: " << paths.summary().string() << "\n";
        return rep.hard_failure() ? kExitCheckFailure : kExitOk;
    }

    // lcm command: series + the ratio checks that apply to it
    std::vector<CheckOutcome> checks;
    const auto ratios = cilleruelo_ratio(f.degree(), outcome.lcm_series);
    CheckThresholds thr;
    if (f.degree() == 2) {
        const auto& last = ratios.back();
        checks.push_back({"cilleruelo.band.d2", last.ratio,
                          "in [" + std::to_string(thr.cilleruelo_band_lo) + ", " +
                              std::to_string(thr.cilleruelo_band_hi) + "]",
                          true, cfg.N >= thr.cilleruelo_min_n,
                          last.ratio >= thr.cilleruelo_band_lo && last.ratio <= thr.cilleruelo_band_hi, ""});
        const auto& first = ratios.front();
        const bool trend_applied = cfg.N >= 100'000 && first.n * 100 <= cfg.N;
        checks.push_back({"cilleruelo.trend.d2", std::fabs(1.0 - last.ratio),
                          "<= |1 - ratio(first)| = " + std::to_string(std::fabs(1.0 - first.ratio)), true,
                          trend_applied, std::fabs(1.0 - last.ratio) <= std::fabs(1.0 - first.ratio), ""});
    } else if (f.degree() >= 3) {
        checks.push_back({"cilleruelo.ratio.reported", ratios.back().ratio,
                          "reported only: conjecture open for d >= 3", false, false, true, ""});
    }
    if (outcome.oracle_log_lcm) {
        const double rel = std::fabs(outcome.exponents.log_lcm() - *outcome.oracle_log_lcm) /
                           std::max(1.0, std::fabs(*outcome.oracle_log_lcm));
        checks.push_back({"lcm.oracle_identity", rel, "<= 1e-9", true, true, rel <= 1e-9, ""});
    }

    ordered_json j;
    j["format"] = "polylcm.summary";
    j["version"] = kSummaryVersion;
    j["command"] = command;
    j["poly"] = f.str();
    j["degree"] = f.degree();
    j["N"] = cfg.N;
    j["B"] = cfg.B;
    j["seed"] = cfg.seed;
    j["log_lcm"] = outcome.exponents.log_lcm();
    if (outcome.oracle_log_lcm) j["oracle_log_lcm"] = *outcome.oracle_log_lcm;
    ordered_json series = ordered_json::array();
    for (const auto& pt : ratios)
        series.push_back({{"N", pt.n}, {"log_lcm", pt.log_lcm}, {"cilleruelo_ratio", pt.ratio}});
    j["series"] = std::move(series);
    ordered_json jc = ordered_json::array();
    for (const auto& c : checks) jc.push_back(check_to_json(c));
    j["checks"] = std::move(jc);
    bool hard_fail = false;
    for (const auto& c : checks) hard_fail |= c.hard && c.applied && !c.pass;
    j["hard_failure"] = hard_fail;
    j["runtime"] = {{"wall_ms", wall_ms}, {"timestamp", now_iso8601()}};
    io_detail::write_file_atomic(paths.summary(), j.dump(1) + "\n");
    {
        std::ostringstream out;
        out << "N,log_lcm,cilleruelo_ratio\n";
        for (const auto& pt : ratios) out << pt.n << "," << pt.log_lcm << "," << pt.ratio << "\n";
        io_detail::write_file_atomic(paths.csv("cilleruelo"), out.str());
    }

    std::cout << "lcm: " << f.str() << ", N = " << cfg.N << "\n";
    for (const auto& pt : ratios)
        std::cout << "  N = " << std::setw(10) << pt.n << "  log L = " << std::setprecision(12) << std::setw(18)
                  << pt.log_lcm << "  ratio = " << std::setprecision(6) << pt.ratio << "\n";
    if (!checks.empty()) print_checks(checks, std::cout);
    std::cout << "report: " << paths.summary().string() << "\n";
    return hard_fail ? kExitCheckFailure : kExitOk;
}

int run_alpha_command(const CommonOpts& opts, std::uint64_t p) {
    if (opts.poly.empty() || opts.N == 0) throw CLI::ValidationError("--poly and --N are required");
    IntPolynomial f = IntPolynomial::parse(opts.poly);
    if (f.degree() < 1) throw CLI::ValidationError("constant polynomial");
    if (p > opts.N) throw CLI::ValidationError("alpha needs p <= N");
    if (classify_prime(mpz_class(static_cast<unsigned long>(p))) == Primality::composite)
        throw CLI::ValidationError(std::to_string(p) + " is not prime");

    SieveConfig cfg = config_from_opts(opts);
    cfg.prime_filter = {p};
    cfg.collect_records = false;
    FactorSieve sieve(f, cfg);
    const auto outcome = sieve.run();
    const auto formula = sieve.alpha_by_formula();

    std::size_t idx = 0;
    const auto& primes = sieve.primes();
    while (idx < primes.size() && primes[idx] != p) ++idx;
    const std::uint64_t alpha_sieve = outcome.exponents.alpha[idx];
    const std::uint64_t alpha_formula = formula[idx];
    const std::uint64_t rho = sieve.tables().rho(p, 1);
    const double main_term = static_cast<double>(cfg.N) * static_cast<double>(rho) / static_cast<double>(p - 1);
    const double residual = static_cast<double>(alpha_formula) - main_term;
    const int d = f.degree();
    const double bound = 4.0 * d * std::log(static_cast<double>(cfg.N)) / std::log(static_cast<double>(p));
    const mpz_class disc = discriminant(f);
    const bool singular = mpz_divisible_ui_p(disc.get_mpz_t(), static_cast<unsigned long>(p)) != 0;

    std::cout << "alpha_p(N) for f = " << f.str() << ", p = " << p << ", N = " << cfg.N << "\n"
              << "  alpha (formula) = " << alpha_formula << "\n"
              << "  alpha (sieve)   = " << alpha_sieve << "\n"
              << "  rho_f(p)        = " << rho << "\n"
              << "  main term N rho/(p-1) = " << std::setprecision(10) << main_term << "\n"
              << "  residual        = " << residual << "\n";
    if (singular)
        std::cout << "  p | disc f: singular prime, the main-term formula does not apply (alpha_p << N/p)\n";
    else
        std::cout << "  |residual| <= 4 d log N / log p = " << bound << " : "
                  << (std::fabs(residual) <= bound ? "yes" : "NO") << "\n";
    if (alpha_sieve != alpha_formula) {
        std::cerr << "error: formula and sieve disagree\n";
        return kExitCheckFailure;
    }

    if (!opts.out_dir.empty()) {
        fs::create_directories(opts.out_dir);
        std::ostringstream out;
        out << "p,alpha_formula,alpha_sieve,rho,main_term,residual,singular\n"
            << p << "," << alpha_formula << "," << alpha_sieve << "," << rho << "," << main_term << "," << residual
            << "," << (singular ? 1 : 0) << "\n";
        io_detail::write_file_atomic(fs::path(opts.out_dir) / "alpha.csv", out.str());
    }
    return kExitOk;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"exact lcm and largest-prime-factor statistics for polynomial sequences"};
    app.require_subcommand(1);

    CommonOpts lcm_opts, verify_opts, alpha_opts;
    std::uint64_t alpha_p = 0;

    auto* lcm_cmd = app.add_subcommand("lcm", "compute log L_f(N) checkpoints and the Cilleruelo ratio");
    add_common_options(lcm_cmd, lcm_opts);

    auto* verify_cmd = app.add_subcommand("verify", "run every statistic and the full pass/fail table");
    add_common_options(verify_cmd, verify_opts);
    verify_cmd->add_option("--delta", verify_opts.deltas, "delta values for the P+ > delta n log n density")->delimiter(',');

    auto* alpha_cmd = app.add_subcommand("alpha", "alpha_p(N) by formula and by sieve, with the main-term residual");
    add_common_options(alpha_cmd, alpha_opts);
    alpha_cmd->add_option("--p", alpha_p, "prime p")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return e.get_name() == "CallForHelp" ? kExitOk : kExitUsage;
    }

    try {
        if (lcm_cmd->parsed()) return run_sieve_command(lcm_opts, "lcm");
        if (verify_cmd->parsed()) return run_sieve_command(verify_opts, "verify");
        if (alpha_cmd->parsed()) return run_alpha_command(alpha_opts, alpha_p);
    } catch (const CLI::ValidationError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitUsage;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitUsage;
    }
    return kExitUsage;
}
