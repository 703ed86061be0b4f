#pragma once

#include <filesystem>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "polylcm/roots.hpp"
#include "polylcm/sieve.hpp"
#include "polylcm/verify.hpp"

namespace polylcm {

using ordered_json = nlohmann::ordered_json;

inline constexpr int kSummaryVersion = 1;
inline constexpr int kRecordsVersion = 1;
inline constexpr int kCheckpointVersion = 1;
inline constexpr int kRootCacheVersion = 1;

namespace io_detail {

inline void write_file_atomic(const std::filesystem::path& path, const std::string& contents) {
    const auto tmp = path.string() + ".tmp";
    {
        std::ofstream out(tmp, std::ios::trunc);
        if (!out) throw std::runtime_error("cannot write " + tmp);
        out << contents;
    }
    std::filesystem::rename(tmp, path);
}

inline ordered_json read_json_file(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot read " + path.string());
    ordered_json j;
    in >> j;
    return j;
}

} // namespace io_detail

// ---------------------------------------------------------------------------
// run config echo (config.json)

struct RunPaths {
    std::filesystem::path dir;
    std::filesystem::path config() const { return dir / "config.json"; }
    std::filesystem::path summary() const { return dir / "summary.json"; }
    std::filesystem::path records() const { return dir / "records.jsonl"; }
    std::filesystem::path checkpoint() const { return dir / "checkpoint.json"; }
    std::filesystem::path csv(const std::string& stat) const { return dir / (stat + ".csv"); }
};

inline ordered_json config_to_json(const IntPolynomial& f, const SieveConfig& cfg, const std::vector<double>& deltas,
                                   const std::string& command) {
    ordered_json j;
    j["format"] = "polylcm.config";
    j["version"] = kSummaryVersion;
    j["command"] = command;
    j["poly"] = f.str();
    ordered_json coeffs = ordered_json::array();
    for (const auto& c : f.coeffs()) coeffs.push_back(c.get_str());
    j["coeffs"] = coeffs;
    j["N"] = cfg.N;
    j["B"] = cfg.B;
    j["segment_size"] = cfg.segment_size;
    j["checkpoints"] = cfg.checkpoints;
    j["workers"] = cfg.workers;
    j["seed"] = cfg.seed;
    j["oracle_mode"] = cfg.oracle_mode;
    j["deltas"] = deltas;
    return j;
}

// ---------------------------------------------------------------------------
// records stream (records.jsonl): one header line, then one line per n

inline std::string record_header_line(const IntPolynomial& f, const SieveConfig& cfg) {
    ordered_json j;
    j["format"] = "polylcm.records";
    j["version"] = kRecordsVersion;
    j["poly"] = f.str();
    j["N"] = cfg.N;
    j["B"] = cfg.B;
    return j.dump();
}

// `with_p_plus` adds the derived largest-prime-factor fields; callers pass
// B = N runs only (the P+ > n boolean is unsound below that).
inline std::string record_to_line(const FactoredValue& rec, std::optional<std::uint64_t> with_p_plus_at_B = {}) {
    ordered_json j;
    j["n"] = rec.n;
    ordered_json factors = ordered_json::array();
    for (const auto& [p, e] : rec.small_factors) factors.push_back({p, e});
    j["factors"] = factors;
    j["cofactor"] = rec.cofactor.get_str();
    j["class"] = to_string(rec.cofactor_class);
    if (with_p_plus_at_B) {
        const PPlusInfo info = p_plus_info(rec, *with_p_plus_at_B);
        j["p_plus"] = info.value.get_str();
        j["p_plus_exact"] = info.exact;
        j["p_plus_gt_n"] = info.greater_than_n;
    }
    return j.dump();
}

inline FactoredValue record_from_line(const std::string& line) {
    const auto j = ordered_json::parse(line);
    FactoredValue rec;
    rec.n = j.at("n").get<std::uint64_t>();
    for (const auto& pe : j.at("factors"))
        rec.small_factors.emplace_back(pe.at(0).get<std::uint32_t>(), pe.at(1).get<std::uint32_t>());
    rec.cofactor = mpz_class(j.at("cofactor").get<std::string>());
    const std::string cls = j.at("class").get<std::string>();
    if (cls == "unit")
        rec.cofactor_class = CofactorClass::unit;
    else if (cls == "prime")
        rec.cofactor_class = CofactorClass::prime;
    else if (cls == "probable_prime")
        rec.cofactor_class = CofactorClass::probable_prime;
    else
        rec.cofactor_class = CofactorClass::composite_unknown;
    return rec;
}

// Reads records back, keeping only n <= limit (a crash can leave lines
// past the last durable checkpoint; those are regenerated on resume).
// When `expect` is given, the header must belong to the same run key.
inline std::vector<FactoredValue> load_records(const std::filesystem::path& path, std::uint64_t limit,
                                               const IntPolynomial* expect_poly = nullptr,
                                               const SieveConfig* expect_cfg = nullptr) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot read " + path.string());
    std::string line;
    if (!std::getline(in, line)) throw std::runtime_error("records file is empty: " + path.string());
    const auto header = ordered_json::parse(line);
    if (header.at("format") != "polylcm.records" || header.at("version").get<int>() != kRecordsVersion)
        throw std::runtime_error("unsupported records file: " + path.string());
    if (expect_poly != nullptr && expect_cfg != nullptr &&
        (header.at("poly").get<std::string>() != expect_poly->str() ||
         header.at("N").get<std::uint64_t>() != expect_cfg->N || header.at("B").get<std::uint64_t>() != expect_cfg->B))
        throw std::runtime_error("records file does not match the run configuration: " + path.string());
    std::vector<FactoredValue> records;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        FactoredValue rec = record_from_line(line);
        if (rec.n > limit) break;
        records.push_back(std::move(rec));
    }
    return records;
}

// ---------------------------------------------------------------------------
// resume checkpoint (checkpoint.json)

inline ordered_json resume_to_json(const IntPolynomial& f, const SieveConfig& cfg, const ResumeState& state) {
    ordered_json j;
    j["format"] = "polylcm.checkpoint";
    j["version"] = kCheckpointVersion;
    j["poly"] = f.str();
    j["N"] = cfg.N;
    j["B"] = cfg.B;
    j["segment_size"] = cfg.segment_size;
    j["seed"] = cfg.seed;
    j["checkpoints"] = cfg.checkpoints;
    j["completed_through"] = state.completed_through;
    j["max_exp"] = state.exponents.max_exp;
    j["alpha"] = state.exponents.alpha;
    j["cofactor_lcm"] = state.exponents.cofactor_lcm.get_str(16);
    j["oracle_lcm"] = state.oracle_lcm.get_str(16);
    ordered_json series = ordered_json::array();
    for (const auto& cp : state.lcm_series)
        series.push_back({{"n", cp.n}, {"log_lcm", cp.log_lcm}, {"sieved", cp.sieved_log}, {"cofactor", cp.cofactor_log}});
    j["lcm_series"] = series;
    return j;
}

inline ResumeState resume_from_json(const ordered_json& j, const IntPolynomial& f, const SieveConfig& cfg) {
    if (j.at("format") != "polylcm.checkpoint" || j.at("version").get<int>() != kCheckpointVersion)
        throw std::runtime_error("unsupported checkpoint file");
    if (j.at("poly").get<std::string>() != f.str() || j.at("N").get<std::uint64_t>() != cfg.N ||
        j.at("B").get<std::uint64_t>() != cfg.B || j.at("segment_size").get<std::uint64_t>() != cfg.segment_size ||
        j.at("seed").get<std::uint64_t>() != cfg.seed)
        throw std::runtime_error("checkpoint does not match the run configuration");
    ResumeState state;
    state.completed_through = j.at("completed_through").get<std::uint64_t>();
    state.exponents.primes = primes_up_to(cfg.B);
    state.exponents.max_exp = j.at("max_exp").get<std::vector<std::uint32_t>>();
    state.exponents.alpha = j.at("alpha").get<std::vector<std::uint64_t>>();
    if (state.exponents.max_exp.size() != state.exponents.primes.size() ||
        state.exponents.alpha.size() != state.exponents.primes.size())
        throw std::runtime_error("checkpoint arrays do not match the prime list");
    state.exponents.cofactor_lcm = mpz_class(j.at("cofactor_lcm").get<std::string>(), 16);
    state.oracle_lcm = mpz_class(j.at("oracle_lcm").get<std::string>(), 16);
    for (const auto& cp : j.at("lcm_series")) {
        LcmCheckpoint pt;
        pt.n = cp.at("n").get<std::uint64_t>();
        pt.log_lcm = cp.at("log_lcm").get<double>();
        pt.sieved_log = cp.at("sieved").get<double>();
        pt.cofactor_log = cp.at("cofactor").get<double>();
        state.lcm_series.push_back(pt);
    }
    return state;
}

// ---------------------------------------------------------------------------
// root table cache

inline void save_root_cache(const std::filesystem::path& path, const RootTableSet& set) {
    ordered_json j;
    j["format"] = "polylcm.roots";
    j["version"] = kRootCacheVersion;
    j["poly"] = set.poly().str();
    j["seed"] = set.seed();
    ordered_json tables = ordered_json::array();
    for (const auto& [key, entry] : set.entries()) {
        ordered_json t;
        t["p"] = entry.table.p;
        t["n_limit"] = entry.table.n_limit;
        t["singular"] = entry.table.singular;
        t["covered_k"] = entry.covered_k;
        ordered_json levels = ordered_json::array();
        for (const auto& level : entry.table.levels) {
            ordered_json l;
            l["k"] = level.k;
            l["modulus"] = level.modulus; // 0 marks a sparse level
            l["roots"] = level.roots;
            levels.push_back(std::move(l));
        }
        t["levels"] = std::move(levels);
        tables.push_back(std::move(t));
    }
    j["tables"] = std::move(tables);
    io_detail::write_file_atomic(path, j.dump(1) + "\n");
}

// Returns the number of tables adopted; 0 when the file belongs to a
// different polynomial or seed.
inline std::size_t load_root_cache(const std::filesystem::path& path, RootTableSet& set) {
    if (!std::filesystem::exists(path)) return 0;
    const auto j = io_detail::read_json_file(path);
    if (j.at("format") != "polylcm.roots" || j.at("version").get<int>() != kRootCacheVersion) return 0;
    if (j.at("poly").get<std::string>() != set.poly().str() || j.at("seed").get<std::uint64_t>() != set.seed()) return 0;
    std::size_t adopted = 0;
    for (const auto& t : j.at("tables")) {
        RootTable table;
        table.p = t.at("p").get<std::uint64_t>();
        table.n_limit = t.at("n_limit").get<std::uint64_t>();
        table.singular = t.at("singular").get<bool>();
        for (const auto& l : t.at("levels")) {
            RootLevel level;
            level.k = l.at("k").get<std::uint32_t>();
            level.modulus = l.at("modulus").get<std::uint64_t>();
            level.roots = l.at("roots").get<std::vector<std::uint64_t>>();
            table.levels.push_back(std::move(level));
        }
        set.adopt(std::move(table), t.at("covered_k").get<std::uint32_t>());
        ++adopted;
    }
    return adopted;
}

// ---------------------------------------------------------------------------
// summary.json and per-statistic CSV series

inline ordered_json check_to_json(const CheckOutcome& c) {
    ordered_json j;
    j["name"] = c.name;
    j["measured"] = c.measured;
    j["threshold"] = c.threshold;
    j["hard"] = c.hard;
    j["applied"] = c.applied;
    j["pass"] = c.pass;
    if (!c.note.empty()) j["note"] = c.note;
    return j;
}

inline ordered_json summary_to_json(const StatsReport& rep, const std::string& command, const std::string& timestamp) {
    ordered_json j;
    j["format"] = "polylcm.summary";
    j["version"] = kSummaryVersion;
    j["command"] = command;
    j["poly"] = rep.poly;
    j["degree"] = rep.degree;
    j["discriminant"] = rep.discriminant.get_str();
    j["irreducibility"] = {{"verdict", to_string(rep.screen.verdict)}, {"witness", rep.screen.witness}};
    j["N"] = rep.N;
    j["B"] = rep.B;
    j["segment_size"] = rep.segment_size;
    j["seed"] = rep.seed;
    j["workers"] = rep.workers;
    j["deltas"] = rep.deltas;
    j["log_lcm"] = rep.log_lcm;
    if (rep.oracle_log_lcm) j["oracle_log_lcm"] = *rep.oracle_log_lcm;

    ordered_json series = ordered_json::array();
    for (const auto& cs : rep.series) {
        ordered_json s;
        s["N"] = cs.N;
        s["log_lcm"] = cs.log_lcm;
        s["cilleruelo_ratio"] = cs.cilleruelo_ratio;
        s["density_p_plus"] = {{"num", cs.density.num}, {"den", cs.density.den}, {"value", cs.density.value()}};
        s["window_density"] = {{"num", cs.window_density.num}, {"den", cs.window_density.den}, {"value", cs.window_density.value()}};
        s["exceptional_fraction"] = {{"num", cs.exceptional_fraction.num}, {"den", cs.exceptional_fraction.den}, {"value", cs.exceptional_fraction.value()}};
        s["chebotarev_S"] = cs.chebotarev_S;
        s["psi_ratio"] = cs.psi_ratio;
        ordered_json granville = ordered_json::array();
        for (const auto& g : cs.granville)
            granville.push_back({{"delta", g.delta},
                                 {"definite_true", g.definite_true},
                                 {"definite_false", g.definite_false},
                                 {"indeterminate", g.indeterminate},
                                 {"total", g.total},
                                 {"fraction", g.definite_fraction().value()},
                                 {"delta_flagged", g.delta_flagged}});
        s["granville"] = std::move(granville);
        series.push_back(std::move(s));
    }
    j["series"] = std::move(series);

    j["multiplicity"] = {{"set_size", rep.multiplicity.set_size},
                         {"bucket_count", rep.multiplicity.bucket_count},
                         {"max_multiplicity", rep.multiplicity.max_multiplicity},
                         {"exact", rep.multiplicity.exact},
                         {"partition_total", rep.multiplicity.partition_total},
                         {"sum_log_p", rep.multiplicity.sum_log_p},
                         {"gate_ok", rep.multiplicity.gate_ok}};
    j["exceptional"] = {{"count", rep.exceptional.count},
                        {"window_size", rep.exceptional.window_size},
                        {"fraction_of_N", rep.exceptional.fraction_of_N},
                        {"log_q_direct", rep.exceptional.log_q_direct},
                        {"log_q_gamma", rep.exceptional.log_q_gamma},
                        {"d_log_n_count", rep.exceptional.d_log_n_count},
                        {"ratio", rep.exceptional.ratio},
                        {"alpha_log_sum", rep.exceptional.alpha_log_sum},
                        {"within_alpha_bound", rep.exceptional.within_alpha_bound}};
    j["alpha_residuals"] = {{"max_regular_normalized", rep.alpha_residuals.max_regular_normalized},
                            {"worst_regular_p", rep.alpha_residuals.worst_regular_p},
                            {"max_singular_normalized", rep.alpha_residuals.max_singular_normalized},
                            {"worst_singular_p", rep.alpha_residuals.worst_singular_p},
                            {"formula_matches_sieve", rep.alpha_residuals.formula_matches_sieve}};
    j["psi"] = {{"N", rep.psi.N}, {"log_lcm", rep.psi.log_lcm}, {"psi", rep.psi.psi}, {"ratio_to_N", rep.psi.ratio_to_N}};

    ordered_json checks = ordered_json::array();
    for (const auto& c : rep.checks) checks.push_back(check_to_json(c));
    j["checks"] = std::move(checks);
    j["hard_failure"] = rep.hard_failure();

    // everything under "runtime" is excluded from reproducibility comparisons
    j["runtime"] = {{"wall_ms", rep.wall_ms}, {"timestamp", timestamp}};
    return j;
}

inline void write_series_csvs(const RunPaths& paths, const StatsReport& rep) {
    {
        std::ostringstream out;
        out << "N,log_lcm,cilleruelo_ratio\n";
        for (const auto& cs : rep.series) out << cs.N << "," << cs.log_lcm << "," << cs.cilleruelo_ratio << "\n";
        io_detail::write_file_atomic(paths.csv("cilleruelo"), out.str());
    }
    {
        std::ostringstream out;
        out << "N,density_num,density_den,density,window_num,window_den,window_density,exceptional_num,exceptional_den,exceptional_fraction\n";
        for (const auto& cs : rep.series)
            out << cs.N << "," << cs.density.num << "," << cs.density.den << "," << cs.density.value() << ","
                << cs.window_density.num << "," << cs.window_density.den << "," << cs.window_density.value() << ","
                << cs.exceptional_fraction.num << "," << cs.exceptional_fraction.den << ","
                << cs.exceptional_fraction.value() << "\n";
        io_detail::write_file_atomic(paths.csv("density"), out.str());
    }
    {
        std::ostringstream out;
        out << "N,chebotarev_S\n";
        for (const auto& cs : rep.series) out << cs.N << "," << cs.chebotarev_S << "\n";
        io_detail::write_file_atomic(paths.csv("chebotarev"), out.str());
    }
    {
        std::ostringstream out;
        out << "N,psi_ratio\n";
        for (const auto& cs : rep.series) out << cs.N << "," << cs.psi_ratio << "\n";
        io_detail::write_file_atomic(paths.csv("psi"), out.str());
    }
    {
        std::ostringstream out;
        out << "N,delta,definite_true,definite_false,indeterminate,total,fraction\n";
        for (const auto& cs : rep.series)
            for (const auto& g : cs.granville)
                out << cs.N << "," << g.delta << "," << g.definite_true << "," << g.definite_false << ","
                    << g.indeterminate << "," << g.total << "," << g.definite_fraction().value() << "\n";
        io_detail::write_file_atomic(paths.csv("granville"), out.str());
    }
}

} // namespace polylcm
