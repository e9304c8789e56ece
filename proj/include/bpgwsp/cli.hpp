#pragma once

#include <atomic>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <mutex>
#include <optional>
#include <set>
#include <thread>
#include <vector>

#include "bpgwsp/io.hpp"
#include "bpgwsp/mcmc.hpp"
#include "bpgwsp/pgw.hpp"
#include "bpgwsp/prior.hpp"
#include "bpgwsp/ropetest.hpp"
#include "bpgwsp/simgen.hpp"
#include "bpgwsp/tune.hpp"

// Command implementations behind the CLI: each command takes a fully resolved
// config struct (JSON-serializable, so a run can be replayed from its
// run.json) and writes its outputs atomically under an output directory.

namespace bpgwsp::cli {

namespace fs = std::filesystem;

// --- shared config pieces ---------------------------------------------------

struct PriorConfig {
    std::string preset = "none";  // none|q1|q2|q3|custom
    double horizon = 365.0;
    std::vector<double> means;    // required for preset=custom (theta,nu,gamma)
    double sd = 10.0;
    double null_sd = 10.0;        // sd of the mean-1 null prior backing the ROPE
    std::string family = "log-log-log";
    bool paper_literal_lognormal = false;
};

inline void to_json(json& j, const PriorConfig& c) {
    j = json{{"preset", c.preset},       {"horizon", c.horizon},
             {"means", c.means},         {"sd", c.sd},
             {"null_sd", c.null_sd},     {"family", c.family},
             {"paper_literal_lognormal", c.paper_literal_lognormal}};
}
inline void from_json(const json& j, PriorConfig& c) {
    j.at("preset").get_to(c.preset);
    j.at("horizon").get_to(c.horizon);
    j.at("means").get_to(c.means);
    j.at("sd").get_to(c.sd);
    j.at("null_sd").get_to(c.null_sd);
    j.at("family").get_to(c.family);
    j.at("paper_literal_lognormal").get_to(c.paper_literal_lognormal);
}

inline PriorSpec resolve_prior(const PriorConfig& c) {
    std::array<double, 3> means{};
    if (c.preset == "custom") {
        if (c.means.size() != 3)
            throw std::invalid_argument("custom prior requires --means a,b,c");
        means = {c.means[0], c.means[1], c.means[2]};
    } else {
        means = find_preset(belief_from_string(c.preset), c.horizon).means;
    }
    return make_prior_spec(family_from_string(c.family), means, c.sd, c.paper_literal_lognormal);
}

// Null prior for ROPE construction: mean-1 shape entries in the analysis
// prior's shape family, with the configured null sd.
inline PriorSpec resolve_null_prior(const PriorConfig& c) {
    return make_prior_spec(family_from_string(c.family), {1.0, 1.0, 1.0}, c.null_sd,
                           c.paper_literal_lognormal);
}

inline void to_json(json& j, const McmcSettings& s) {
    j = json{{"chains", s.chains},
             {"iters_per_chain", s.iters_per_chain},
             {"burn_in", s.burn_in},
             {"seed", s.seed},
             {"target_accept", s.target_accept},
             {"init_jitter_sd", s.init_jitter_sd}};
}
inline void mcmc_from_json(const json& j, McmcSettings& s) {
    j.at("chains").get_to(s.chains);
    j.at("iters_per_chain").get_to(s.iters_per_chain);
    j.at("burn_in").get_to(s.burn_in);
    j.at("seed").get_to(s.seed);
    j.at("target_accept").get_to(s.target_accept);
    j.at("init_jitter_sd").get_to(s.init_jitter_sd);
}

inline json grid_config_to_json(const GridConfig& g) {
    std::vector<std::string> beliefs, families;
    for (auto b : g.beliefs) beliefs.push_back(to_string(b));
    for (auto f : g.families) families.push_back(to_string(f));
    return json{{"sample_sizes", g.sample_sizes},
                {"adr_rates", g.adr_rates},
                {"expected_times", g.expected_times},
                {"beliefs", beliefs},
                {"families", families},
                {"censor_time", g.censor_time},
                {"background_rate", g.background_rate},
                {"rel_sd", g.rel_sd},
                {"repetitions", g.repetitions}};
}
inline GridConfig grid_config_from_json(const json& j) {
    GridConfig g;
    j.at("sample_sizes").get_to(g.sample_sizes);
    j.at("adr_rates").get_to(g.adr_rates);
    j.at("expected_times").get_to(g.expected_times);
    g.beliefs.clear();
    for (const auto& b : j.at("beliefs")) g.beliefs.push_back(belief_from_string(b.get<std::string>()));
    g.families.clear();
    for (const auto& f : j.at("families")) g.families.push_back(family_from_string(f.get<std::string>()));
    j.at("censor_time").get_to(g.censor_time);
    j.at("background_rate").get_to(g.background_rate);
    j.at("rel_sd").get_to(g.rel_sd);
    j.at("repetitions").get_to(g.repetitions);
    return g;
}

inline void write_run_json(const fs::path& out_dir, const std::string& command, const json& config) {
    atomic_write(out_dir / "run.json", json{{"command", command}, {"config", config}}.dump(2) + "\n");
}

// --- simulate ----------------------------------------------------------------

struct SimulateConfig {
    std::string out_dir;
    std::uint64_t seed = 0;
    GridConfig grid;
};

inline void to_json(json& j, const SimulateConfig& c) {
    j = json{{"out_dir", c.out_dir}, {"seed", c.seed}, {"grid", grid_config_to_json(c.grid)}};
}
inline void from_json(const json& j, SimulateConfig& c) {
    j.at("out_dir").get_to(c.out_dir);
    j.at("seed").get_to(c.seed);
    c.grid = grid_config_from_json(j.at("grid"));
}

inline json manifest_entry(const GridSetting& s, int rep, std::uint64_t seed, const std::string& file) {
    return json{{"setting", s.index},
                {"rep", rep},
                {"seed", seed},
                {"file", file},
                {"n", s.scenario.n},
                {"adr_rate", s.scenario.adr_rate},
                {"expected_time", s.scenario.expected_time},
                {"censor_time", s.scenario.censor_time},
                {"background_rate", s.scenario.background_rate},
                {"rel_sd", s.scenario.rel_sd},
                {"belief", to_string(s.belief)},
                {"family", to_string(s.family)},
                {"truth", s.scenario.adr_rate > 0.0},
                {"true_quarter", true_quarter(s)}};
}

inline void run_simulate(const SimulateConfig& cfg) {
    const fs::path out(cfg.out_dir);
    fs::create_directories(out / "data");
    const ScenarioGrid grid = build_grid(cfg.grid);
    json manifest = json::array();
    for (const auto& s : grid.settings) {
        for (int rep = 0; rep < grid.repetitions; ++rep) {
            const std::uint64_t seed =
                mix_seed(cfg.seed, static_cast<std::uint64_t>(s.index), static_cast<std::uint64_t>(rep));
            auto sample = generate_sample(s.scenario, seed);
            for (const auto& w : sample.warnings) std::cerr << "warning: " << w << "\n";
            char name[64];
            std::snprintf(name, sizeof name, "data/setting%04d_rep%03d.csv", s.index, rep);
            write_dataset(out / name, sample.data);
            manifest.push_back(manifest_entry(s, rep, seed, name));
        }
    }
    atomic_write(out / "manifest.json", manifest.dump(2) + "\n");
    json jc;
    to_json(jc, cfg);
    write_run_json(out, "simulate", jc);
    std::cout << "simulate: " << grid.settings.size() << " settings ("
              << grid.adr_count() << " ADR + " << grid.control_count() << " control) x "
              << grid.repetitions << " reps -> " << manifest.size() << " datasets\n";
}

// --- fit ----------------------------------------------------------------------

struct FitConfig {
    std::string data_path;
    std::string out_dir;
    double censor = 0.0;  // 0 = infer from data
    PriorConfig prior;
    McmcSettings mcmc;
    int workers = 1;
};

inline void to_json(json& j, const FitConfig& c) {
    json jm;
    to_json(jm, c.mcmc);
    json jp;
    to_json(jp, c.prior);
    j = json{{"data_path", c.data_path}, {"out_dir", c.out_dir}, {"censor", c.censor},
             {"prior", jp},              {"mcmc", jm},           {"workers", c.workers}};
}
inline void from_json(const json& j, FitConfig& c) {
    j.at("data_path").get_to(c.data_path);
    j.at("out_dir").get_to(c.out_dir);
    j.at("censor").get_to(c.censor);
    c.prior = j.at("prior").get<PriorConfig>();
    mcmc_from_json(j.at("mcmc"), c.mcmc);
    j.at("workers").get_to(c.workers);
}

inline PosteriorDraws run_fit(const FitConfig& cfg) {
    const fs::path out(cfg.out_dir);
    const TteDataset data = read_dataset(cfg.data_path, cfg.censor);
    const PriorSpec spec = resolve_prior(cfg.prior);
    const PosteriorDraws draws = run_chains(data, spec, cfg.mcmc, cfg.workers);
    atomic_write(out / "draws.csv", draws_to_csv(draws));
    atomic_write(out / "diagnostics.json", diagnostics_to_json(draws, cfg.mcmc).dump(2) + "\n");
    json jc;
    to_json(jc, cfg);
    write_run_json(out, "fit", jc);
    for (std::size_t c = 0; c < draws.cols(); ++c)
        if (draws.ess[c] < kEssRecommended)
            std::cerr << "warning: ess(" << draws.columns[c] << ") = " << draws.ess[c]
                      << " below recommended 10000\n";
    return draws;
}

// --- test ----------------------------------------------------------------------

struct TestCmdConfig {
    std::string data_path;
    std::string out_dir;
    double censor = 0.0;
    PriorConfig prior;
    McmcSettings mcmc;
    TestConfig test;
    int workers = 1;
};

inline void to_json(json& j, const TestCmdConfig& c) {
    json jm;
    to_json(jm, c.mcmc);
    json jp;
    to_json(jp, c.prior);
    j = json{{"data_path", c.data_path}, {"out_dir", c.out_dir}, {"censor", c.censor},
             {"prior", jp},              {"mcmc", jm},           {"test", config_to_json(c.test)},
             {"workers", c.workers}};
}
inline void from_json(const json& j, TestCmdConfig& c) {
    j.at("data_path").get_to(c.data_path);
    j.at("out_dir").get_to(c.out_dir);
    j.at("censor").get_to(c.censor);
    c.prior = j.at("prior").get<PriorConfig>();
    mcmc_from_json(j.at("mcmc"), c.mcmc);
    const auto& jt = j.at("test");
    c.test.rope_level = jt.at("rope_level").get<double>();
    c.test.ci_level = jt.at("ci_level").get<double>();
    c.test.ci_type = ci_type_from_string(jt.at("ci_type").get<std::string>());
    c.test.rule = static_cast<CombinationRule>(jt.at("rule").get<int>());
    j.at("workers").get_to(c.workers);
}

inline std::vector<std::size_t> event_time_histogram(const TteDataset& d, std::size_t bins = 20) {
    std::vector<std::size_t> counts(bins, 0);
    for (std::size_t i = 0; i < d.times.size(); ++i) {
        if (!d.events[i]) continue;
        auto b = static_cast<std::size_t>(d.times[i] / d.censor_time * static_cast<double>(bins));
        counts[std::min(b, bins - 1)]++;
    }
    return counts;
}

inline std::string render_decision_report(const TestDecision& d, const TteDataset& data,
                                          const PosteriorDraws& draws) {
    std::ostringstream os;
    os << "BPgWSP signal detection test\n";
    os << "============================\n\n";
    std::size_t events = 0;
    for (auto e : data.events) events += e;
    os << "records: " << data.times.size() << "  events: " << events
       << "  censored: " << data.times.size() - events << "  censor time: " << data.censor_time
       << "\n\n";
    os << "config: ROPE " << d.config.rope_level * 100 << "% ETI, CI " << d.config.ci_level * 100
       << "% " << to_string(d.config.ci_type) << ", " << to_string(d.config.rule) << "\n\n";
    auto line = [&](const char* name, const Interval& rope, const Interval& ci, InterimOutcome o) {
        os << name << ": ROPE [" << rope.lo << ", " << rope.hi << "]  CI [" << ci.lo << ", "
           << ci.hi << "]  -> " << to_string(o) << "\n";
    };
    line("nu   ", d.rope_nu, d.ci_nu, d.outcome_nu);
    line("gamma", d.rope_gamma, d.ci_gamma, d.outcome_gamma);
    os << "\ndecision: " << (d.signal ? "SIGNAL" : "no signal") << "\n";
    if (!d.warnings.empty()) {
        os << "\nwarnings:\n";
        for (const auto& w : d.warnings) os << "  - " << w << "\n";
    }
    os << "\ndiagnostics:\n";
    for (std::size_t c = 0; c < draws.cols(); ++c)
        os << "  " << draws.columns[c] << ": ess " << draws.ess[c] << ", rhat " << draws.rhat[c]
           << "\n";
    os << "\nevent-time histogram (20 bins over (0, " << data.censor_time << "]):\n";
    const auto counts = event_time_histogram(data);
    std::size_t peak = 1;
    for (auto c : counts) peak = std::max(peak, c);
    for (std::size_t b = 0; b < counts.size(); ++b) {
        const double lo = data.censor_time * static_cast<double>(b) / 20.0;
        const double hi = data.censor_time * static_cast<double>(b + 1) / 20.0;
        os << "  [" << lo << ", " << hi << "): " << std::string(counts[b] * 50 / peak, '#') << " "
           << counts[b] << "\n";
    }
    return os.str();
}

inline TestResult run_test_cmd(const TestCmdConfig& cfg) {
    const fs::path out(cfg.out_dir);
    const TteDataset data = read_dataset(cfg.data_path, cfg.censor);
    const PriorSpec spec = resolve_prior(cfg.prior);
    const PriorSpec null_spec = resolve_null_prior(cfg.prior);
    TestResult r = run_test(data, spec, null_spec, cfg.mcmc, cfg.test, cfg.workers);

    json decision = decision_to_json(r.decision);
    decision["diagnostics"] = diagnostics_to_json(r.draws, cfg.mcmc);
    atomic_write(out / "decision.json", decision.dump(2) + "\n");
    atomic_write(out / "report.txt", render_decision_report(r.decision, data, r.draws));
    json jc;
    to_json(jc, cfg);
    write_run_json(out, "test", jc);
    return r;
}

// --- tune ------------------------------------------------------------------------

struct TuneConfig {
    std::string out_dir;
    std::uint64_t seed = 0;
    GridConfig grid;
    McmcSettings mcmc;
    double prior_sd = 10.0;
    double null_sd = 10.0;
    bool paper_literal_lognormal = false;
    std::vector<double> rope_levels;  // empty = default tuning grid
    std::vector<double> ci_levels;
    bool require_ess = false;         // exclude ESS<10000 decisions from reports
    int workers = 1;
};

inline void to_json(json& j, const TuneConfig& c) {
    json jm;
    to_json(jm, c.mcmc);
    j = json{{"out_dir", c.out_dir},
             {"seed", c.seed},
             {"grid", grid_config_to_json(c.grid)},
             {"mcmc", jm},
             {"prior_sd", c.prior_sd},
             {"null_sd", c.null_sd},
             {"paper_literal_lognormal", c.paper_literal_lognormal},
             {"rope_levels", c.rope_levels},
             {"ci_levels", c.ci_levels},
             {"require_ess", c.require_ess},
             {"workers", c.workers}};
}
inline void from_json(const json& j, TuneConfig& c) {
    j.at("out_dir").get_to(c.out_dir);
    j.at("seed").get_to(c.seed);
    c.grid = grid_config_from_json(j.at("grid"));
    mcmc_from_json(j.at("mcmc"), c.mcmc);
    j.at("prior_sd").get_to(c.prior_sd);
    j.at("null_sd").get_to(c.null_sd);
    j.at("paper_literal_lognormal").get_to(c.paper_literal_lognormal);
    j.at("rope_levels").get_to(c.rope_levels);
    j.at("ci_levels").get_to(c.ci_levels);
    j.at("require_ess").get_to(c.require_ess);
    j.at("workers").get_to(c.workers);
}

inline std::vector<ConfigKey> config_grid_of(const TuneConfig& cfg) {
    if (cfg.rope_levels.empty() && cfg.ci_levels.empty()) return default_config_grid();
    auto ropes = cfg.rope_levels.empty() ? std::vector<double>{0.80} : cfg.rope_levels;
    auto cis = cfg.ci_levels.empty() ? std::vector<double>{0.80} : cfg.ci_levels;
    std::vector<ConfigKey> grid;
    for (double rope : ropes)
        for (double ci : cis)
            for (CiType t : {CiType::eti, CiType::hdi})
                for (CombinationRule r :
                     {CombinationRule::option1, CombinationRule::option2, CombinationRule::option3})
                    grid.push_back({rope, ci, t, r});
    return grid;
}

// One (setting, rep) unit of the sweep: generate the cohort, fit the
// posterior once, then decide under every config in the grid.
inline SweepRecord sweep_one(const GridSetting& s, int rep, std::uint64_t master_seed,
                             const TuneConfig& cfg, const std::vector<ConfigKey>& config_grid) {
    SweepRecord rec;
    rec.setting = s.index;
    rec.rep = rep;
    rec.seed = mix_seed(master_seed, static_cast<std::uint64_t>(s.index), static_cast<std::uint64_t>(rep));
    rec.truth = s.scenario.adr_rate > 0.0;
    rec.n = s.scenario.n;
    rec.adr_rate = s.scenario.adr_rate;
    rec.expected_time = s.scenario.expected_time;
    rec.belief = s.belief;
    rec.true_quarter = true_quarter(s);
    rec.family = s.family;

    const auto sample = generate_sample(s.scenario, rec.seed);
    const auto means = find_preset(s.belief, s.scenario.censor_time).means;
    const PriorSpec spec = make_prior_spec(s.family, means, cfg.prior_sd, cfg.paper_literal_lognormal);
    const PriorSpec null_spec =
        make_prior_spec(s.family, {1.0, 1.0, 1.0}, cfg.null_sd, cfg.paper_literal_lognormal);

    McmcSettings mcmc = cfg.mcmc;
    mcmc.seed = rec.seed;
    const PosteriorDraws draws = run_chains(sample.data, spec, mcmc);

    const int c_nu = draws.column_index("nu");
    const int c_gamma = draws.column_index("gamma");
    rec.ess_nu = draws.ess[static_cast<std::size_t>(c_nu)];
    rec.ess_gamma = draws.ess[static_cast<std::size_t>(c_gamma)];
    rec.rhat_nu = draws.rhat[static_cast<std::size_t>(c_nu)];
    rec.rhat_gamma = draws.rhat[static_cast<std::size_t>(c_gamma)];
    rec.wall_time_s = draws.wall_time_s;

    const auto col_nu = draws.column(static_cast<std::size_t>(c_nu));
    const auto col_gamma = draws.column(static_cast<std::size_t>(c_gamma));
    const bool literal = cfg.paper_literal_lognormal;

    // CIs depend on (level, type) only and ROPEs on level only; compute each
    // once and reuse across the combination rules.
    std::map<std::pair<double, CiType>, std::pair<Interval, Interval>> cis;
    std::map<double, std::pair<Interval, Interval>> ropes;
    for (const auto& k : config_grid) {
        if (!ropes.count(k.rope_level))
            ropes[k.rope_level] = {rope_interval(null_spec.nu, k.rope_level, literal),
                                   rope_interval(null_spec.gamma, k.rope_level, literal)};
        const auto ck = std::make_pair(k.ci_level, k.ci_type);
        if (!cis.count(ck)) {
            if (k.ci_type == CiType::eti)
                cis[ck] = {eti(col_nu, k.ci_level), eti(col_gamma, k.ci_level)};
            else
                cis[ck] = {hdi(col_nu, k.ci_level), hdi(col_gamma, k.ci_level)};
        }
    }
    for (const auto& k : config_grid) {
        const auto& [rope_nu, rope_gamma] = ropes[k.rope_level];
        const auto& [ci_nu, ci_gamma] = cis[{k.ci_level, k.ci_type}];
        const bool signal = combine(single_outcome(ci_nu, rope_nu),
                                    single_outcome(ci_gamma, rope_gamma), k.rule);
        rec.decisions.emplace_back(k, signal);
    }
    return rec;
}

struct TuneReports {
    std::vector<RankRow> ranking;
    std::vector<StratumRow> by_n, by_adr, by_time;
    std::vector<RobustnessRow> robustness;
};

inline TuneReports aggregate_tune(const std::vector<SweepRecord>& sweeps,
                                  const std::vector<ConfigKey>& config_grid, bool require_ess) {
    std::vector<DecisionRecord> records = expand_records(sweeps);
    if (require_ess) records = filter_ess(records, kEssRecommended);
    TuneReports rep;
    rep.ranking = rank_configs(records, config_grid);

    // stratified / robustness tables are reported at the recommended config
    const ConfigKey rec_key = key_of(recommended_config());
    std::vector<DecisionRecord> at_rec;
    for (const auto& r : records)
        if (key_of(r.config) == rec_key) at_rec.push_back(r);
    if (!at_rec.empty()) {
        rep.by_n = stratified_auc(at_rec, StratifyBy::sample_size);
        rep.by_adr = stratified_auc(at_rec, StratifyBy::adr_proportion);
        rep.by_time = stratified_auc(at_rec, StratifyBy::expected_time);
        rep.robustness = robustness_report(at_rec);
    }
    return rep;
}

inline std::string ranking_to_csv(const std::vector<RankRow>& rows) {
    std::string out = "rank,rope_level,ci_level,ci_type,rule,auc\n";
    int rank = 1;
    for (const auto& r : rows) {
        out += std::to_string(rank++) + "," + format_double(r.config.rope_level) + "," +
               format_double(r.config.ci_level) + "," + to_string(r.config.ci_type) + "," +
               std::to_string(static_cast<int>(r.config.rule)) + "," +
               (r.auc ? format_double(*r.auc) : std::string("NA")) + "\n";
    }
    return out;
}

inline std::string strata_to_csv(const std::vector<StratumRow>& rows, const char* factor) {
    std::string out = std::string("factor,level,auc\n");
    for (const auto& r : rows)
        out += std::string(factor) + "," + r.level + "," +
               (r.auc ? format_double(*r.auc) : std::string("NA")) + "\n";
    return out;
}

inline std::string robustness_to_csv(const std::vector<RobustnessRow>& rows) {
    std::string out = "group,auc\n";
    for (const auto& r : rows)
        out += r.group + "," + (r.auc ? format_double(*r.auc) : std::string("NA")) + "\n";
    return out;
}

inline void write_tune_reports(const fs::path& out, const TuneReports& rep) {
    atomic_write(out / "ranking.csv", ranking_to_csv(rep.ranking));
    std::string strat = strata_to_csv(rep.by_n, "sample_size");
    {
        auto more = strata_to_csv(rep.by_adr, "adr_proportion");
        strat += more.substr(more.find('\n') + 1);
        more = strata_to_csv(rep.by_time, "expected_time");
        strat += more.substr(more.find('\n') + 1);
    }
    atomic_write(out / "stratified.csv", strat);
    atomic_write(out / "robustness.csv", robustness_to_csv(rep.robustness));

    json summary;
    summary["top"] = json::array();
    for (std::size_t i = 0; i < std::min<std::size_t>(10, rep.ranking.size()); ++i) {
        const auto& r = rep.ranking[i];
        summary["top"].push_back({{"config", to_string(r.config)},
                                  {"auc", r.auc ? json(*r.auc) : json(nullptr)}});
    }
    json rob = json::object();
    for (const auto& r : rep.robustness) rob[r.group] = r.auc ? json(*r.auc) : json(nullptr);
    summary["robustness"] = rob;
    json strata = json::object();
    for (const auto& r : rep.by_n) strata[r.level] = r.auc ? json(*r.auc) : json(nullptr);
    summary["auc_by_n"] = strata;
    atomic_write(out / "summary.json", summary.dump(2) + "\n");
}

// Resumable sweep: completed (setting, rep) pairs found in results.jsonl are
// skipped; new records are appended one flushed line at a time, so a killed
// run loses at most the unit in flight.
inline TuneReports run_tune(const TuneConfig& cfg) {
    const fs::path out(cfg.out_dir);
    fs::create_directories(out);
    const ScenarioGrid grid = build_grid(cfg.grid);
    const auto config_grid = config_grid_of(cfg);

    const fs::path store = out / "results.jsonl";
    std::vector<SweepRecord> done = read_sweep_records(store);
    std::set<std::pair<int, int>> done_keys;
    for (const auto& r : done) done_keys.insert({r.setting, r.rep});

    std::vector<std::pair<const GridSetting*, int>> pending;
    for (const auto& s : grid.settings)
        for (int rep = 0; rep < grid.repetitions; ++rep)
            if (!done_keys.count({s.index, rep})) pending.emplace_back(&s, rep);

    std::cout << "tune: " << grid.settings.size() << " settings x " << grid.repetitions
              << " reps, " << done.size() << " already done, " << pending.size() << " to run, "
              << config_grid.size() << " configs\n";

    std::mutex io_mutex;
    std::ofstream append(store, std::ios::app);
    if (!append) throw std::runtime_error("cannot open " + store.string());
    std::atomic<std::size_t> next{0};
    std::atomic<std::size_t> completed{0};

    auto worker = [&] {
        for (;;) {
            const std::size_t i = next.fetch_add(1);
            if (i >= pending.size()) return;
            const auto& [s, rep] = pending[i];
            SweepRecord rec = sweep_one(*s, rep, cfg.seed, cfg, config_grid);
            std::lock_guard<std::mutex> lk(io_mutex);
            append << sweep_record_to_json(rec).dump() << "\n";
            append.flush();
            done.push_back(std::move(rec));
            const auto c = ++completed;
            if (c % 50 == 0 || c == pending.size())
                std::cout << "tune: " << c << "/" << pending.size() << " fits done\n" << std::flush;
        }
    };
    const int workers = std::max(1, cfg.workers);
    if (workers == 1) {
        worker();
    } else {
        std::vector<std::thread> pool;
        for (int w = 0; w < workers; ++w) pool.emplace_back(worker);
        for (auto& t : pool) t.join();
    }

    // order-independent aggregation: sort by (setting, rep)
    std::sort(done.begin(), done.end(), [](const SweepRecord& a, const SweepRecord& b) {
        return std::tie(a.setting, a.rep) < std::tie(b.setting, b.rep);
    });
    TuneReports rep = aggregate_tune(done, config_grid, cfg.require_ess);
    write_tune_reports(out, rep);
    json jc;
    to_json(jc, cfg);
    write_run_json(out, "tune", jc);
    return rep;
}

// --- report -----------------------------------------------------------------

// Renders tuning artifacts or a decision JSON into plain text.
inline std::string run_report(const std::string& in_path) {
    const fs::path p(in_path);
    std::ostringstream os;
    if (fs::is_directory(p)) {
        for (const char* f : {"ranking.csv", "stratified.csv", "robustness.csv"}) {
            const fs::path file = p / f;
            if (!fs::exists(file)) throw std::runtime_error("missing " + file.string());
            os << "== " << f << " ==\n" << read_file(file) << "\n";
        }
    } else {
        const json j = json::parse(read_file(p));
        os << "decision: " << (j.at("signal").get<bool>() ? "SIGNAL" : "no signal") << "\n";
        os << "nu: " << j.at("outcome_nu").get<std::string>() << "  ci ["
           << j.at("ci_nu").at("lo").get<double>() << ", " << j.at("ci_nu").at("hi").get<double>()
           << "]  rope [" << j.at("rope_nu").at("lo").get<double>() << ", "
           << j.at("rope_nu").at("hi").get<double>() << "]\n";
        os << "gamma: " << j.at("outcome_gamma").get<std::string>() << "  ci ["
           << j.at("ci_gamma").at("lo").get<double>() << ", "
           << j.at("ci_gamma").at("hi").get<double>() << "]  rope ["
           << j.at("rope_gamma").at("lo").get<double>() << ", "
           << j.at("rope_gamma").at("hi").get<double>() << "]\n";
        for (const auto& w : j.at("warnings")) os << "warning: " << w.get<std::string>() << "\n";
    }
    return os.str();
}

// --- replay -----------------------------------------------------------------

// Re-executes the command captured in a run.json; outputs land in the saved
// out_dir unless an override is given.
inline void run_replay(const std::string& run_json_path, const std::string& out_override = "") {
    const json run = json::parse(read_file(run_json_path));
    const std::string command = run.at("command").get<std::string>();
    json config = run.at("config");
    if (!out_override.empty()) config["out_dir"] = out_override;
    if (command == "simulate") {
        run_simulate(config.get<SimulateConfig>());
    } else if (command == "fit") {
        run_fit(config.get<FitConfig>());
    } else if (command == "test") {
        run_test_cmd(config.get<TestCmdConfig>());
    } else if (command == "tune") {
        run_tune(config.get<TuneConfig>());
    } else {
        throw std::runtime_error("replay: unknown command '" + command + "'");
    }
}

}  // namespace bpgwsp::cli
