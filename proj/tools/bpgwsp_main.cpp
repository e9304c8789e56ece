// bpgwsp: Bayesian PgW shape-parameter signal detection CLI.
//
// Commands: simulate | fit | test | tune | report | replay. Flags may also be
// supplied via --config <json>; explicit command-line flags win, unknown
// config keys are rejected.

#include <array>
#include <functional>
#include <iostream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "bpgwsp/cli.hpp"

namespace {

using bpgwsp::json;

std::vector<double> parse_double_list(const std::string& s) {
    std::vector<double> out;
    std::stringstream ss(s);
    std::string tok;
    while (std::getline(ss, tok, ',')) {
        if (tok.empty()) continue;
        out.push_back(std::stod(tok));
    }
    return out;
}

std::vector<std::string> parse_string_list(const std::string& s) {
    std::vector<std::string> out;
    std::stringstream ss(s);
    std::string tok;
    while (std::getline(ss, tok, ',')) {
        if (!tok.empty()) out.push_back(tok);
    }
    return out;
}

// Applies config-file values for flags the user did not pass explicitly.
class ConfigBinder {
public:
    explicit ConfigBinder(CLI::App* app) : app_(app) {}

    void bind(const std::string& key, std::function<void(const json&)> setter) {
        setters_[key] = std::move(setter);
    }

    void apply(const std::string& config_path) const {
        if (config_path.empty()) return;
        const json cfg = json::parse(bpgwsp::read_file(config_path));
        for (const auto& [key, value] : cfg.items()) {
            auto it = setters_.find(key);
            if (it == setters_.end())
                throw std::runtime_error("unknown config key '" + key + "'");
            if (app_->count("--" + key) == 0) it->second(value);
        }
    }

private:
    CLI::App* app_;
    std::map<std::string, std::function<void(const json&)>> setters_;
};

struct PriorFlags {
    std::string preset = "none";
    double horizon = 365.0;
    std::string means;
    double prior_sd = 10.0;
    double null_sd = 10.0;
    std::string family = "log-log-log";
    bool paper_literal = false;

    void add_to(CLI::App* cmd, ConfigBinder& binder) {
        cmd->add_option("--prior", preset, "prior belief preset: none|q1|q2|q3|custom");
        cmd->add_option("--horizon", horizon, "observation horizon in days (21, 365 or 1095 for presets)");
        cmd->add_option("--means", means, "custom prior means theta,nu,gamma (with --prior custom)");
        cmd->add_option("--prior-sd", prior_sd, "prior sd for non-fixed parameters");
        cmd->add_option("--null-sd", null_sd, "sd of the mean-1 null prior used for the ROPE");
        cmd->add_option("--family", family, "fix-log-log|log-log-log|fix-gam-gam|gam-gam-gam");
        cmd->add_flag("--paper-literal-lognormal", paper_literal,
                      "use the literal lognormal-mu equation (no 1/2 factor)");
        binder.bind("prior", [this](const json& v) { preset = v.get<std::string>(); });
        binder.bind("horizon", [this](const json& v) { horizon = v.get<double>(); });
        binder.bind("means", [this](const json& v) {
            std::string s;
            for (const auto& x : v) s += (s.empty() ? "" : ",") + bpgwsp::format_double(x.get<double>());
            means = s;
        });
        binder.bind("prior-sd", [this](const json& v) { prior_sd = v.get<double>(); });
        binder.bind("null-sd", [this](const json& v) { null_sd = v.get<double>(); });
        binder.bind("family", [this](const json& v) { family = v.get<std::string>(); });
        binder.bind("paper-literal-lognormal", [this](const json& v) { paper_literal = v.get<bool>(); });
    }

    bpgwsp::cli::PriorConfig resolve() const {
        bpgwsp::cli::PriorConfig c;
        c.preset = preset;
        c.horizon = horizon;
        if (!means.empty()) c.means = parse_double_list(means);
        c.sd = prior_sd;
        c.null_sd = null_sd;
        c.family = family;
        c.paper_literal_lognormal = paper_literal;
        if (c.preset == "custom" && c.means.size() != 3)
            throw std::runtime_error("--prior custom requires --means a,b,c");
        return c;
    }
};

struct McmcFlags {
    bpgwsp::McmcSettings s;

    void add_to(CLI::App* cmd, ConfigBinder& binder) {
        cmd->add_option("--seed", s.seed, "master RNG seed");
        cmd->add_option("--chains", s.chains, "number of MCMC chains");
        cmd->add_option("--iters", s.iters_per_chain, "post burn-in draws per chain");
        cmd->add_option("--burnin", s.burn_in, "burn-in draws per chain");
        binder.bind("seed", [this](const json& v) { s.seed = v.get<std::uint64_t>(); });
        binder.bind("chains", [this](const json& v) { s.chains = v.get<int>(); });
        binder.bind("iters", [this](const json& v) { s.iters_per_chain = v.get<int>(); });
        binder.bind("burnin", [this](const json& v) { s.burn_in = v.get<int>(); });
    }
};

struct GridFlags {
    std::string sample_sizes = "500,3000,5000";
    std::string adr_rates = "0.5,1";
    std::string expected_times = "91,183,274";
    std::string beliefs = "none,q1,q2,q3";
    std::string families = "fix-log-log,log-log-log,fix-gam-gam,gam-gam-gam";
    double censor = 365.0;
    double background_rate = 0.1;
    double rel_sd = 0.05;
    int reps = 100;

    void add_to(CLI::App* cmd, ConfigBinder& binder) {
        cmd->add_option("--n", sample_sizes, "sample sizes, comma-separated");
        cmd->add_option("--adr-rates", adr_rates, "positive ADR-rate levels (controls added automatically)");
        cmd->add_option("--expected-times", expected_times, "expected ADR event times in days");
        cmd->add_option("--beliefs", beliefs, "prior beliefs to cross with scenarios");
        cmd->add_option("--families", families, "prior families to cross with scenarios");
        cmd->add_option("--censor", censor, "censoring time in days");
        cmd->add_option("--background-rate", background_rate, "background AE rate");
        cmd->add_option("--rel-sd", rel_sd, "ADR event-time sd as fraction of censor time");
        cmd->add_option("--reps", reps, "repetitions per setting");
        auto bind_str = [&](const char* key, std::string& target) {
            binder.bind(key, [&target](const json& v) {
                if (v.is_string()) {
                    target = v.get<std::string>();
                } else {
                    std::string s;
                    for (const auto& x : v)
                        s += (s.empty() ? "" : ",") +
                             (x.is_string() ? x.get<std::string>() : bpgwsp::format_double(x.get<double>()));
                    target = s;
                }
            });
        };
        bind_str("n", sample_sizes);
        bind_str("adr-rates", adr_rates);
        bind_str("expected-times", expected_times);
        bind_str("beliefs", beliefs);
        bind_str("families", families);
        binder.bind("censor", [this](const json& v) { censor = v.get<double>(); });
        binder.bind("background-rate", [this](const json& v) { background_rate = v.get<double>(); });
        binder.bind("rel-sd", [this](const json& v) { rel_sd = v.get<double>(); });
        binder.bind("reps", [this](const json& v) { reps = v.get<int>(); });
    }

    bpgwsp::GridConfig resolve() const {
        bpgwsp::GridConfig g;
        g.sample_sizes.clear();
        for (double n : parse_double_list(sample_sizes)) g.sample_sizes.push_back(static_cast<std::size_t>(n));
        g.adr_rates = parse_double_list(adr_rates);
        g.expected_times = parse_double_list(expected_times);
        g.beliefs.clear();
        for (const auto& b : parse_string_list(beliefs)) g.beliefs.push_back(bpgwsp::belief_from_string(b));
        g.families.clear();
        for (const auto& f : parse_string_list(families)) g.families.push_back(bpgwsp::family_from_string(f));
        g.censor_time = censor;
        g.background_rate = background_rate;
        g.rel_sd = rel_sd;
        g.repetitions = reps;
        return g;
    }
};

struct TestFlags {
    double rope_level = 0.80;
    double ci_level = 0.80;
    std::string ci_type = "hdi";
    int rule = 2;

    void add_to(CLI::App* cmd, ConfigBinder& binder) {
        cmd->add_option("--rope-level", rope_level, "ROPE credibility level");
        cmd->add_option("--ci-level", ci_level, "posterior CI credibility level");
        cmd->add_option("--ci-type", ci_type, "posterior CI type: eti|hdi");
        cmd->add_option("--rule", rule, "combination rule: 1|2|3");
        binder.bind("rope-level", [this](const json& v) { rope_level = v.get<double>(); });
        binder.bind("ci-level", [this](const json& v) { ci_level = v.get<double>(); });
        binder.bind("ci-type", [this](const json& v) { ci_type = v.get<std::string>(); });
        binder.bind("rule", [this](const json& v) { rule = v.get<int>(); });
    }

    bpgwsp::TestConfig resolve() const {
        if (rule < 1 || rule > 3) throw std::runtime_error("--rule must be 1, 2 or 3");
        return {rope_level, ci_level, bpgwsp::ci_type_from_string(ci_type),
                static_cast<bpgwsp::CombinationRule>(rule)};
    }
};

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Bayesian PgW shape-parameter signal detection"};
    app.require_subcommand(1);

    // simulate
    auto* sim = app.add_subcommand("simulate", "generate synthetic cohorts over a scenario grid");
    ConfigBinder sim_binder(sim);
    std::string sim_out, sim_config;
    std::uint64_t sim_seed = 0;
    GridFlags sim_grid;
    sim->add_option("--out", sim_out, "output directory")->required();
    sim->add_option("--config", sim_config, "JSON config file");
    sim->add_option("--seed", sim_seed, "master RNG seed");
    sim_grid.add_to(sim, sim_binder);
    sim_binder.bind("seed", [&](const json& v) { sim_seed = v.get<std::uint64_t>(); });
    sim_binder.bind("out", [&](const json& v) { sim_out = v.get<std::string>(); });

    // fit
    auto* fit = app.add_subcommand("fit", "sample the PgW posterior for one dataset");
    ConfigBinder fit_binder(fit);
    std::string fit_data, fit_out, fit_config;
    double fit_censor = 0.0;
    int fit_workers = 1;
    PriorFlags fit_prior;
    McmcFlags fit_mcmc;
    fit->add_option("--data", fit_data, "input CSV (time,event)")->required();
    fit->add_option("--out", fit_out, "output directory")->required();
    fit->add_option("--config", fit_config, "JSON config file");
    fit->add_option("--censor", fit_censor, "censoring time (default: inferred from data)");
    fit->add_option("--workers", fit_workers, "parallel chains");
    fit_prior.add_to(fit, fit_binder);
    fit_mcmc.add_to(fit, fit_binder);
    fit_binder.bind("censor", [&](const json& v) { fit_censor = v.get<double>(); });
    fit_binder.bind("workers", [&](const json& v) { fit_workers = v.get<int>(); });

    // test
    auto* tst = app.add_subcommand("test", "run the BPgWSP signal detection test on one dataset");
    ConfigBinder tst_binder(tst);
    std::string tst_data, tst_out, tst_config;
    double tst_censor = 0.0;
    int tst_workers = 1;
    PriorFlags tst_prior;
    McmcFlags tst_mcmc;
    TestFlags tst_test;
    tst->add_option("--data", tst_data, "input CSV (time,event)")->required();
    tst->add_option("--out", tst_out, "output directory")->required();
    tst->add_option("--config", tst_config, "JSON config file");
    tst->add_option("--censor", tst_censor, "censoring time (default: inferred from data)");
    tst->add_option("--workers", tst_workers, "parallel chains");
    tst_prior.add_to(tst, tst_binder);
    tst_mcmc.add_to(tst, tst_binder);
    tst_test.add_to(tst, tst_binder);
    tst_binder.bind("censor", [&](const json& v) { tst_censor = v.get<double>(); });
    tst_binder.bind("workers", [&](const json& v) { tst_workers = v.get<int>(); });

    // tune
    auto* tun = app.add_subcommand("tune", "run the simulation sweep and rank test configurations");
    ConfigBinder tun_binder(tun);
    std::string tun_out, tun_config, tun_rope_levels, tun_ci_levels;
    int tun_workers = 1;
    bool tun_require_ess = false;
    double tun_prior_sd = 10.0, tun_null_sd = 10.0;
    bool tun_paper_literal = false;
    GridFlags tun_grid;
    McmcFlags tun_mcmc;
    tun_mcmc.s.iters_per_chain = 10000;
    tun->add_option("--out", tun_out, "output directory")->required();
    tun->add_option("--config", tun_config, "JSON config file");
    tun->add_option("--workers", tun_workers, "parallel (setting, rep) fits");
    tun->add_option("--rope-levels", tun_rope_levels, "ROPE levels (default 0.50..0.95 step 0.05)");
    tun->add_option("--ci-levels", tun_ci_levels, "CI levels (default 0.50..0.95 step 0.05)");
    tun->add_flag("--require-ess", tun_require_ess, "exclude decisions with ESS < 10000 from reports");
    tun->add_option("--prior-sd", tun_prior_sd, "prior sd for non-fixed parameters");
    tun->add_option("--null-sd", tun_null_sd, "sd of the mean-1 null prior used for the ROPE");
    tun->add_flag("--paper-literal-lognormal", tun_paper_literal,
                  "use the literal lognormal-mu equation (no 1/2 factor)");
    tun_grid.add_to(tun, tun_binder);
    tun_mcmc.add_to(tun, tun_binder);
    tun_binder.bind("out", [&](const json& v) { tun_out = v.get<std::string>(); });
    tun_binder.bind("workers", [&](const json& v) { tun_workers = v.get<int>(); });
    tun_binder.bind("rope-levels", [&](const json& v) {
        std::string s;
        for (const auto& x : v) s += (s.empty() ? "" : ",") + bpgwsp::format_double(x.get<double>());
        tun_rope_levels = s;
    });
    tun_binder.bind("ci-levels", [&](const json& v) {
        std::string s;
        for (const auto& x : v) s += (s.empty() ? "" : ",") + bpgwsp::format_double(x.get<double>());
        tun_ci_levels = s;
    });
    tun_binder.bind("require-ess", [&](const json& v) { tun_require_ess = v.get<bool>(); });
    tun_binder.bind("prior-sd", [&](const json& v) { tun_prior_sd = v.get<double>(); });
    tun_binder.bind("null-sd", [&](const json& v) { tun_null_sd = v.get<double>(); });
    tun_binder.bind("paper-literal-lognormal", [&](const json& v) { tun_paper_literal = v.get<bool>(); });

    // report
    auto* rep = app.add_subcommand("report", "render tuning artifacts or a decision JSON as text");
    std::string rep_in;
    rep->add_option("path", rep_in, "tuning output directory or decision.json")->required();

    // replay
    auto* rpl = app.add_subcommand("replay", "re-execute a captured run.json");
    std::string rpl_path, rpl_out;
    rpl->add_option("run_json", rpl_path, "path to run.json")->required();
    rpl->add_option("--out", rpl_out, "override output directory");

    CLI11_PARSE(app, argc, argv);

    try {
        if (sim->parsed()) {
            sim_binder.apply(sim_config);
            bpgwsp::cli::SimulateConfig cfg;
            cfg.out_dir = sim_out;
            cfg.seed = sim_seed;
            cfg.grid = sim_grid.resolve();
            bpgwsp::cli::run_simulate(cfg);
        } else if (fit->parsed()) {
            fit_binder.apply(fit_config);
            bpgwsp::cli::FitConfig cfg;
            cfg.data_path = fit_data;
            cfg.out_dir = fit_out;
            cfg.censor = fit_censor;
            cfg.prior = fit_prior.resolve();
            cfg.mcmc = fit_mcmc.s;
            cfg.workers = fit_workers;
            bpgwsp::cli::run_fit(cfg);
        } else if (tst->parsed()) {
            tst_binder.apply(tst_config);
            bpgwsp::cli::TestCmdConfig cfg;
            cfg.data_path = tst_data;
            cfg.out_dir = tst_out;
            cfg.censor = tst_censor;
            cfg.prior = tst_prior.resolve();
            cfg.mcmc = tst_mcmc.s;
            cfg.test = tst_test.resolve();
            cfg.workers = tst_workers;
            const auto result = bpgwsp::cli::run_test_cmd(cfg);
            std::cout << (result.decision.signal ? "SIGNAL" : "no signal") << "\n";
        } else if (tun->parsed()) {
            tun_binder.apply(tun_config);
            bpgwsp::cli::TuneConfig cfg;
            cfg.out_dir = tun_out;
            cfg.seed = tun_mcmc.s.seed;
            cfg.grid = tun_grid.resolve();
            cfg.mcmc = tun_mcmc.s;
            cfg.prior_sd = tun_prior_sd;
            cfg.null_sd = tun_null_sd;
            cfg.paper_literal_lognormal = tun_paper_literal;
            cfg.rope_levels = parse_double_list(tun_rope_levels);
            cfg.ci_levels = parse_double_list(tun_ci_levels);
            cfg.require_ess = tun_require_ess;
            cfg.workers = tun_workers;
            bpgwsp::cli::run_tune(cfg);
        } else if (rep->parsed()) {
            std::cout << bpgwsp::cli::run_report(rep_in);
        } else if (rpl->parsed()) {
            bpgwsp::cli::run_replay(rpl_path, rpl_out);
        }
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
