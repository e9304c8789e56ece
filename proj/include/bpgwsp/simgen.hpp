#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

#include "bpgwsp/pgw.hpp"
#include "bpgwsp/prior.hpp"
#include "bpgwsp/rng.hpp"

// Scenario-grid construction and synthetic cohort generation: binomial event
// counts, uniform background event times, normal ADR event times, and
// censoring fill-up to the target sample size.

namespace bpgwsp {

struct ScenarioSpec {
    std::size_t n = 0;
    double censor_time = 365.0;
    double background_rate = 0.1;
    double adr_rate = 0.0;        // fraction of the background rate
    double expected_time = 0.0;   // required iff adr_rate > 0
    double rel_sd = 0.05;         // ADR time sd as a fraction of censor_time
};

inline void validate(const ScenarioSpec& s) {
    if (s.n < 1) throw std::invalid_argument("ScenarioSpec: n must be >= 1");
    if (!(s.censor_time > 0.0)) throw std::invalid_argument("ScenarioSpec: censor_time must be > 0");
    if (!(s.background_rate > 0.0 && s.background_rate < 1.0))
        throw std::invalid_argument("ScenarioSpec: background_rate must be in (0,1)");
    if (s.adr_rate < 0.0 || s.adr_rate > 1.0)
        throw std::invalid_argument("ScenarioSpec: adr_rate must be in [0,1]");
    if (s.adr_rate > 0.0) {
        if (!(s.expected_time > 0.0) || !(s.expected_time < s.censor_time))
            throw std::invalid_argument("ScenarioSpec: expected_time must lie in (0, censor_time)");
        if (!(s.rel_sd > 0.0)) throw std::invalid_argument("ScenarioSpec: rel_sd must be > 0");
    }
}

struct GeneratedSample {
    TteDataset data;
    std::vector<std::string> warnings;
};

// One synthetic cohort: n_br ~ Bin(N, br) background events on Uniform(1, T],
// n_adr ~ Bin(N, br*adr) ADR events on Normal(E[t], rel_sd*T) resampled into
// (0, T], remainder censored at T. Deterministic given seed.
inline GeneratedSample generate_sample(const ScenarioSpec& s, std::uint64_t seed) {
    validate(s);
    GeneratedSample out;
    auto rng = make_rng(seed);

    std::binomial_distribution<std::size_t> bin_br(s.n, s.background_rate);
    std::size_t n_br = bin_br(rng);
    std::size_t n_adr = 0;
    if (s.adr_rate > 0.0) {
        std::binomial_distribution<std::size_t> bin_adr(s.n, s.background_rate * s.adr_rate);
        n_adr = bin_adr(rng);
    }
    if (n_br + n_adr > s.n) {
        const std::size_t keep = s.n - std::min(s.n, n_br);
        out.warnings.push_back("event counts exceed N (" + std::to_string(n_br) + "+" +
                               std::to_string(n_adr) + " > " + std::to_string(s.n) +
                               "); ADR events truncated to " + std::to_string(keep));
        n_adr = keep;
    }

    auto& d = out.data;
    d.censor_time = s.censor_time;
    d.times.reserve(s.n);
    d.events.reserve(s.n);

    std::uniform_real_distribution<double> unif(1.0, s.censor_time);
    for (std::size_t i = 0; i < n_br; ++i) {
        d.times.push_back(unif(rng));
        d.events.push_back(1);
    }
    if (n_adr > 0) {
        std::normal_distribution<double> norm(s.expected_time, s.rel_sd * s.censor_time);
        for (std::size_t i = 0; i < n_adr; ++i) {
            double t = norm(rng);
            while (!(t > 0.0 && t <= s.censor_time)) t = norm(rng);
            d.times.push_back(t);
            d.events.push_back(1);
        }
    }
    for (std::size_t i = n_br + n_adr; i < s.n; ++i) {
        d.times.push_back(s.censor_time);
        d.events.push_back(0);
    }
    validate(d);
    return out;
}

// One grid cell: a data scenario paired with the prior used to analyze it.
struct GridSetting {
    int index = 0;
    ScenarioSpec scenario;
    Belief belief = Belief::none;
    PriorFamily family = PriorFamily::log_log_log;
};

struct GridConfig {
    std::vector<std::size_t> sample_sizes{500, 3000, 5000};
    std::vector<double> adr_rates{0.5, 1.0};          // positive levels; controls added separately
    std::vector<double> expected_times{91.0, 183.0, 274.0};
    std::vector<Belief> beliefs{Belief::none, Belief::q1, Belief::q2, Belief::q3};
    std::vector<PriorFamily> families{PriorFamily::fix_log_log, PriorFamily::log_log_log,
                                      PriorFamily::fix_gam_gam, PriorFamily::gam_gam_gam};
    double censor_time = 365.0;
    double background_rate = 0.1;
    double rel_sd = 0.05;
    int repetitions = 100;
};

struct ScenarioGrid {
    std::vector<GridSetting> settings;
    int repetitions = 0;

    std::size_t adr_count() const {
        std::size_t c = 0;
        for (const auto& s : settings) c += s.scenario.adr_rate > 0.0;
        return c;
    }
    std::size_t control_count() const { return settings.size() - adr_count(); }
};

// Cartesian product of scenario levels x beliefs x families, plus the
// adr_rate = 0 controls. Defaults: 3*2*3*16 + 3*16 = 288 + 48 = 336.
inline ScenarioGrid build_grid(const GridConfig& cfg) {
    if (cfg.sample_sizes.empty() || cfg.adr_rates.empty() || cfg.expected_times.empty() ||
        cfg.beliefs.empty() || cfg.families.empty())
        throw std::invalid_argument("build_grid: all level lists must be non-empty");
    ScenarioGrid grid;
    grid.repetitions = cfg.repetitions;
    int idx = 0;
    auto add = [&](std::size_t n, double adr, double et) {
        for (Belief b : cfg.beliefs)
            for (PriorFamily f : cfg.families) {
                ScenarioSpec s;
                s.n = n;
                s.censor_time = cfg.censor_time;
                s.background_rate = cfg.background_rate;
                s.adr_rate = adr;
                s.expected_time = et;
                s.rel_sd = cfg.rel_sd;
                validate(s);
                grid.settings.push_back({idx++, s, b, f});
            }
    };
    for (std::size_t n : cfg.sample_sizes)
        for (double adr : cfg.adr_rates) {
            if (!(adr > 0.0)) throw std::invalid_argument("build_grid: adr_rates must be positive levels");
            for (double et : cfg.expected_times) add(n, adr, et);
        }
    for (std::size_t n : cfg.sample_sizes) add(n, 0.0, 0.0);
    return grid;
}

// True event-time quarter of a setting: 1..3 for ADR scenarios, 0 for controls.
inline int true_quarter(const GridSetting& s) {
    if (!(s.scenario.adr_rate > 0.0)) return 0;
    const double q = s.scenario.expected_time / (s.scenario.censor_time / 4.0);
    return static_cast<int>(std::lround(q));
}

}  // namespace bpgwsp
