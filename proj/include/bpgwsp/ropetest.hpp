#pragma once

#include <algorithm>
#include <cmath>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "bpgwsp/mcmc.hpp"
#include "bpgwsp/prior.hpp"

// Decision layer: ROPE construction from the null prior, ETI/HDI credibility
// intervals from posterior draws, per-parameter three-valued outcomes, and
// the combination rules mapping them to a signal.

namespace bpgwsp {

struct Interval {
    double lo = 0.0;
    double hi = 0.0;
};

inline double width(const Interval& iv) { return iv.hi - iv.lo; }

enum class CiType { eti, hdi };
enum class CombinationRule { option1 = 1, option2 = 2, option3 = 3 };
enum class InterimOutcome { accepted, rejected, undecided };

inline const char* to_string(CiType t) { return t == CiType::eti ? "eti" : "hdi"; }
inline const char* to_string(CombinationRule r) {
    switch (r) {
        case CombinationRule::option1: return "option1";
        case CombinationRule::option2: return "option2";
        case CombinationRule::option3: return "option3";
    }
    return "?";
}
inline const char* to_string(InterimOutcome o) {
    switch (o) {
        case InterimOutcome::accepted: return "accepted";
        case InterimOutcome::rejected: return "rejected";
        case InterimOutcome::undecided: return "undecided";
    }
    return "?";
}

struct TestConfig {
    double rope_level = 0.80;
    double ci_level = 0.80;
    CiType ci_type = CiType::hdi;
    CombinationRule rule = CombinationRule::option2;
};

// The recommended default: 80% ETI ROPE, 80% HDI, option 2.
inline TestConfig recommended_config() { return TestConfig{}; }

// ROPE for one shape parameter: central prior interval of mass `level` under
// the null prior (mean 1).
inline Interval rope_interval(const PriorEntry& null_entry, double level, bool literal = false) {
    if (null_entry.family == PriorFamily1d::fixed)
        throw std::invalid_argument("rope_interval: entry must not be fixed");
    if (null_entry.mean != 1.0)
        throw std::invalid_argument("rope_interval: null prior entry must have mean 1");
    if (!(level > 0.0 && level < 1.0))
        throw std::invalid_argument("rope_interval: level must be in (0,1)");
    return {prior_quantile(null_entry, (1.0 - level) / 2.0, literal),
            prior_quantile(null_entry, (1.0 + level) / 2.0, literal)};
}

namespace detail {

// Linear-interpolation empirical quantile on a sorted sample (R type 7).
inline double sorted_quantile(const std::vector<double>& sorted, double p) {
    const double h = (static_cast<double>(sorted.size()) - 1.0) * p;
    const std::size_t lo = static_cast<std::size_t>(std::floor(h));
    const std::size_t hi = std::min(lo + 1, sorted.size() - 1);
    return sorted[lo] + (h - static_cast<double>(lo)) * (sorted[hi] - sorted[lo]);
}

}  // namespace detail

// Equal-tailed interval from empirical quantiles at (1-a)/2 and (1+a)/2.
inline Interval eti(std::span<const double> samples, double level) {
    if (samples.size() < 100) throw std::invalid_argument("eti: need >= 100 samples");
    if (!(level > 0.0 && level < 1.0)) throw std::invalid_argument("eti: level must be in (0,1)");
    std::vector<double> s(samples.begin(), samples.end());
    std::sort(s.begin(), s.end());
    return {detail::sorted_quantile(s, (1.0 - level) / 2.0),
            detail::sorted_quantile(s, (1.0 + level) / 2.0)};
}

// Highest-density interval: the shortest window of ceil(level*n) consecutive
// order statistics; ties go to the leftmost window.
inline Interval hdi(std::span<const double> samples, double level) {
    if (samples.size() < 100) throw std::invalid_argument("hdi: need >= 100 samples");
    if (!(level > 0.0 && level < 1.0)) throw std::invalid_argument("hdi: level must be in (0,1)");
    std::vector<double> s(samples.begin(), samples.end());
    std::sort(s.begin(), s.end());
    const std::size_t n = s.size();
    const std::size_t m = static_cast<std::size_t>(std::ceil(level * static_cast<double>(n)));
    std::size_t best = 0;
    double best_width = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i + m <= n; ++i) {
        const double w = s[i + m - 1] - s[i];
        if (w < best_width) {
            best_width = w;
            best = i;
        }
    }
    return {s[best], s[best + m - 1]};
}

// Closed-interval containment/overlap; touching boundaries count as overlap.
inline InterimOutcome single_outcome(const Interval& ci, const Interval& rope) {
    if (ci.lo > ci.hi || rope.lo > rope.hi)
        throw std::invalid_argument("single_outcome: malformed interval");
    if (ci.lo >= rope.lo && ci.hi <= rope.hi) return InterimOutcome::accepted;
    if (ci.hi < rope.lo || ci.lo > rope.hi) return InterimOutcome::rejected;
    return InterimOutcome::undecided;
}

// Combination rules for the two shape-parameter outcomes:
//   option 1: signal unless the interim results can all be read as "no
//             departure" -- i.e. signal iff any rejection or both undecided;
//   option 2: signal iff one rejection with the other rejected or undecided;
//   option 3: signal iff both rejected.
inline bool combine(InterimOutcome o_nu, InterimOutcome o_gamma, CombinationRule rule) {
    const auto rej = InterimOutcome::rejected;
    const auto und = InterimOutcome::undecided;
    switch (rule) {
        case CombinationRule::option1:
            return o_nu == rej || o_gamma == rej || (o_nu == und && o_gamma == und);
        case CombinationRule::option2:
            return (o_nu == rej && o_gamma != InterimOutcome::accepted) ||
                   (o_gamma == rej && o_nu != InterimOutcome::accepted);
        case CombinationRule::option3:
            return o_nu == rej && o_gamma == rej;
    }
    return false;
}

struct TestDecision {
    InterimOutcome outcome_nu = InterimOutcome::undecided;
    InterimOutcome outcome_gamma = InterimOutcome::undecided;
    bool signal = false;
    Interval rope_nu, rope_gamma, ci_nu, ci_gamma;
    TestConfig config;
    std::vector<std::string> warnings;
};

struct TestResult {
    TestDecision decision;
    PosteriorDraws draws;
};

constexpr double kEssRecommended = 10000.0;

// Builds CIs from existing posterior draws and ROPEs from the null prior's
// shape entries, then applies the per-parameter test and combination rule.
inline TestDecision decide(const PosteriorDraws& draws, const PriorSpec& null_spec,
                           const TestConfig& config) {
    validate(null_spec);
    const int c_nu = draws.column_index("nu");
    const int c_gamma = draws.column_index("gamma");
    if (c_nu < 0 || c_gamma < 0)
        throw std::invalid_argument("decide: posterior draws must contain nu and gamma columns");

    TestDecision d;
    d.config = config;
    d.rope_nu = rope_interval(null_spec.nu, config.rope_level, null_spec.paper_literal_lognormal);
    d.rope_gamma = rope_interval(null_spec.gamma, config.rope_level, null_spec.paper_literal_lognormal);

    const auto col_nu = draws.column(static_cast<std::size_t>(c_nu));
    const auto col_gamma = draws.column(static_cast<std::size_t>(c_gamma));
    auto ci_of = [&](const std::vector<double>& col) {
        return config.ci_type == CiType::eti ? eti(col, config.ci_level) : hdi(col, config.ci_level);
    };
    d.ci_nu = ci_of(col_nu);
    d.ci_gamma = ci_of(col_gamma);
    d.outcome_nu = single_outcome(d.ci_nu, d.rope_nu);
    d.outcome_gamma = single_outcome(d.ci_gamma, d.rope_gamma);
    d.signal = combine(d.outcome_nu, d.outcome_gamma, config.rule);

    for (const auto* name : {"nu", "gamma"}) {
        const int c = draws.column_index(name);
        if (draws.ess[static_cast<std::size_t>(c)] < kEssRecommended)
            d.warnings.push_back(std::string("ess(") + name + ") = " +
                                 std::to_string(draws.ess[static_cast<std::size_t>(c)]) +
                                 " below recommended 10000");
        if (draws.rhat[static_cast<std::size_t>(c)] > 1.1)
            d.warnings.push_back(std::string("rhat(") + name + ") = " +
                                 std::to_string(draws.rhat[static_cast<std::size_t>(c)]) +
                                 " above 1.1: chains may not have mixed");
    }
    return d;
}

// End-to-end: fit the posterior, then apply the HDI/ETI + ROPE decision.
inline TestResult run_test(const TteDataset& data, const PriorSpec& spec, const PriorSpec& null_spec,
                           const McmcSettings& settings, const TestConfig& config, int workers = 1) {
    validate(spec);
    if (spec.nu.family == PriorFamily1d::fixed || spec.gamma.family == PriorFamily1d::fixed)
        throw std::invalid_argument("run_test: shape priors must not be fixed");
    TestResult r;
    r.draws = run_chains(data, spec, settings, workers);
    r.decision = decide(r.draws, null_spec, config);
    return r;
}

}  // namespace bpgwsp
