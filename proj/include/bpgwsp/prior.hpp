#pragma once

#include <array>
#include <cmath>
#include <stdexcept>
#include <string>
#include <vector>

#include <boost/math/distributions/gamma.hpp>
#include <boost/math/distributions/lognormal.hpp>

#include "bpgwsp/pgw.hpp"

// Prior specification for (theta, nu, gamma): lognormal / gamma / fixed
// families, belief-dependent prior-mean presets, and moment-matched
// hyperparameters.

namespace bpgwsp {

enum class PriorFamily1d { lognormal, gamma, fixed };

enum class PriorFamily { fix_log_log, log_log_log, fix_gam_gam, gam_gam_gam };

enum class Belief { none, q1, q2, q3 };

inline const char* to_string(PriorFamily f) {
    switch (f) {
        case PriorFamily::fix_log_log: return "fix-log-log";
        case PriorFamily::log_log_log: return "log-log-log";
        case PriorFamily::fix_gam_gam: return "fix-gam-gam";
        case PriorFamily::gam_gam_gam: return "gam-gam-gam";
    }
    return "?";
}

inline const char* to_string(Belief b) {
    switch (b) {
        case Belief::none: return "none";
        case Belief::q1: return "q1";
        case Belief::q2: return "q2";
        case Belief::q3: return "q3";
    }
    return "?";
}

// Quarter index of a belief: none -> 0, q1..q3 -> 1..3.
inline int quarter_of(Belief b) { return static_cast<int>(b); }

struct PriorEntry {
    PriorFamily1d family = PriorFamily1d::lognormal;
    double mean = 1.0;
    double sd = 10.0;  // ignored when fixed
};

struct PriorSpec {
    PriorEntry theta, nu, gamma;
    bool paper_literal_lognormal = false;
};

inline void validate(const PriorSpec& s) {
    auto check = [](const PriorEntry& e, const char* name, bool may_fix) {
        if (!(e.mean > 0.0)) throw std::invalid_argument(std::string("PriorSpec: ") + name + " mean must be > 0");
        if (e.family != PriorFamily1d::fixed && !(e.sd > 0.0))
            throw std::invalid_argument(std::string("PriorSpec: ") + name + " sd must be > 0");
        if (e.family == PriorFamily1d::fixed && !may_fix)
            throw std::invalid_argument(std::string("PriorSpec: only theta may be fixed, got fixed ") + name);
    };
    check(s.theta, "theta", true);
    check(s.nu, "nu", false);
    check(s.gamma, "gamma", false);
    if (s.nu.family != s.gamma.family)
        throw std::invalid_argument("PriorSpec: nu and gamma must share the same family");
}

// Lognormal hyperparameters with the requested mean and sd. Standard matching
// gives the exact moments; the literal variant drops the 1/2 factor in mu
// (mu = log(mean) - log(sd^2/mean^2 + 1)) to reproduce an alternative
// published parameterization.
inline std::pair<double, double> lognormal_meta_from_moments(double mean, double sd,
                                                             bool literal = false) {
    if (!(mean > 0.0) || !(sd > 0.0))
        throw std::invalid_argument("lognormal_meta_from_moments: mean and sd must be > 0");
    const double v = std::log1p((sd * sd) / (mean * mean));  // log(sd^2/mean^2 + 1)
    const double sigma = std::sqrt(v);
    const double mu = literal ? std::log(mean) - v : std::log(mean) - 0.5 * v;
    return {mu, sigma};
}

// Gamma(shape, rate) with the requested mean and sd.
inline std::pair<double, double> gamma_meta_from_moments(double mean, double sd) {
    if (!(mean > 0.0) || !(sd > 0.0))
        throw std::invalid_argument("gamma_meta_from_moments: mean and sd must be > 0");
    return {mean * mean / (sd * sd), mean / (sd * sd)};
}

namespace detail {

inline double lognormal_logpdf(double x, double mu, double sigma) {
    const double z = (std::log(x) - mu) / sigma;
    return -std::log(x) - std::log(sigma) - 0.5 * std::log(2.0 * M_PI) - 0.5 * z * z;
}

inline double gamma_logpdf(double x, double shape, double rate) {
    return shape * std::log(rate) - std::lgamma(shape) + (shape - 1.0) * std::log(x) - rate * x;
}

inline double entry_logpdf(const PriorEntry& e, double x, bool literal, const char* name) {
    switch (e.family) {
        case PriorFamily1d::lognormal: {
            auto [mu, sigma] = lognormal_meta_from_moments(e.mean, e.sd, literal);
            return lognormal_logpdf(x, mu, sigma);
        }
        case PriorFamily1d::gamma: {
            auto [shape, rate] = gamma_meta_from_moments(e.mean, e.sd);
            return gamma_logpdf(x, shape, rate);
        }
        case PriorFamily1d::fixed:
            if (x != e.mean)
                throw std::invalid_argument(std::string("prior_log_density: fixed ") + name +
                                            " must equal its preset mean");
            return 0.0;
    }
    return 0.0;
}

}  // namespace detail

// Sum of independent univariate log-densities; fixed parameters contribute 0
// but must sit exactly at their preset mean.
inline double prior_log_density(const PriorSpec& spec, const PgwParams& p) {
    validate(spec);
    validate(p);
    const bool lit = spec.paper_literal_lognormal;
    return detail::entry_logpdf(spec.theta, p.theta, lit, "theta") +
           detail::entry_logpdf(spec.nu, p.nu, lit, "nu") +
           detail::entry_logpdf(spec.gamma, p.gamma, lit, "gamma");
}

enum class ParamName { theta, nu, gamma };

inline const PriorEntry& entry_of(const PriorSpec& s, ParamName which) {
    switch (which) {
        case ParamName::theta: return s.theta;
        case ParamName::nu: return s.nu;
        case ParamName::gamma: return s.gamma;
    }
    return s.theta;
}

inline double prior_quantile(const PriorEntry& e, double prob, bool literal = false) {
    if (!(prob > 0.0 && prob < 1.0))
        throw std::invalid_argument("prior_quantile: prob must be in (0,1)");
    switch (e.family) {
        case PriorFamily1d::lognormal: {
            auto [mu, sigma] = lognormal_meta_from_moments(e.mean, e.sd, literal);
            return boost::math::quantile(boost::math::lognormal_distribution<>(mu, sigma), prob);
        }
        case PriorFamily1d::gamma: {
            auto [shape, rate] = gamma_meta_from_moments(e.mean, e.sd);
            return boost::math::quantile(boost::math::gamma_distribution<>(shape, 1.0 / rate), prob);
        }
        case PriorFamily1d::fixed:
            throw std::invalid_argument("prior_quantile: parameter is fixed");
    }
    return 0.0;
}

inline double prior_quantile(const PriorSpec& spec, ParamName which, double prob) {
    return prior_quantile(entry_of(spec, which), prob, spec.paper_literal_lognormal);
}

// Prior-mean presets per belief about the expected event time, shipped for
// the three supported observation horizons.
struct BeliefPreset {
    Belief belief;
    double horizon;        // days
    double expected_time;  // days; 0 for belief none
    std::array<double, 3> means;  // (theta, nu, gamma)
};

inline std::vector<BeliefPreset> builtin_presets() {
    return {
        {Belief::none, 365.0, 0.0, {1.0, 1.0, 1.0}},
        {Belief::q1, 365.0, 91.0, {1.0, 0.207, 1.0}},
        {Belief::q2, 365.0, 183.0, {20.0, 5.5, 14.0}},
        {Belief::q3, 365.0, 274.0, {300.0, 4.0, 1.0}},
        {Belief::none, 21.0, 0.0, {1.0, 1.0, 1.0}},
        {Belief::q1, 21.0, 5.25, {2.5, 0.5, 1.0}},
        {Belief::q2, 21.0, 10.5, {3.0, 3.0, 5.0}},
        {Belief::q3, 21.0, 15.75, {18.0, 5.0, 1.0}},
        {Belief::none, 1095.0, 0.0, {1.0, 1.0, 1.0}},
        {Belief::q1, 1095.0, 274.0, {200.0, 0.63, 1.0}},
        {Belief::q2, 1095.0, 548.0, {30.0, 3.2, 10.0}},
        {Belief::q3, 1095.0, 821.0, {700.0, 14.0, 4.0}},
    };
}

inline BeliefPreset find_preset(Belief belief, double horizon) {
    for (const auto& p : builtin_presets())
        if (p.belief == belief && p.horizon == horizon) return p;
    throw std::invalid_argument(std::string("no built-in preset for belief=") + to_string(belief) +
                                " at horizon " + std::to_string(horizon) +
                                " (shipped horizons: 21, 365, 1095)");
}

// Assembles the full prior from a family abbreviation, mean triple and sd.
inline PriorSpec make_prior_spec(PriorFamily family, const std::array<double, 3>& means,
                                 double sd = 10.0, bool paper_literal = false) {
    const bool fix_theta = family == PriorFamily::fix_log_log || family == PriorFamily::fix_gam_gam;
    const bool lognormal = family == PriorFamily::fix_log_log || family == PriorFamily::log_log_log;
    const PriorFamily1d shape_fam = lognormal ? PriorFamily1d::lognormal : PriorFamily1d::gamma;
    PriorSpec s;
    s.theta = {fix_theta ? PriorFamily1d::fixed : shape_fam, means[0], sd};
    s.nu = {shape_fam, means[1], sd};
    s.gamma = {shape_fam, means[2], sd};
    s.paper_literal_lognormal = paper_literal;
    validate(s);
    return s;
}

inline PgwParams prior_means(const PriorSpec& s) {
    return {s.theta.mean, s.nu.mean, s.gamma.mean};
}

}  // namespace bpgwsp
