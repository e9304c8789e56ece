#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <map>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

#include "bpgwsp/rng.hpp"

// Power generalized Weibull distribution: survival, hazard, density,
// quantile, sampling, and censored log-likelihood. All evaluation is done in
// log space so that scale parameters up to ~700 and shapes up to ~14 stay
// inside double range.

namespace bpgwsp {

struct PgwParams {
    double theta = 1.0;  // scale (time units)
    double nu = 1.0;     // shape
    double gamma = 1.0;  // power shape
};

inline void validate(const PgwParams& p) {
    auto check = [](double v, const char* name) {
        if (!(v > 0.0) || !std::isfinite(v))
            throw std::invalid_argument(std::string("PgwParams: ") + name +
                                        " must be strictly positive and finite");
    };
    check(p.theta, "theta");
    check(p.nu, "nu");
    check(p.gamma, "gamma");
}

// Right-censored time-to-event sample.
struct TteDataset {
    std::vector<double> times;
    std::vector<std::uint8_t> events;  // 1 = event observed, 0 = censored
    double censor_time = 0.0;
};

inline void validate(const TteDataset& d) {
    if (d.times.empty() || d.times.size() != d.events.size())
        throw std::invalid_argument("TteDataset: times/events must be non-empty and equal length");
    if (!(d.censor_time > 0.0))
        throw std::invalid_argument("TteDataset: censor_time must be positive");
    for (std::size_t i = 0; i < d.times.size(); ++i) {
        if (!(d.times[i] > 0.0) || d.times[i] > d.censor_time)
            throw std::invalid_argument("TteDataset: time at record " + std::to_string(i) +
                                        " outside (0, censor_time]");
        if (d.events[i] > 1)
            throw std::invalid_argument("TteDataset: event flag at record " + std::to_string(i) +
                                        " not in {0,1}");
    }
}

namespace detail {

// log(1 + e^a), stable for large |a|.
inline double softplus(double a) {
    if (a > 0.0) return a + std::log1p(std::exp(-a));
    return std::log1p(std::exp(a));
}

// log1p((t/theta)^nu) = log(1 + e^a) with a = nu*(log t - log theta).
inline double log1p_pow(double t, const PgwParams& p) {
    const double a = p.nu * (std::log(t) - std::log(p.theta));
    return softplus(a);
}

}  // namespace detail

// log S(t) = 1 - [1 + (t/theta)^nu]^(1/gamma)
inline double log_survival(double t, const PgwParams& p) {
    validate(p);
    if (!(t >= 0.0)) throw std::invalid_argument("log_survival: t must be >= 0");
    if (t == 0.0) return 0.0;
    // 1 - exp(y) via expm1: exact when the exponent y is tiny
    const double ls = -std::expm1(detail::log1p_pow(t, p) / p.gamma);
    if (!std::isfinite(ls))
        throw std::domain_error("survival overflow: exponent (1/gamma)*log1p((t/theta)^nu) too large (gamma=" +
                                std::to_string(p.gamma) + ", nu=" + std::to_string(p.nu) +
                                ", theta=" + std::to_string(p.theta) + ")");
    return ls;
}

inline double survival(double t, const PgwParams& p) {
    return std::exp(log_survival(t, p));
}

// log h(t) = log nu - log gamma - nu log theta + (nu-1) log t
//          + (1/gamma - 1) log[1 + (t/theta)^nu]
inline double log_hazard(double t, const PgwParams& p) {
    validate(p);
    if (!(t > 0.0)) throw std::invalid_argument("log_hazard: t must be > 0");
    const double lh = std::log(p.nu) - std::log(p.gamma) - p.nu * std::log(p.theta) +
                      (p.nu - 1.0) * std::log(t) +
                      (1.0 / p.gamma - 1.0) * detail::log1p_pow(t, p);
    if (!std::isfinite(lh))
        throw std::domain_error("hazard overflow at t=" + std::to_string(t) +
                                " (theta=" + std::to_string(p.theta) + ", nu=" + std::to_string(p.nu) +
                                ", gamma=" + std::to_string(p.gamma) + ")");
    return lh;
}

inline double hazard(double t, const PgwParams& p) {
    return std::exp(log_hazard(t, p));
}

// f(t) = S(t) * h(t)
inline double log_density(double t, const PgwParams& p) {
    return log_survival(t, p) + log_hazard(t, p);
}

inline double density(double t, const PgwParams& p) {
    return std::exp(log_density(t, p));
}

// Closed-form inversion of the survival function:
//   t = theta * [(1 - ln u)^gamma - 1]^(1/nu)
inline double quantile(double u, const PgwParams& p) {
    validate(p);
    if (!(u > 0.0 && u < 1.0)) throw std::invalid_argument("quantile: u must be in (0,1)");
    // (1 - ln u)^gamma - 1 = expm1(gamma * log1p(-ln u))
    const double inner = std::expm1(p.gamma * std::log1p(-std::log(u)));
    return p.theta * std::exp(std::log(inner) / p.nu);
}

// n i.i.d. inverse-CDF draws; deterministic given the caller's RNG state.
inline std::vector<double> sample_pgw(std::size_t n, const PgwParams& p, std::mt19937_64& rng) {
    validate(p);
    if (n < 1) throw std::invalid_argument("sample_pgw: n must be >= 1");
    std::vector<double> out(n);
    for (auto& t : out) t = quantile(uniform01_open(rng), p);
    return out;
}

// Censored log-likelihood: sum_i (1-d_i) log S(t_i) + d_i log f(t_i).
inline double log_likelihood(const TteDataset& data, const PgwParams& p) {
    validate(data);
    double ll = 0.0;
    for (std::size_t i = 0; i < data.times.size(); ++i) {
        const double ls = log_survival(data.times[i], p);
        ll += data.events[i] ? ls + log_hazard(data.times[i], p) : ls;
    }
    return ll;
}

// Likelihood evaluator with identical observation times aggregated; simulated
// cohorts censor every non-event at the same horizon, so this collapses the
// censored block to one term. Used by the MCMC hot loop.
class PgwLikelihood {
public:
    explicit PgwLikelihood(const TteDataset& data) {
        validate(data);
        std::map<double, std::pair<std::size_t, std::size_t>> agg;  // t -> (n_event, n_censor)
        for (std::size_t i = 0; i < data.times.size(); ++i) {
            auto& c = agg[data.times[i]];
            if (data.events[i]) ++c.first; else ++c.second;
        }
        for (const auto& [t, c] : agg) {
            times_.push_back(t);
            log_times_.push_back(std::log(t));
            n_event_.push_back(static_cast<double>(c.first));
            n_total_.push_back(static_cast<double>(c.first + c.second));
        }
    }

    double operator()(const PgwParams& p) const {
        const double log_theta = std::log(p.theta);
        const double inv_gamma = 1.0 / p.gamma;
        const double lh_const = std::log(p.nu) - std::log(p.gamma) - p.nu * log_theta;
        double ll = 0.0;
        for (std::size_t k = 0; k < times_.size(); ++k) {
            const double sp = detail::softplus(p.nu * (log_times_[k] - log_theta));
            const double ls = -std::expm1(inv_gamma * sp);
            ll += n_total_[k] * ls;
            if (n_event_[k] > 0.0) {
                const double lh = lh_const + (p.nu - 1.0) * log_times_[k] + (inv_gamma - 1.0) * sp;
                ll += n_event_[k] * lh;
            }
        }
        return std::isfinite(ll) ? ll : -std::numeric_limits<double>::infinity();
    }

private:
    std::vector<double> times_, log_times_, n_event_, n_total_;
};

enum class HazardShape { constant, increasing, decreasing, unimodal, bathtub };

inline const char* to_string(HazardShape s) {
    switch (s) {
        case HazardShape::constant: return "constant";
        case HazardShape::increasing: return "increasing";
        case HazardShape::decreasing: return "decreasing";
        case HazardShape::unimodal: return "unimodal";
        case HazardShape::bathtub: return "bathtub";
    }
    return "?";
}

// Classifies the hazard by the sign pattern of its first differences on a
// 1000-point grid over (0, horizon]. A relative dead-band absorbs float noise.
inline HazardShape classify_hazard_shape(const PgwParams& p, double horizon) {
    validate(p);
    if (!(horizon > 0.0)) throw std::invalid_argument("classify_hazard_shape: horizon must be > 0");
    if (p.nu == 1.0 && p.gamma == 1.0) return HazardShape::constant;

    constexpr int kGrid = 1000;
    constexpr double kDeadband = 1e-9;
    std::vector<double> h(kGrid);
    for (int i = 0; i < kGrid; ++i)
        h[i] = hazard(horizon * (i + 1) / kGrid, p);

    // Collapse first differences to a sign sequence, dropping dead-band flats.
    std::vector<int> signs;
    for (int i = 0; i + 1 < kGrid; ++i) {
        const double d = h[i + 1] - h[i];
        const double scale = std::max(std::abs(h[i]), std::abs(h[i + 1]));
        if (std::abs(d) <= kDeadband * scale) continue;
        const int s = d > 0 ? 1 : -1;
        if (signs.empty() || signs.back() != s) signs.push_back(s);
    }

    if (signs.empty()) return HazardShape::constant;
    if (signs.size() == 1) return signs[0] > 0 ? HazardShape::increasing : HazardShape::decreasing;
    if (signs.size() == 2)
        return signs[0] > 0 ? HazardShape::unimodal : HazardShape::bathtub;
    // More than one turning point: report by the first turn.
    return signs[0] > 0 ? HazardShape::unimodal : HazardShape::bathtub;
}

}  // namespace bpgwsp
