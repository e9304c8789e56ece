#pragma once

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <future>
#include <limits>
#include <numeric>
#include <stdexcept>
#include <string>
#include <vector>

#include "bpgwsp/pgw.hpp"
#include "bpgwsp/prior.hpp"
#include "bpgwsp/rng.hpp"

// Posterior sampling for the PgW model (posterior = prior x likelihood) via
// adaptive per-coordinate random-walk Metropolis on log-parameters, plus ESS
// and split-Rhat diagnostics.

namespace bpgwsp {

struct McmcSettings {
    int chains = 4;
    int iters_per_chain = 10000;  // post burn-in draws per chain
    int burn_in = 1000;
    std::uint64_t seed = 0;
    double target_accept = 0.234;
    double init_jitter_sd = 0.1;
};

inline void validate(const McmcSettings& s) {
    if (s.chains < 2) throw std::invalid_argument("McmcSettings: chains must be >= 2");
    if (s.iters_per_chain < 100) throw std::invalid_argument("McmcSettings: iters_per_chain must be >= 100");
    if (s.burn_in < 0) throw std::invalid_argument("McmcSettings: burn_in must be >= 0");
    if (!(s.target_accept > 0.0 && s.target_accept < 1.0))
        throw std::invalid_argument("McmcSettings: target_accept must be in (0,1)");
    if (!(s.init_jitter_sd > 0.0)) throw std::invalid_argument("McmcSettings: init_jitter_sd must be > 0");
}

struct PosteriorDraws {
    std::vector<std::string> columns;  // subset of {"theta","nu","gamma"}, fixed omitted
    std::vector<double> data;          // row-major, rows x columns
    std::size_t rows = 0;
    std::vector<double> ess;
    std::vector<double> rhat;
    std::vector<bool> degenerate;      // constant-column flag per column
    std::vector<double> accept_rate;   // per chain
    int chains = 0;
    double wall_time_s = 0.0;

    std::size_t cols() const { return columns.size(); }
    double at(std::size_t r, std::size_t c) const { return data[r * columns.size() + c]; }
    std::vector<double> column(std::size_t c) const {
        std::vector<double> out(rows);
        for (std::size_t r = 0; r < rows; ++r) out[r] = at(r, c);
        return out;
    }
    int column_index(const std::string& name) const {
        for (std::size_t i = 0; i < columns.size(); ++i)
            if (columns[i] == name) return static_cast<int>(i);
        return -1;
    }
};

inline double log_posterior(const TteDataset& data, const PriorSpec& spec, const PgwParams& p) {
    try {
        return prior_log_density(spec, p) + log_likelihood(data, p);
    } catch (const std::exception&) {
        return -std::numeric_limits<double>::infinity();
    }
}

namespace detail {

struct FreeCoords {
    // indices into (theta, nu, gamma) that the walker moves
    std::vector<int> idx;
    std::vector<std::string> names;
};

inline FreeCoords free_coords(const PriorSpec& spec) {
    FreeCoords fc;
    const PriorEntry* entries[3] = {&spec.theta, &spec.nu, &spec.gamma};
    const char* names[3] = {"theta", "nu", "gamma"};
    for (int j = 0; j < 3; ++j)
        if (entries[j]->family != PriorFamily1d::fixed) {
            fc.idx.push_back(j);
            fc.names.push_back(names[j]);
        }
    return fc;
}

inline PgwParams to_params(const PgwParams& base, const FreeCoords& fc, const std::vector<double>& log_x) {
    PgwParams p = base;
    double* fields[3] = {&p.theta, &p.nu, &p.gamma};
    for (std::size_t k = 0; k < fc.idx.size(); ++k) *fields[fc.idx[k]] = std::exp(log_x[k]);
    return p;
}

}  // namespace detail

struct ChainResult {
    std::vector<PgwParams> draws;  // post burn-in
    double accept_rate = 0.0;      // post burn-in acceptance fraction
};

// One adaptive random-walk Metropolis chain in log-parameter space.
// Step sizes follow Robbins-Monro toward target_accept during burn-in only
// and are frozen afterward. Deterministic given (seed, chain_index).
inline ChainResult run_chain(const TteDataset& data, const PriorSpec& spec,
                             const McmcSettings& settings, int chain_index) {
    validate(settings);
    validate(spec);
    const auto fc = detail::free_coords(spec);
    const PgwParams means = prior_means(spec);
    auto rng = make_rng(mix_seed(settings.seed, static_cast<std::uint64_t>(chain_index)));

    ChainResult result;
    result.draws.reserve(static_cast<std::size_t>(settings.iters_per_chain));

    if (fc.idx.empty()) {
        // every coordinate fixed: degenerate zero-dimensional walk
        result.draws.assign(static_cast<std::size_t>(settings.iters_per_chain), means);
        result.accept_rate = 0.0;
        return result;
    }

    const PgwLikelihood lik(data);
    // target density of x = log(p): log pi(e^x) + sum(x) (log-Jacobian)
    auto log_post = [&](const std::vector<double>& log_x) {
        double jac = 0.0;
        for (double v : log_x) {
            if (!std::isfinite(v)) return -std::numeric_limits<double>::infinity();
            jac += v;
        }
        const PgwParams p = detail::to_params(means, fc, log_x);
        try {
            return prior_log_density(spec, p) + lik(p) + jac;
        } catch (const std::exception&) {
            return -std::numeric_limits<double>::infinity();
        }
    };

    // init: prior means jittered multiplicatively
    std::normal_distribution<double> jitter(0.0, settings.init_jitter_sd);
    std::vector<double> x(fc.idx.size());
    double lp = -std::numeric_limits<double>::infinity();
    const double* mean_fields[3] = {&means.theta, &means.nu, &means.gamma};
    for (int attempt = 0; attempt < 100 && !std::isfinite(lp); ++attempt) {
        for (std::size_t k = 0; k < x.size(); ++k)
            x[k] = std::log(*mean_fields[fc.idx[k]]) + jitter(rng);
        lp = log_post(x);
    }
    if (!std::isfinite(lp))
        throw std::runtime_error("mcmc: chain " + std::to_string(chain_index) +
                                 " failed to find a finite-posterior start after 100 jitter retries");

    std::vector<double> log_step(x.size(), std::log(0.5));
    std::normal_distribution<double> stdnorm(0.0, 1.0);
    const int total = settings.burn_in + settings.iters_per_chain;
    std::int64_t accepted = 0, proposed = 0;

    for (int iter = 0; iter < total; ++iter) {
        const bool adapting = iter < settings.burn_in;
        for (std::size_t k = 0; k < x.size(); ++k) {
            const double old = x[k];
            x[k] = old + std::exp(log_step[k]) * stdnorm(rng);
            const double lp_new = log_post(x);
            const bool accept = std::log(uniform01_open(rng)) < lp_new - lp;
            if (accept) {
                lp = lp_new;
            } else {
                x[k] = old;
            }
            if (adapting) {
                const double gain = 1.0 / std::pow(iter + 1.0, 0.6);
                log_step[k] += gain * ((accept ? 1.0 : 0.0) - settings.target_accept);
            } else {
                accepted += accept;
                ++proposed;
            }
        }
        if (!adapting) result.draws.push_back(detail::to_params(means, fc, x));
    }
    result.accept_rate = proposed ? static_cast<double>(accepted) / static_cast<double>(proposed) : 0.0;
    return result;
}

// Multi-chain ESS with Geyer initial-monotone truncation:
// ESS = M*N / (1 + 2 * sum rho_t). Chains are stacked contiguously in `col`.
inline double effective_sample_size(const std::vector<double>& col, int chains) {
    if (chains < 2) throw std::invalid_argument("effective_sample_size: need >= 2 chains");
    if (col.empty() || col.size() % static_cast<std::size_t>(chains) != 0)
        throw std::invalid_argument("effective_sample_size: column size not divisible by chains");
    const std::size_t n = col.size() / static_cast<std::size_t>(chains);
    const std::size_t m = static_cast<std::size_t>(chains);
    const double rows = static_cast<double>(col.size());

    std::vector<double> chain_mean(m, 0.0), chain_var(m, 0.0);
    for (std::size_t c = 0; c < m; ++c) {
        const double* v = col.data() + c * n;
        chain_mean[c] = std::accumulate(v, v + n, 0.0) / static_cast<double>(n);
        double s = 0.0;
        for (std::size_t i = 0; i < n; ++i) s += (v[i] - chain_mean[c]) * (v[i] - chain_mean[c]);
        chain_var[c] = s / static_cast<double>(n - 1);
    }
    const double w = std::accumulate(chain_var.begin(), chain_var.end(), 0.0) / static_cast<double>(m);
    if (w == 0.0) return rows;  // constant column by convention

    const double grand = std::accumulate(chain_mean.begin(), chain_mean.end(), 0.0) / static_cast<double>(m);
    double b = 0.0;
    for (double cm : chain_mean) b += (cm - grand) * (cm - grand);
    b *= static_cast<double>(n) / static_cast<double>(m - 1);
    const double var_plus = (static_cast<double>(n - 1) / static_cast<double>(n)) * w +
                            b / static_cast<double>(n);

    // autocovariance at lag t averaged over chains (biased 1/n normalizer)
    auto acov = [&](std::size_t t) {
        double acc = 0.0;
        for (std::size_t c = 0; c < m; ++c) {
            const double* v = col.data() + c * n;
            double s = 0.0;
            for (std::size_t i = 0; i + t < n; ++i)
                s += (v[i] - chain_mean[c]) * (v[i + t] - chain_mean[c]);
            acc += s / static_cast<double>(n);
        }
        return acc / static_cast<double>(m);
    };

    auto rho = [&](std::size_t t) { return 1.0 - (w - acov(t)) / var_plus; };

    // Geyer initial-monotone: sum pairs P_k = rho_{2k} + rho_{2k+1} (with
    // rho_0 = 1) while positive, clipping each pair at its predecessor.
    double pair_prev = std::numeric_limits<double>::infinity();
    double pair_sum = 0.0;
    for (std::size_t t = 0; t + 1 < n; t += 2) {
        const double rho_a = t == 0 ? 1.0 : rho(t);
        double pair = rho_a + rho(t + 1);
        if (pair < 0.0) break;
        pair = std::min(pair, pair_prev);
        pair_prev = pair;
        pair_sum += pair;
    }
    const double tau = std::max(1.0, -1.0 + 2.0 * pair_sum);  // = 1 + 2*sum_{t>=1} rho_t
    return std::min(rows, rows / tau);
}

// Split-Rhat: each chain halved, then the classic between/within ratio.
inline double split_rhat(const std::vector<double>& col, int chains) {
    if (chains < 2) throw std::invalid_argument("split_rhat: need >= 2 chains");
    if (col.empty() || col.size() % static_cast<std::size_t>(chains) != 0)
        throw std::invalid_argument("split_rhat: column size not divisible by chains");
    const std::size_t n_full = col.size() / static_cast<std::size_t>(chains);
    const std::size_t n = n_full / 2;
    if (n < 2) throw std::invalid_argument("split_rhat: chains too short to split");

    const std::size_t m = 2 * static_cast<std::size_t>(chains);
    std::vector<double> means(m), vars(m);
    for (std::size_t h = 0; h < m; ++h) {
        const double* v = col.data() + (h / 2) * n_full + (h % 2) * n;
        means[h] = std::accumulate(v, v + n, 0.0) / static_cast<double>(n);
        double s = 0.0;
        for (std::size_t i = 0; i < n; ++i) s += (v[i] - means[h]) * (v[i] - means[h]);
        vars[h] = s / static_cast<double>(n - 1);
    }
    const double w = std::accumulate(vars.begin(), vars.end(), 0.0) / static_cast<double>(m);
    if (w == 0.0) return 1.0;  // degenerate: no within-chain variance
    const double grand = std::accumulate(means.begin(), means.end(), 0.0) / static_cast<double>(m);
    double b = 0.0;
    for (double mu : means) b += (mu - grand) * (mu - grand);
    b *= static_cast<double>(n) / static_cast<double>(m - 1);
    const double var_plus = (static_cast<double>(n - 1) / static_cast<double>(n)) * w +
                            b / static_cast<double>(n);
    return std::sqrt(var_plus / w);
}

// Runs all chains (concurrently when workers > 1), pools post-burn-in draws,
// and attaches per-column ESS and split-Rhat.
inline PosteriorDraws run_chains(const TteDataset& data, const PriorSpec& spec,
                                 const McmcSettings& settings, int workers = 1) {
    validate(settings);
    const auto t0 = std::chrono::steady_clock::now();
    const auto fc = detail::free_coords(spec);

    std::vector<ChainResult> chains(static_cast<std::size_t>(settings.chains));
    if (workers > 1) {
        std::vector<std::future<ChainResult>> futs;
        for (int c = 0; c < settings.chains; ++c)
            futs.push_back(std::async(std::launch::async,
                                      [&, c] { return run_chain(data, spec, settings, c); }));
        for (int c = 0; c < settings.chains; ++c) chains[static_cast<std::size_t>(c)] = futs[static_cast<std::size_t>(c)].get();
    } else {
        for (int c = 0; c < settings.chains; ++c)
            chains[static_cast<std::size_t>(c)] = run_chain(data, spec, settings, c);
    }

    PosteriorDraws out;
    out.columns = fc.names;
    out.chains = settings.chains;
    out.rows = static_cast<std::size_t>(settings.chains) * static_cast<std::size_t>(settings.iters_per_chain);
    out.data.resize(out.rows * out.cols());
    std::size_t r = 0;
    for (const auto& ch : chains) {
        for (const auto& p : ch.draws) {
            const double fields[3] = {p.theta, p.nu, p.gamma};
            for (std::size_t k = 0; k < fc.idx.size(); ++k)
                out.data[r * out.cols() + k] = fields[fc.idx[k]];
            ++r;
        }
        out.accept_rate.push_back(ch.accept_rate);
    }

    for (std::size_t c = 0; c < out.cols(); ++c) {
        const auto col = out.column(c);
        const bool constant = std::all_of(col.begin(), col.end(), [&](double v) { return v == col[0]; });
        out.degenerate.push_back(constant);
        out.ess.push_back(effective_sample_size(col, settings.chains));
        out.rhat.push_back(split_rhat(col, settings.chains));
    }
    out.wall_time_s = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    return out;
}

}  // namespace bpgwsp
