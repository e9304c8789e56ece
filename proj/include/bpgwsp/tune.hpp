#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "bpgwsp/prior.hpp"
#include "bpgwsp/ropetest.hpp"

// Evaluation engine for the tuning study: weighted confusion counts,
// one-threshold AUC, configuration ranking, stratified performance, and
// prior-misspecification robustness.

namespace bpgwsp {

// One labeled test decision from the grid sweep.
struct DecisionRecord {
    int setting = 0;
    int rep = 0;
    bool truth = false;   // adr_rate > 0 in the generating scenario
    bool signal = false;
    TestConfig config;
    // scenario / prior descriptors used for stratification
    std::size_t n = 0;
    double adr_rate = 0.0;
    double expected_time = 0.0;
    Belief belief = Belief::none;
    int true_quarter = 0;  // 0 for controls
    PriorFamily family = PriorFamily::log_log_log;
    // diagnostics
    double ess_nu = 0.0, ess_gamma = 0.0;
    double rhat_nu = 0.0, rhat_gamma = 0.0;
    double wall_time_s = 0.0;
    // class weight applied by balance_classes (1.0 until then)
    double weight = 1.0;
};

struct Confusion {
    double tp = 0.0, fp = 0.0, tn = 0.0, fn = 0.0;
    double sensitivity() const { return tp / (tp + fn); }
    double specificity() const { return tn / (tn + fp); }
};

inline Confusion confusion(const std::vector<DecisionRecord>& records) {
    if (records.empty()) throw std::invalid_argument("confusion: no records");
    Confusion c;
    for (const auto& r : records) {
        if (r.truth)
            (r.signal ? c.tp : c.fn) += r.weight;
        else
            (r.signal ? c.fp : c.tn) += r.weight;
    }
    if (c.tp + c.fn == 0.0 || c.tn + c.fp == 0.0)
        throw std::invalid_argument("confusion: both truth classes must be present");
    return c;
}

// Area under the ROC through the single operating point
// (1-specificity, sensitivity): trapezoids give (se + sp) / 2.
inline double auc_one_threshold(double sensitivity, double specificity) {
    if (sensitivity < 0.0 || sensitivity > 1.0 || specificity < 0.0 || specificity > 1.0)
        throw std::invalid_argument("auc_one_threshold: arguments must be in [0,1]");
    return 0.5 * (sensitivity + specificity);
}

inline double auc_of(const std::vector<DecisionRecord>& records) {
    const Confusion c = confusion(records);
    return auc_one_threshold(c.sensitivity(), c.specificity());
}

// Reweights negatives so positive and negative totals match before counting.
inline std::vector<DecisionRecord> balance_classes(std::vector<DecisionRecord> records) {
    double pos = 0.0, neg = 0.0;
    for (const auto& r : records) (r.truth ? pos : neg) += 1.0;
    if (pos == 0.0 || neg == 0.0)
        throw std::invalid_argument("balance_classes: both classes must be present");
    const double w = pos / neg;
    for (auto& r : records)
        if (!r.truth) r.weight = w;
    return records;
}

inline std::optional<double> balanced_auc(std::vector<DecisionRecord> records) {
    double pos = 0.0, neg = 0.0;
    for (const auto& r : records) (r.truth ? pos : neg) += 1.0;
    if (pos == 0.0 || neg == 0.0) return std::nullopt;
    return auc_of(balance_classes(std::move(records)));
}

struct ConfigKey {
    double rope_level = 0.0;
    double ci_level = 0.0;
    CiType ci_type = CiType::eti;
    CombinationRule rule = CombinationRule::option1;

    // tie-break / identity order: (rope_level, ci_level, ci_type, rule)
    friend bool operator<(const ConfigKey& a, const ConfigKey& b) {
        if (a.rope_level != b.rope_level) return a.rope_level < b.rope_level;
        if (a.ci_level != b.ci_level) return a.ci_level < b.ci_level;
        if (a.ci_type != b.ci_type) return a.ci_type < b.ci_type;
        return a.rule < b.rule;
    }
    friend bool operator==(const ConfigKey& a, const ConfigKey& b) {
        return a.rope_level == b.rope_level && a.ci_level == b.ci_level &&
               a.ci_type == b.ci_type && a.rule == b.rule;
    }
};

inline ConfigKey key_of(const TestConfig& c) {
    return {c.rope_level, c.ci_level, c.ci_type, c.rule};
}

inline std::string to_string(const ConfigKey& k) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "rope%.2f_ci%.2f_%s_rule%d", k.rope_level, k.ci_level,
                  to_string(k.ci_type), static_cast<int>(k.rule));
    return buf;
}

// "Correct belief" subset used for ranking: ADR records whose prior belief
// matches the true event-time quarter; controls (the shared negative class)
// are kept under every belief.
inline bool correct_belief(const DecisionRecord& r) {
    return !r.truth || quarter_of(r.belief) == r.true_quarter;
}

struct RankRow {
    ConfigKey config;
    std::optional<double> auc;  // absent when no decisions exist for the config
};

// Descending-AUC ranking over the requested config grid; configs without
// records are listed with an absent AUC rather than dropped.
inline std::vector<RankRow> rank_configs(const std::vector<DecisionRecord>& records,
                                         const std::vector<ConfigKey>& grid) {
    std::map<ConfigKey, std::vector<DecisionRecord>> by_config;
    for (const auto& r : records)
        if (correct_belief(r)) by_config[key_of(r.config)].push_back(r);

    std::vector<RankRow> rows;
    rows.reserve(grid.size());
    for (const auto& k : grid) {
        auto it = by_config.find(k);
        rows.push_back({k, it == by_config.end() ? std::nullopt : balanced_auc(it->second)});
    }
    std::stable_sort(rows.begin(), rows.end(), [](const RankRow& a, const RankRow& b) {
        const double av = a.auc.value_or(-1.0), bv = b.auc.value_or(-1.0);
        if (av != bv) return av > bv;
        return a.config < b.config;
    });
    return rows;
}

enum class StratifyBy { sample_size, adr_proportion, expected_time };

struct StratumRow {
    std::string level;
    std::optional<double> auc;  // absent when a class is missing in the stratum
};

// AUC per factor level, classes balanced within each stratum. Controls have
// no event time, so for the expected_time factor they are shared across all
// strata as the common negative class.
inline std::vector<StratumRow> stratified_auc(const std::vector<DecisionRecord>& records,
                                              StratifyBy factor) {
    std::map<std::string, std::vector<DecisionRecord>> strata;
    std::vector<DecisionRecord> controls;
    for (const auto& r : records) {
        if (!correct_belief(r)) continue;
        switch (factor) {
            case StratifyBy::sample_size:
                strata[std::to_string(r.n)].push_back(r);
                break;
            case StratifyBy::adr_proportion: {
                if (r.truth) {
                    char buf[32];
                    std::snprintf(buf, sizeof buf, "adr%g", r.adr_rate);
                    strata[buf].push_back(r);
                } else {
                    controls.push_back(r);
                }
                break;
            }
            case StratifyBy::expected_time:
                if (r.truth)
                    strata["q" + std::to_string(r.true_quarter)].push_back(r);
                else
                    controls.push_back(r);
                break;
        }
    }
    std::vector<StratumRow> rows;
    for (auto& [level, recs] : strata) {
        recs.insert(recs.end(), controls.begin(), controls.end());
        rows.push_back({level, balanced_auc(recs)});
    }
    return rows;
}

struct RobustnessRow {
    std::string group;  // "correct", "one_quarter_off", "two_quarters_off", "none_assumed"
    std::optional<double> auc;
};

// AUC grouped by how far the prior belief sits from the true event-time
// quarter; controls are the shared negative class in every group.
inline std::vector<RobustnessRow> robustness_report(const std::vector<DecisionRecord>& records) {
    std::map<std::string, std::vector<DecisionRecord>> groups;
    std::vector<DecisionRecord> controls;
    for (const auto& r : records) {
        if (!r.truth) {
            controls.push_back(r);
            continue;
        }
        if (r.belief == Belief::none) {
            groups["none_assumed"].push_back(r);
            continue;
        }
        switch (std::abs(quarter_of(r.belief) - r.true_quarter)) {
            case 0: groups["correct"].push_back(r); break;
            case 1: groups["one_quarter_off"].push_back(r); break;
            default: groups["two_quarters_off"].push_back(r); break;
        }
    }
    std::vector<RobustnessRow> rows;
    for (const char* g : {"correct", "one_quarter_off", "two_quarters_off", "none_assumed"}) {
        auto it = groups.find(g);
        if (it == groups.end()) {
            rows.push_back({g, std::nullopt});
            continue;
        }
        auto recs = it->second;
        recs.insert(recs.end(), controls.begin(), controls.end());
        rows.push_back({g, balanced_auc(recs)});
    }
    return rows;
}

// Default tuning grid: full cross product of ROPE and CI levels over
// {0.50, 0.55, ..., 0.95} x {eti, hdi} x {option1..3}.
inline std::vector<ConfigKey> default_config_grid() {
    std::vector<double> levels;
    for (int i = 10; i <= 19; ++i) levels.push_back(static_cast<double>(i * 5) / 100.0);
    std::vector<ConfigKey> grid;
    for (double rope : levels)
        for (double ci : levels)
            for (CiType t : {CiType::eti, CiType::hdi})
                for (CombinationRule r :
                     {CombinationRule::option1, CombinationRule::option2, CombinationRule::option3})
                    grid.push_back({rope, ci, t, r});
    return grid;
}

inline std::vector<DecisionRecord> filter_ess(const std::vector<DecisionRecord>& records,
                                              double min_ess) {
    std::vector<DecisionRecord> out;
    for (const auto& r : records)
        if (r.ess_nu >= min_ess && r.ess_gamma >= min_ess) out.push_back(r);
    return out;
}

}  // namespace bpgwsp
