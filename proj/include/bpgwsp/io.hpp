#pragma once

#include <charconv>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "bpgwsp/mcmc.hpp"
#include "bpgwsp/pgw.hpp"
#include "bpgwsp/ropetest.hpp"
#include "bpgwsp/tune.hpp"

// File formats: `time,event` dataset CSV, posterior-draw CSV with JSON
// diagnostics sidecar, decision JSON, and the line-delimited JSON record
// store used by the resumable tuning sweep. All writes are atomic
// (temp-and-rename).

namespace bpgwsp {

using json = nlohmann::json;

// Shortest round-trip decimal representation; keeps rewrites byte-identical.
inline std::string format_double(double v) {
    char buf[32];
    auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
    if (ec != std::errc{}) throw std::runtime_error("format_double failed");
    return std::string(buf, ptr);
}

inline void atomic_write(const std::filesystem::path& path, const std::string& content) {
    namespace fs = std::filesystem;
    if (path.has_parent_path()) fs::create_directories(path.parent_path());
    const fs::path tmp = path.string() + ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw std::runtime_error("cannot write " + tmp.string());
        out << content;
        if (!out.flush()) throw std::runtime_error("write failed for " + tmp.string());
    }
    fs::rename(tmp, path);
}

inline std::string read_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot read " + path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

// --- dataset CSV -----------------------------------------------------------

inline std::string dataset_to_csv(const TteDataset& d) {
    std::string out = "time,event\n";
    for (std::size_t i = 0; i < d.times.size(); ++i)
        out += format_double(d.times[i]) + "," + (d.events[i] ? "1\n" : "0\n");
    return out;
}

inline void write_dataset(const std::filesystem::path& path, const TteDataset& d) {
    atomic_write(path, dataset_to_csv(d));
}

namespace detail {

inline std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> fields;
    std::string cur;
    for (char c : line) {
        if (c == ',') {
            fields.push_back(cur);
            cur.clear();
        } else if (c != '\r') {
            cur += c;
        }
    }
    fields.push_back(cur);
    return fields;
}

inline double parse_double(const std::string& s, std::size_t line_no, const char* what) {
    double v = 0.0;
    const char* b = s.data();
    auto [ptr, ec] = std::from_chars(b, b + s.size(), v);
    if (ec != std::errc{} || ptr != b + s.size())
        throw std::runtime_error("parse error at line " + std::to_string(line_no) + ": bad " +
                                 what + " '" + s + "'");
    return v;
}

}  // namespace detail

// Parses `time,event` CSV (optional leading `id` column ignored). Censor time
// is inferred as max time over censored rows (max overall if none are
// censored) unless an explicit override is given.
inline TteDataset read_dataset(const std::filesystem::path& path, double censor_override = 0.0) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot read " + path.string());
    std::string line;
    if (!std::getline(in, line)) throw std::runtime_error("parse error: " + path.string() + " is empty");

    auto header = detail::split_csv_line(line);
    int col_time = -1, col_event = -1;
    for (std::size_t i = 0; i < header.size(); ++i) {
        if (header[i] == "time") col_time = static_cast<int>(i);
        if (header[i] == "event") col_event = static_cast<int>(i);
    }
    if (col_time < 0 || col_event < 0)
        throw std::runtime_error("parse error: " + path.string() + " header must contain time,event");

    TteDataset d;
    std::size_t line_no = 1;
    double max_censored = 0.0, max_time = 0.0;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        auto fields = detail::split_csv_line(line);
        if (fields.size() != header.size())
            throw std::runtime_error("parse error at line " + std::to_string(line_no) +
                                     ": expected " + std::to_string(header.size()) + " fields");
        const double t = detail::parse_double(fields[static_cast<std::size_t>(col_time)], line_no, "time");
        const double e = detail::parse_double(fields[static_cast<std::size_t>(col_event)], line_no, "event");
        if (!(t > 0.0))
            throw std::runtime_error("parse error at line " + std::to_string(line_no) + ": time must be > 0");
        if (e != 0.0 && e != 1.0)
            throw std::runtime_error("parse error at line " + std::to_string(line_no) + ": event must be 0 or 1");
        d.times.push_back(t);
        d.events.push_back(e == 1.0);
        max_time = std::max(max_time, t);
        if (e == 0.0) max_censored = std::max(max_censored, t);
    }
    if (d.times.empty()) throw std::runtime_error("parse error: " + path.string() + " has no data rows");
    d.censor_time = censor_override > 0.0 ? censor_override
                                          : (max_censored > 0.0 ? max_censored : max_time);
    validate(d);
    return d;
}

// --- posterior draws -------------------------------------------------------

inline std::string draws_to_csv(const PosteriorDraws& d) {
    std::string out;
    for (std::size_t c = 0; c < d.cols(); ++c) out += (c ? "," : "") + d.columns[c];
    out += '\n';
    for (std::size_t r = 0; r < d.rows; ++r) {
        for (std::size_t c = 0; c < d.cols(); ++c) {
            if (c) out += ',';
            out += format_double(d.at(r, c));
        }
        out += '\n';
    }
    return out;
}

inline json diagnostics_to_json(const PosteriorDraws& d, const McmcSettings& s) {
    json j;
    j["columns"] = d.columns;
    j["rows"] = d.rows;
    j["ess"] = d.ess;
    j["rhat"] = d.rhat;
    j["degenerate"] = d.degenerate;
    j["accept_rate"] = d.accept_rate;
    j["settings"] = {{"chains", s.chains},
                     {"iters_per_chain", s.iters_per_chain},
                     {"burn_in", s.burn_in},
                     {"seed", s.seed},
                     {"target_accept", s.target_accept},
                     {"init_jitter_sd", s.init_jitter_sd}};
    json warnings = json::array();
    for (std::size_t c = 0; c < d.cols(); ++c) {
        if (d.ess[c] < kEssRecommended)
            warnings.push_back("ess(" + d.columns[c] + ") below recommended 10000");
        if (d.rhat[c] > 1.1) warnings.push_back("rhat(" + d.columns[c] + ") above 1.1");
    }
    j["warnings"] = warnings;
    return j;
}

// --- decisions -------------------------------------------------------------

inline json interval_to_json(const Interval& iv) { return json{{"lo", iv.lo}, {"hi", iv.hi}}; }

inline json config_to_json(const TestConfig& c) {
    return json{{"rope_level", c.rope_level},
                {"ci_level", c.ci_level},
                {"ci_type", to_string(c.ci_type)},
                {"rule", static_cast<int>(c.rule)}};
}

inline json decision_to_json(const TestDecision& d) {
    json j;
    j["signal"] = d.signal;
    j["outcome_nu"] = to_string(d.outcome_nu);
    j["outcome_gamma"] = to_string(d.outcome_gamma);
    j["rope_nu"] = interval_to_json(d.rope_nu);
    j["rope_gamma"] = interval_to_json(d.rope_gamma);
    j["ci_nu"] = interval_to_json(d.ci_nu);
    j["ci_gamma"] = interval_to_json(d.ci_gamma);
    j["config"] = config_to_json(d.config);
    j["warnings"] = d.warnings;
    return j;
}

// --- tuning record store (JSONL, append-only, resumable) -------------------

// One line per completed (setting, rep): the scenario descriptors, MCMC
// diagnostics, and the signal decision under every evaluated config.
struct SweepRecord {
    int setting = 0;
    int rep = 0;
    std::uint64_t seed = 0;
    bool truth = false;
    std::size_t n = 0;
    double adr_rate = 0.0;
    double expected_time = 0.0;
    Belief belief = Belief::none;
    int true_quarter = 0;
    PriorFamily family = PriorFamily::log_log_log;
    double ess_nu = 0.0, ess_gamma = 0.0;
    double rhat_nu = 0.0, rhat_gamma = 0.0;
    double wall_time_s = 0.0;
    std::vector<std::pair<ConfigKey, bool>> decisions;
};

inline Belief belief_from_string(const std::string& s) {
    if (s == "none") return Belief::none;
    if (s == "q1") return Belief::q1;
    if (s == "q2") return Belief::q2;
    if (s == "q3") return Belief::q3;
    throw std::invalid_argument("unknown belief '" + s + "'");
}

inline PriorFamily family_from_string(const std::string& s) {
    if (s == "fix-log-log") return PriorFamily::fix_log_log;
    if (s == "log-log-log") return PriorFamily::log_log_log;
    if (s == "fix-gam-gam") return PriorFamily::fix_gam_gam;
    if (s == "gam-gam-gam") return PriorFamily::gam_gam_gam;
    throw std::invalid_argument("unknown prior family '" + s + "'");
}

inline CiType ci_type_from_string(const std::string& s) {
    if (s == "eti") return CiType::eti;
    if (s == "hdi") return CiType::hdi;
    throw std::invalid_argument("unknown ci type '" + s + "'");
}

inline json sweep_record_to_json(const SweepRecord& r) {
    json decisions = json::object();
    for (const auto& [k, sig] : r.decisions) decisions[to_string(k)] = sig;
    return json{{"setting", r.setting},
                {"rep", r.rep},
                {"seed", r.seed},
                {"truth", r.truth},
                {"n", r.n},
                {"adr_rate", r.adr_rate},
                {"expected_time", r.expected_time},
                {"belief", to_string(r.belief)},
                {"true_quarter", r.true_quarter},
                {"family", to_string(r.family)},
                {"ess_nu", r.ess_nu},
                {"ess_gamma", r.ess_gamma},
                {"rhat_nu", r.rhat_nu},
                {"rhat_gamma", r.rhat_gamma},
                {"wall_time_s", r.wall_time_s},
                {"decisions", decisions}};
}

inline ConfigKey config_key_from_string(const std::string& s) {
    // format: rope%.2f_ci%.2f_<eti|hdi>_rule<k>
    double rope = 0.0, ci = 0.0;
    char type[8] = {};
    int rule = 0;
    if (std::sscanf(s.c_str(), "rope%lf_ci%lf_%3[a-z]_rule%d", &rope, &ci, type, &rule) != 4)
        throw std::invalid_argument("bad config key '" + s + "'");
    // snap to the canonical grid representation
    rope = std::round(rope * 100.0) / 100.0;
    ci = std::round(ci * 100.0) / 100.0;
    return {rope, ci, ci_type_from_string(type), static_cast<CombinationRule>(rule)};
}

inline SweepRecord sweep_record_from_json(const json& j) {
    SweepRecord r;
    r.setting = j.at("setting").get<int>();
    r.rep = j.at("rep").get<int>();
    r.seed = j.at("seed").get<std::uint64_t>();
    r.truth = j.at("truth").get<bool>();
    r.n = j.at("n").get<std::size_t>();
    r.adr_rate = j.at("adr_rate").get<double>();
    r.expected_time = j.at("expected_time").get<double>();
    r.belief = belief_from_string(j.at("belief").get<std::string>());
    r.true_quarter = j.at("true_quarter").get<int>();
    r.family = family_from_string(j.at("family").get<std::string>());
    r.ess_nu = j.at("ess_nu").get<double>();
    r.ess_gamma = j.at("ess_gamma").get<double>();
    r.rhat_nu = j.at("rhat_nu").get<double>();
    r.rhat_gamma = j.at("rhat_gamma").get<double>();
    r.wall_time_s = j.at("wall_time_s").get<double>();
    for (const auto& [key, val] : j.at("decisions").items())
        r.decisions.emplace_back(config_key_from_string(key), val.get<bool>());
    return r;
}

inline std::vector<SweepRecord> read_sweep_records(const std::filesystem::path& path) {
    std::vector<SweepRecord> out;
    std::ifstream in(path);
    if (!in) return out;
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        out.push_back(sweep_record_from_json(json::parse(line)));
    }
    return out;
}

// Expands sweep records into per-config decision records for the evaluators.
inline std::vector<DecisionRecord> expand_records(const std::vector<SweepRecord>& sweeps) {
    std::vector<DecisionRecord> out;
    for (const auto& s : sweeps)
        for (const auto& [k, sig] : s.decisions) {
            DecisionRecord r;
            r.setting = s.setting;
            r.rep = s.rep;
            r.truth = s.truth;
            r.signal = sig;
            r.config = {k.rope_level, k.ci_level, k.ci_type, k.rule};
            r.n = s.n;
            r.adr_rate = s.adr_rate;
            r.expected_time = s.expected_time;
            r.belief = s.belief;
            r.true_quarter = s.true_quarter;
            r.family = s.family;
            r.ess_nu = s.ess_nu;
            r.ess_gamma = s.ess_gamma;
            r.rhat_nu = s.rhat_nu;
            r.rhat_gamma = s.rhat_gamma;
            r.wall_time_s = s.wall_time_s;
            out.push_back(r);
        }
    return out;
}

}  // namespace bpgwsp
