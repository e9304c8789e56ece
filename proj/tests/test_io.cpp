#include <catch2/catch_amalgamated.hpp>

#include <cstdio>
#include <filesystem>

#include "bpgwsp/io.hpp"
#include "bpgwsp/rng.hpp"

using namespace bpgwsp;
namespace fs = std::filesystem;

namespace {

struct TempDir {
    fs::path path;
    TempDir() {
        path = fs::temp_directory_path() / ("bpgwsp_io_" + std::to_string(::getpid()));
        fs::create_directories(path);
    }
    ~TempDir() { fs::remove_all(path); }
};

}  // namespace

TEST_CASE("format_double: shortest round trip") {
    CHECK(format_double(1.0) == "1");
    CHECK(format_double(0.1) == "0.1");
    CHECK(format_double(365.0) == "365");
    for (double v : {0.1, 1.0 / 3.0, 123.456e-7, 1e300, -42.5}) {
        const std::string s = format_double(v);
        CHECK(std::stod(s) == v);
    }
}

TEST_CASE("atomic_write and read_file round trip") {
    TempDir tmp;
    const fs::path f = tmp.path / "sub" / "x.txt";
    atomic_write(f, "hello\nworld\n");
    CHECK(read_file(f) == "hello\nworld\n");
    // overwrite through the same temp-and-rename path
    atomic_write(f, "second");
    CHECK(read_file(f) == "second");
    CHECK_FALSE(fs::exists(f.string() + ".tmp"));
    CHECK_THROWS_AS(read_file(tmp.path / "missing.txt"), std::runtime_error);
}

TEST_CASE("dataset CSV: write/read round trip and censor inference") {
    TempDir tmp;
    TteDataset d;
    d.times = {10.5, 365.0, 42.0, 365.0};
    d.events = {1, 0, 1, 0};
    d.censor_time = 365.0;

    const fs::path f = tmp.path / "data.csv";
    write_dataset(f, d);
    const TteDataset back = read_dataset(f);
    CHECK(back.times == d.times);
    CHECK(back.events == d.events);
    CHECK(back.censor_time == 365.0);  // inferred from the censored rows

    // byte-identical rewrite
    const std::string first = read_file(f);
    write_dataset(f, back);
    CHECK(read_file(f) == first);

    // explicit override wins
    CHECK(read_dataset(f, 400.0).censor_time == 400.0);

    // all-event data: censor falls back to max time
    TteDataset ev;
    ev.times = {5.0, 9.0};
    ev.events = {1, 1};
    ev.censor_time = 9.0;
    write_dataset(tmp.path / "ev.csv", ev);
    CHECK(read_dataset(tmp.path / "ev.csv").censor_time == 9.0);
}

TEST_CASE("read_dataset: parse errors carry line numbers") {
    TempDir tmp;
    auto write = [&](const char* name, const std::string& text) {
        atomic_write(tmp.path / name, text);
        return tmp.path / name;
    };

    CHECK_THROWS_WITH(read_dataset(write("h.csv", "foo,bar\n1,1\n")),
                      Catch::Matchers::ContainsSubstring("header must contain time,event"));
    CHECK_THROWS_WITH(read_dataset(write("b.csv", "time,event\n1.5,1\nxx,1\n")),
                      Catch::Matchers::ContainsSubstring("line 3"));
    CHECK_THROWS_WITH(read_dataset(write("n.csv", "time,event\n-3,1\n")),
                      Catch::Matchers::ContainsSubstring("time must be > 0"));
    CHECK_THROWS_WITH(read_dataset(write("e.csv", "time,event\n3,2\n")),
                      Catch::Matchers::ContainsSubstring("event must be 0 or 1"));
    CHECK_THROWS_WITH(read_dataset(write("f.csv", "time,event\n3,1,9\n")),
                      Catch::Matchers::ContainsSubstring("line 2"));
    CHECK_THROWS_WITH(read_dataset(write("empty.csv", "")),
                      Catch::Matchers::ContainsSubstring("empty"));
    CHECK_THROWS_WITH(read_dataset(write("norows.csv", "time,event\n")),
                      Catch::Matchers::ContainsSubstring("no data rows"));

    // extra columns are fine as long as time/event are named
    const auto d = read_dataset(write("extra.csv", "id,time,event\n7,1.5,1\n8,2.5,0\n"));
    CHECK(d.times == std::vector<double>{1.5, 2.5});

    // blank lines and CRLF are tolerated
    const auto crlf = read_dataset(write("crlf.csv", "time,event\r\n1.5,1\r\n\r\n2.5,0\r\n"));
    CHECK(crlf.times.size() == 2);
}

TEST_CASE("draws CSV and diagnostics JSON") {
    PosteriorDraws d;
    d.columns = {"nu", "gamma"};
    d.rows = 3;
    d.data = {1.0, 2.5, 0.125, 3.0, 42.0, 0.1};
    d.chains = 2;
    d.ess = {500.0, 20000.0};
    d.rhat = {1.0, 1.2};
    d.degenerate = {false, false};
    d.accept_rate = {0.23, 0.24};
    d.wall_time_s = 1.5;

    CHECK(draws_to_csv(d) == "nu,gamma\n1,2.5\n0.125,3\n42,0.1\n");

    const json j = diagnostics_to_json(d, McmcSettings{});
    CHECK(j["rows"] == 3);
    CHECK(j["ess"][0] == 500.0);
    CHECK(j["settings"]["chains"] == 4);
    // wall time is excluded so reruns compare byte-identical
    CHECK_FALSE(j.contains("wall_time_s"));
    // one ESS warning (nu below 10000) and one rhat warning (gamma above 1.1)
    REQUIRE(j["warnings"].size() == 2);
    CHECK(j["warnings"][0].get<std::string>().find("ess(nu)") != std::string::npos);
    CHECK(j["warnings"][1].get<std::string>().find("rhat(gamma)") != std::string::npos);
}

TEST_CASE("decision JSON carries the full decision") {
    TestDecision d;
    d.signal = true;
    d.outcome_nu = InterimOutcome::rejected;
    d.outcome_gamma = InterimOutcome::undecided;
    d.rope_nu = {0.5, 1.5};
    d.ci_nu = {2.0, 3.0};
    d.config = recommended_config();
    d.warnings = {"w1"};

    const json j = decision_to_json(d);
    CHECK(j["signal"] == true);
    CHECK(j["outcome_nu"] == "rejected");
    CHECK(j["outcome_gamma"] == "undecided");
    CHECK(j["rope_nu"]["lo"] == 0.5);
    CHECK(j["ci_nu"]["hi"] == 3.0);
    CHECK(j["config"]["ci_type"] == "hdi");
    CHECK(j["config"]["rule"] == 2);
    CHECK(j["warnings"][0] == "w1");
}

TEST_CASE("config key string round trip") {
    for (const auto& k : default_config_grid()) {
        const ConfigKey back = config_key_from_string(to_string(k));
        CHECK(back == k);
    }
    CHECK_THROWS_AS(config_key_from_string("nonsense"), std::invalid_argument);
    CHECK_THROWS_AS(config_key_from_string("rope0.80_ci0.80_xyz_rule2"), std::invalid_argument);
}

TEST_CASE("sweep records: JSON round trip and JSONL store") {
    TempDir tmp;
    SweepRecord r;
    r.setting = 17;
    r.rep = 3;
    r.seed = 123456789ull;
    r.truth = true;
    r.n = 3000;
    r.adr_rate = 0.5;
    r.expected_time = 183.0;
    r.belief = Belief::q2;
    r.true_quarter = 2;
    r.family = PriorFamily::fix_gam_gam;
    r.ess_nu = 8000.0;
    r.ess_gamma = 9000.0;
    r.rhat_nu = 1.01;
    r.rhat_gamma = 1.02;
    r.wall_time_s = 2.5;
    r.decisions = {{{0.80, 0.80, CiType::hdi, CombinationRule::option2}, true},
                   {{0.50, 0.95, CiType::eti, CombinationRule::option1}, false}};

    const SweepRecord back = sweep_record_from_json(sweep_record_to_json(r));
    CHECK(back.setting == r.setting);
    CHECK(back.rep == r.rep);
    CHECK(back.seed == r.seed);
    CHECK(back.truth == r.truth);
    CHECK(back.n == r.n);
    CHECK(back.belief == r.belief);
    CHECK(back.family == r.family);
    CHECK(back.ess_gamma == r.ess_gamma);
    CHECK(back.wall_time_s == r.wall_time_s);
    REQUIRE(back.decisions.size() == 2);
    // JSON objects iterate alphabetically; compare as sorted sets
    auto got = back.decisions;
    auto want = r.decisions;
    std::sort(got.begin(), got.end());
    std::sort(want.begin(), want.end());
    CHECK(got == want);

    // JSONL store: append two lines, read both, skip blanks
    const fs::path f = tmp.path / "results.jsonl";
    SweepRecord r2 = r;
    r2.rep = 4;
    r2.truth = false;
    atomic_write(f, sweep_record_to_json(r).dump() + "\n\n" + sweep_record_to_json(r2).dump() + "\n");
    const auto records = read_sweep_records(f);
    REQUIRE(records.size() == 2);
    CHECK(records[0].rep == 3);
    CHECK(records[1].rep == 4);

    // a missing store reads as empty (fresh sweep)
    CHECK(read_sweep_records(tmp.path / "absent.jsonl").empty());

    // expansion: one decision record per (sweep, config)
    const auto expanded = expand_records(records);
    REQUIRE(expanded.size() == 4);
    for (const auto& e : expanded) {
        CHECK(e.setting == 17);
        CHECK(e.n == 3000);
        CHECK((e.rep == 3 || e.rep == 4));
        CHECK(e.truth == (e.rep == 3));
    }
}
