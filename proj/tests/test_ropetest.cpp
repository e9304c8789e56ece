#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <random>

#include "bpgwsp/ropetest.hpp"
#include "bpgwsp/rng.hpp"

using namespace bpgwsp;

namespace {

// O(n^2) brute-force HDI: check every pair of order statistics covering
// at least ceil(level*n) points and keep the narrowest (leftmost on ties).
Interval hdi_brute(std::vector<double> s, double level) {
    std::sort(s.begin(), s.end());
    const std::size_t n = s.size();
    const std::size_t m = static_cast<std::size_t>(std::ceil(level * static_cast<double>(n)));
    Interval best{s[0], s[m - 1]};
    for (std::size_t i = 0; i + m <= n; ++i)
        for (std::size_t j = i + m - 1; j < n; ++j)
            if (s[j] - s[i] < best.hi - best.lo) best = {s[i], s[j]};
    return best;
}

}  // namespace

TEST_CASE("rope_interval: central null-prior mass and guards") {
    const PriorEntry null_ln{PriorFamily1d::lognormal, 1.0, 10.0};
    const Interval r = rope_interval(null_ln, 0.80);
    CHECK_THAT(r.lo, Catch::Matchers::WithinAbs(0.0063411, 1e-7));
    CHECK_THAT(r.hi, Catch::Matchers::WithinAbs(1.56139, 1e-5));
    CHECK_THAT(r.lo, Catch::Matchers::WithinRel(prior_quantile(null_ln, 0.1), 1e-12));
    CHECK_THAT(r.hi, Catch::Matchers::WithinRel(prior_quantile(null_ln, 0.9), 1e-12));

    // levels nest
    const Interval narrow = rope_interval(null_ln, 0.50);
    CHECK(narrow.lo > r.lo);
    CHECK(narrow.hi < r.hi);

    // gamma-family null prior: endpoints carry the requested central mass
    const PriorEntry null_gm{PriorFamily1d::gamma, 1.0, 10.0};
    const Interval g = rope_interval(null_gm, 0.80);
    CHECK_THAT(g.lo, Catch::Matchers::WithinRel(prior_quantile(null_gm, 0.1), 1e-9));
    CHECK_THAT(g.hi, Catch::Matchers::WithinRel(prior_quantile(null_gm, 0.9), 1e-9));

    CHECK_THROWS_AS(rope_interval({PriorFamily1d::lognormal, 2.0, 10.0}, 0.8), std::invalid_argument);
    CHECK_THROWS_AS(rope_interval({PriorFamily1d::fixed, 1.0, 0.0}, 0.8), std::invalid_argument);
    CHECK_THROWS_AS(rope_interval(null_ln, 0.0), std::invalid_argument);
    CHECK_THROWS_AS(rope_interval(null_ln, 1.0), std::invalid_argument);
}

TEST_CASE("eti: grid anchors and coverage") {
    // 0..100 evenly: type-7 quantiles interpolate exactly
    std::vector<double> grid(101);
    for (int i = 0; i <= 100; ++i) grid[static_cast<std::size_t>(i)] = static_cast<double>(i);
    const Interval e = eti(grid, 0.90);
    CHECK_THAT(e.lo, Catch::Matchers::WithinAbs(5.0, 1e-12));
    CHECK_THAT(e.hi, Catch::Matchers::WithinAbs(95.0, 1e-12));

    const Interval e80 = eti(grid, 0.80);
    CHECK_THAT(e80.lo, Catch::Matchers::WithinAbs(10.0, 1e-12));
    CHECK_THAT(e80.hi, Catch::Matchers::WithinAbs(90.0, 1e-12));

    // coverage on a large normal sample
    auto rng = make_rng(17);
    std::normal_distribution<double> normal(0.0, 1.0);
    std::vector<double> z(200000);
    for (auto& v : z) v = normal(rng);
    const Interval zi = eti(z, 0.80);
    CHECK_THAT(zi.lo, Catch::Matchers::WithinAbs(-1.2816, 0.02));
    CHECK_THAT(zi.hi, Catch::Matchers::WithinAbs(1.2816, 0.02));

    CHECK_THROWS_AS(eti(std::vector<double>(50, 1.0), 0.8), std::invalid_argument);
    CHECK_THROWS_AS(eti(grid, 1.0), std::invalid_argument);
}

TEST_CASE("hdi: brute-force oracle, coverage, skew behaviour") {
    auto rng = make_rng(88);
    std::normal_distribution<double> normal(0.0, 1.0);
    std::lognormal_distribution<double> lnorm(0.0, 1.0);

    for (int rep = 0; rep < 20; ++rep) {
        const std::size_t n = 100 + static_cast<std::size_t>(rng() % 200);
        const double level = 0.5 + 0.4 * uniform01_open(rng);
        std::vector<double> s(n);
        const bool skew = rep % 2 == 0;
        for (auto& v : s) v = skew ? lnorm(rng) : normal(rng);
        const Interval fast = hdi(s, level);
        const Interval brute = hdi_brute(s, level);
        CHECK(fast.lo == brute.lo);
        CHECK(fast.hi == brute.hi);
        // contains at least the requested mass
        std::size_t inside = 0;
        for (double v : s) inside += (v >= fast.lo && v <= fast.hi);
        CHECK(static_cast<double>(inside) >= std::ceil(level * static_cast<double>(n)));
    }

    // for a right-skewed density the HDI sits left of the ETI
    std::vector<double> s(100000);
    for (auto& v : s) v = lnorm(rng);
    const Interval h = hdi(s, 0.80);
    const Interval e = eti(s, 0.80);
    CHECK(h.lo < e.lo);
    CHECK(h.hi < e.hi);
    CHECK(width(h) < width(e));

    CHECK_THROWS_AS(hdi(std::vector<double>(99, 1.0), 0.8), std::invalid_argument);
}

TEST_CASE("single_outcome: containment, disjoint, overlap, boundaries") {
    const Interval rope{0.5, 1.5};
    CHECK(single_outcome({0.8, 1.2}, rope) == InterimOutcome::accepted);
    CHECK(single_outcome({0.5, 1.5}, rope) == InterimOutcome::accepted);   // exact match
    CHECK(single_outcome({1.6, 2.0}, rope) == InterimOutcome::rejected);
    CHECK(single_outcome({0.1, 0.4}, rope) == InterimOutcome::rejected);
    CHECK(single_outcome({1.2, 2.0}, rope) == InterimOutcome::undecided);
    CHECK(single_outcome({0.1, 0.8}, rope) == InterimOutcome::undecided);
    CHECK(single_outcome({0.1, 2.0}, rope) == InterimOutcome::undecided);  // CI covers ROPE
    // touching boundary counts as overlap, not rejection
    CHECK(single_outcome({1.5, 2.0}, rope) == InterimOutcome::undecided);
    CHECK(single_outcome({0.1, 0.5}, rope) == InterimOutcome::undecided);
    CHECK_THROWS_AS(single_outcome({2.0, 1.0}, rope), std::invalid_argument);
}

TEST_CASE("combine: exhaustive truth table") {
    const auto A = InterimOutcome::accepted;
    const auto R = InterimOutcome::rejected;
    const auto U = InterimOutcome::undecided;

    struct Row {
        InterimOutcome nu, gamma;
        bool opt1, opt2, opt3;
    };
    // signal iff: opt1 -- any rejected or both undecided; opt2 -- a rejection
    // paired with rejected/undecided; opt3 -- both rejected
    const Row table[] = {
        {A, A, false, false, false},
        {A, U, false, false, false},
        {A, R, true, false, false},
        {U, A, false, false, false},
        {U, U, true, false, false},
        {U, R, true, true, false},
        {R, A, true, false, false},
        {R, U, true, true, false},
        {R, R, true, true, true},
    };
    for (const auto& row : table) {
        CHECK(combine(row.nu, row.gamma, CombinationRule::option1) == row.opt1);
        CHECK(combine(row.nu, row.gamma, CombinationRule::option2) == row.opt2);
        CHECK(combine(row.nu, row.gamma, CombinationRule::option3) == row.opt3);
    }
    // rule strictness: option3 signals imply option2, which imply option1
    for (const auto& row : table) {
        if (row.opt3) CHECK(row.opt2);
        if (row.opt2) CHECK(row.opt1);
    }
}

TEST_CASE("decide: synthetic draws drive the full decision") {
    // hand-built draws: nu concentrated far above the ROPE, gamma inside it
    auto rng = make_rng(5);
    std::normal_distribution<double> nu_d(5.0, 0.05), gm_d(0.5, 0.02);
    PosteriorDraws draws;
    draws.columns = {"nu", "gamma"};
    draws.rows = 4000;
    draws.chains = 4;
    draws.data.resize(draws.rows * 2);
    for (std::size_t r = 0; r < draws.rows; ++r) {
        draws.data[r * 2] = nu_d(rng);
        draws.data[r * 2 + 1] = gm_d(rng);
    }
    draws.ess = {4000.0, 4000.0};
    draws.rhat = {1.0, 1.0};
    draws.degenerate = {false, false};

    const PriorSpec null_spec = make_prior_spec(PriorFamily::log_log_log, {1.0, 1.0, 1.0}, 10.0);
    const TestDecision d = decide(draws, null_spec, recommended_config());
    CHECK(d.outcome_nu == InterimOutcome::rejected);
    CHECK(d.outcome_gamma == InterimOutcome::accepted);
    CHECK_FALSE(d.signal);  // option2: rejection paired with acceptance
    TestConfig opt1 = recommended_config();
    opt1.rule = CombinationRule::option1;
    CHECK(decide(draws, null_spec, opt1).signal);

    // ESS warning fires below the recommended 10000
    CHECK_FALSE(d.warnings.empty());

    PosteriorDraws no_gamma = draws;
    no_gamma.columns = {"nu", "theta"};
    CHECK_THROWS_AS(decide(no_gamma, null_spec, recommended_config()), std::invalid_argument);
}

TEST_CASE("run_test: exponential data is no-signal, shifted data signals") {
    auto rng = make_rng(404);
    McmcSettings s;
    s.chains = 4;
    s.iters_per_chain = 2000;
    s.burn_in = 1000;
    s.seed = 77;

    const PriorSpec null_spec = make_prior_spec(PriorFamily::log_log_log, {1.0, 1.0, 1.0}, 10.0);

    // strongly peaked event times around t=180 within a 365-day window
    TteDataset peaked;
    peaked.censor_time = 365.0;
    std::normal_distribution<double> peak(180.0, 10.0);
    for (int i = 0; i < 300; ++i) {
        double t = peak(rng);
        while (!(t > 0.0 && t <= 365.0)) t = peak(rng);
        peaked.times.push_back(t);
        peaked.events.push_back(1);
    }
    const PriorSpec q2 = make_prior_spec(PriorFamily::fix_log_log, {20.0, 5.5, 14.0}, 10.0);
    const TestResult peaked_res = run_test(peaked, q2, null_spec, s, recommended_config());
    CHECK(peaked_res.decision.signal);

    // constant-hazard data under the same machinery: no signal
    TteDataset expo;
    expo.censor_time = 365.0;
    const auto draws = sample_pgw(300, {3000.0, 1.0, 1.0}, rng);
    for (double t : draws) {
        const bool ev = t < 365.0;
        expo.times.push_back(ev ? t : 365.0);
        expo.events.push_back(ev);
    }
    // theta must stay free: the cohort's scale is far from the unit preset
    const PriorSpec none = make_prior_spec(PriorFamily::log_log_log, {1.0, 1.0, 1.0}, 10.0);
    const TestResult expo_res = run_test(expo, none, null_spec, s, recommended_config());
    CHECK_FALSE(expo_res.decision.signal);

    // fixed shape priors are rejected outright
    PriorSpec bad = null_spec;
    bad.nu.family = PriorFamily1d::fixed;
    CHECK_THROWS_AS(run_test(expo, bad, null_spec, s, recommended_config()), std::invalid_argument);
}
