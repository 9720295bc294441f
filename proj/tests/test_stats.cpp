#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <vector>

#include "thetasim/runner.hpp"
#include "thetasim/stats.hpp"

using namespace thetasim;
using namespace thetasim::stats;
using Catch::Matchers::WithinAbs;

namespace {

TrialEvent click(const std::string& d, double t = 1.0) { return {t, EventKind::Click, d, true, 0}; }
TrialEvent explosion(double t = 0.5) { return {t, EventKind::Explosion, "B", true, 0}; }
TrialEvent empty_arrival(const std::string& d, double t = 1.0) { return {t, EventKind::EmptyWaveArrival, d, false, 0}; }

// Quadrature oracle for the chi-square upper tail: Simpson's rule on the
// density over [x, x + 400], which exhausts the mass to far below the
// comparison tolerance for the k used here.
double chi_square_sf_quadrature(double x, int k) {
    const double a = k / 2.0;
    const double log_norm = -a * std::log(2.0) - std::lgamma(a);
    auto density = [&](double u) { return std::exp(log_norm + (a - 1.0) * std::log(u) - u / 2.0); };
    const int steps = 400000;  // even
    const double hi = x + 400.0;
    const double lo = x > 0.0 ? x : 1e-12;  // integrable singularity at 0 for k = 1
    const double h = (hi - lo) / steps;
    double sum = density(lo) + density(hi);
    for (int i = 1; i < steps; ++i) sum += density(lo + i * h) * (i % 2 == 0 ? 2.0 : 4.0);
    return sum * h / 3.0;
}

}  // namespace

TEST_CASE("tally counts one terminal outcome per trial") {
    std::vector<std::vector<TrialEvent>> logs;
    logs.push_back({click("D1")});
    logs.push_back({click("D2")});
    logs.push_back({empty_arrival("D1", 0.5), click("D2")});
    logs.push_back({explosion()});
    const Counts counts = tally(logs);
    CHECK(counts.at("D1") == 1);
    CHECK(counts.at("D2") == 2);
    CHECK(counts.at("Explosion") == 1);
}

TEST_CASE("tally of nothing is all zeros") {
    const std::vector<std::vector<TrialEvent>> logs;
    CHECK(tally(logs).empty());
}

TEST_CASE("malformed logs are reported, not mangled") {
    SECTION("two clicks") {
        std::vector<std::vector<TrialEvent>> logs;
        logs.push_back({click("D1"), click("D2", 2.0)});
        try {
            tally(logs);
            FAIL("expected MalformedLog");
        } catch (const StatsError& e) {
            CHECK(e.fault() == StatsFault::MalformedLog);
        }
    }
    SECTION("no terminal outcome") {
        std::vector<std::vector<TrialEvent>> logs;
        logs.push_back({empty_arrival("D1")});
        try {
            tally(logs);
            FAIL("expected MalformedLog");
        } catch (const StatsError& e) {
            CHECK(e.fault() == StatsFault::MalformedLog);
        }
    }
    SECTION("empty-wave absorption alone is not terminal") {
        std::vector<std::vector<TrialEvent>> logs;
        logs.push_back({{0.75, EventKind::Absorption, "B", false, 0}});
        CHECK_THROWS_AS(tally(logs), StatsError);
    }
}

TEST_CASE("wilson interval boundaries are exact") {
    const auto [lo_full, hi_full] = wilson_interval(10, 10, 2.576);
    CHECK(hi_full == 1.0);
    CHECK(lo_full > 0.0);
    const auto [lo_none, hi_none] = wilson_interval(0, 10, 2.576);
    CHECK(lo_none == 0.0);
    CHECK(hi_none < 1.0);
}

TEST_CASE("wilson interval matches an independent evaluation") {
    // Cross-checked numerically against the closed form evaluated elsewhere.
    const auto [lo, hi] = wilson_interval(50, 100, 2.576);
    CHECK_THAT(lo, WithinAbs(0.37527187431174236, 1e-12));
    CHECK_THAT(hi, WithinAbs(0.6247281256882576, 1e-12));

    const auto [lo2, hi2] = wilson_interval(3, 7, 1.0);
    CHECK_THAT(lo2, WithinAbs(0.2623087779433162, 1e-12));
    CHECK_THAT(hi2, WithinAbs(0.6126912220566838, 1e-12));
}

TEST_CASE("wilson interval always brackets the frequency") {
    TrialRng rng(77);
    for (int i = 0; i < 500; ++i) {
        const std::int64_t n = 1 + static_cast<std::int64_t>(rng.uniform01() * 10000);
        const std::int64_t count = static_cast<std::int64_t>(rng.uniform01() * (n + 1)) % (n + 1);
        const auto [lo, hi] = wilson_interval(count, n, 2.576);
        const double p = static_cast<double>(count) / static_cast<double>(n);
        REQUIRE(lo >= 0.0);
        REQUIRE(hi <= 1.0);
        REQUIRE(lo <= p + 1e-15);
        REQUIRE(p <= hi + 1e-15);
    }
}

TEST_CASE("wilson interval rejects nonsense") {
    CHECK_THROWS_AS(wilson_interval(5, 0, 2.576), StatsError);
    CHECK_THROWS_AS(wilson_interval(-1, 10, 2.576), StatsError);
    CHECK_THROWS_AS(wilson_interval(11, 10, 2.576), StatsError);
    CHECK_THROWS_AS(wilson_interval(5, 10, 0.0), StatsError);
}

TEST_CASE("chi-square survival function hits the tabulated values") {
    CHECK_THAT(chi_square_sf(6.635, 1), WithinAbs(0.01, 1e-3));  // the classic 1% point
    CHECK_THAT(chi_square_sf(6.635, 1), WithinAbs(0.009999419574, 1e-9));
    CHECK_THAT(chi_square_sf(3.841, 1), WithinAbs(0.050013683764, 1e-9));
    CHECK_THAT(chi_square_sf(2.706, 1), WithinAbs(0.099971378125, 1e-9));
    CHECK_THAT(chi_square_sf(9.210, 2), WithinAbs(0.010001702005, 1e-9));
    CHECK_THAT(chi_square_sf(11.345, 3), WithinAbs(0.009999384083, 1e-9));
    CHECK_THAT(chi_square_sf(15.086, 5), WithinAbs(0.010001124762, 1e-9));
    CHECK_THAT(chi_square_sf(1.0, 1), WithinAbs(0.317310507863, 1e-9));
    CHECK(chi_square_sf(0.0, 3) == 1.0);
}

TEST_CASE("chi-square survival function agrees with numeric integration") {
    for (const auto& [x, k] : std::vector<std::pair<double, int>>{{6.635, 1}, {2.0, 2}, {9.21, 2}, {4.5, 3}, {11.0, 5}}) {
        INFO("x = " << x << " k = " << k);
        REQUIRE_THAT(chi_square_sf(x, k), WithinAbs(chi_square_sf_quadrature(x, k), 1e-6));
    }
}

TEST_CASE("goodness of fit: perfect proportions score zero") {
    OutcomeDistribution expected;
    expected.entries = {{"D1", 0.25}, {"D2", 0.75}};
    const Counts observed = {{"D1", 25}, {"D2", 75}};
    const GofResult r = chi_square_gof(observed, expected, 100);
    CHECK(r.statistic == 0.0);
    CHECK(r.dof == 1);
    CHECK(r.p_value == 1.0);
}

TEST_CASE("an observation in a dark category is impossible, not merely unlikely") {
    OutcomeDistribution expected;
    expected.entries = {{"D1", 0.0}, {"D2", 1.0}};
    const Counts observed = {{"D1", 1}, {"D2", 99}};
    try {
        chi_square_gof(observed, expected, 100);
        FAIL("expected ImpossibleOutcome");
    } catch (const StatsError& e) {
        CHECK(e.fault() == StatsFault::ImpossibleOutcome);
    }
}

TEST_CASE("goodness of fit input validation") {
    OutcomeDistribution expected;
    expected.entries = {{"D1", 0.5}, {"D2", 0.5}};
    CHECK_THROWS_AS(chi_square_gof({{"D1", 40}, {"D2", 70}}, expected, 100), StatsError);  // counts != trials
    CHECK_THROWS_AS(chi_square_gof({{"D1", 50}, {"D2", 50}}, expected, 0), StatsError);
}

TEST_CASE("homogeneity comparison") {
    auto make_report = [](const Counts& counts, std::int64_t trials, std::uint64_t seed) {
        stats::RunReport r;
        r.experiment = ExperimentSpec::renninger();
        r.engine = "orthodox";
        r.trials = trials;
        r.seed = seed;
        r.counts = counts;
        return r;
    };
    SECTION("identical counts compare with statistic zero") {
        const auto a = make_report({{"D1", 500}, {"D2", 500}}, 1000, 1);
        const auto r = stats::compare(a, a);
        CHECK(r.statistic == 0.0);
        CHECK(r.pass);
        CHECK(r.p_value == 1.0);
    }
    SECTION("single shared category is trivially homogeneous") {
        const auto a = make_report({{"D2", 1000}}, 1000, 1);
        const auto b = make_report({{"D2", 500}}, 500, 2);
        const auto r = stats::compare(a, b);
        CHECK(r.dof == 0);
        CHECK(r.pass);
    }
    SECTION("grossly different samples fail") {
        const auto a = make_report({{"D1", 900}, {"D2", 100}}, 1000, 1);
        const auto b = make_report({{"D1", 100}, {"D2", 900}}, 1000, 2);
        CHECK_FALSE(stats::compare(a, b).pass);
    }
    SECTION("different experiments cannot be compared") {
        auto a = make_report({{"D1", 1}}, 1, 1);
        auto b = a;
        b.experiment = ExperimentSpec::mach_zehnder(0.3);
        CHECK_THROWS_AS(stats::compare(a, b), StatsError);
    }
}

TEST_CASE("partial tallies merge commutatively and associatively") {
    Counts a = {{"D1", 3}, {"D2", 7}};
    Counts b = {{"D2", 5}, {"Explosion", 2}};
    Counts c = {{"D1", 1}};

    Counts ab = a;
    merge_counts(ab, b);
    Counts ba = b;
    merge_counts(ba, a);
    CHECK(ab == ba);

    Counts ab_c = ab;
    merge_counts(ab_c, c);
    Counts bc = b;
    merge_counts(bc, c);
    Counts a_bc = a;
    merge_counts(a_bc, bc);
    CHECK(ab_c == a_bc);
}

TEST_CASE("p-values behave under the null hypothesis") {
    // 200 independent true-distribution runs: tail mass at p < 0.01 stays
    // within a generous binomial bound.
    int small_p = 0;
    for (std::uint64_t seed = 0; seed < 200; ++seed) {
        RunConfig cfg;
        cfg.experiment = ExperimentSpec::renninger();
        cfg.engine = "orthodox";
        cfg.trials = 20000;
        cfg.seed = 9000 + seed;
        const auto report = run_simulation(cfg);
        if (report.gof.p_value < 0.01) ++small_p;
    }
    CHECK(small_p <= 8);
}
