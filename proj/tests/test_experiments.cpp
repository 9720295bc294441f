#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <numbers>

#include "thetasim/experiments.hpp"
#include "thetasim/orthodox.hpp"

using namespace thetasim;
using Catch::Matchers::WithinAbs;

TEST_CASE("experiment geometries match the intended layouts") {
    SECTION("mach-zehnder") {
        const Circuit c = build(ExperimentSpec::mach_zehnder());
        CHECK(c.detector_indices().size() == 2);
        CHECK(c.element_index("BS1") >= 0);
        CHECK(c.element_index("BS2") >= 0);
        CHECK(c.element_index("M1") >= 0);
        CHECK(c.element_index("M2") >= 0);
    }
    SECTION("usable bomb blocks the lower arm completely") {
        const Circuit c = build(ExperimentSpec::bomb_tester(BombState::Usable));
        const int bomb = c.element_index("B");
        REQUIRE(bomb >= 0);
        CHECK(c.element(bomb).kind == ElementKind::Obstacle);
        CHECK(c.element(bomb).category == ObstacleCategory::Bomb);
        CHECK(c.element(bomb).usable);
        CHECK(c.element(bomb).transmittance == 0.0);
        // wired between the lower mirror and the recombiner
        const int seg_in = c.segment_into(bomb, 0);
        CHECK(c.element(c.segment(seg_in).from_element).id == "M2");
        const int seg_out = c.segment_from(bomb, 0);
        CHECK(c.element(c.segment(seg_out).to_element).id == "BS2");
    }
    SECTION("fake bomb is transparent, absent bomb is no element at all") {
        CHECK(build(ExperimentSpec::bomb_tester(BombState::Fake)).element(
                  build(ExperimentSpec::bomb_tester(BombState::Fake)).element_index("B")).transmittance == 1.0);
        CHECK(build(ExperimentSpec::bomb_tester(BombState::Absent)).element_index("B") == -1);
    }
    SECTION("opaque object sits between the two crystals") {
        const Circuit c = build(ExperimentSpec::induced_coherence(0.0));
        const int o = c.element_index("O");
        REQUIRE(o >= 0);
        CHECK(c.element(o).transmittance == 0.0);
        const int seg_in = c.segment_into(o, 0);
        CHECK(c.element(c.segment(seg_in).from_element).id == "NL1");
        CHECK(c.segment(seg_in).from_port == 1);  // idler output
        const int seg_out = c.segment_from(o, 0);
        CHECK(c.element(c.segment(seg_out).to_element).id == "NL2");
        CHECK(c.segment(seg_out).to_port == 1);  // idler injection
    }
    SECTION("transparent idler path omits the object") {
        CHECK(build(ExperimentSpec::induced_coherence(1.0)).element_index("O") == -1);
    }
    SECTION("fiber variant only stretches the long arm") {
        const Circuit c = build(ExperimentSpec::renninger_fiber());
        CHECK(total_delay(c, "D1") == 1.0);
        CHECK(total_delay(c, "D2") == 100.0);
    }
}

TEST_CASE("analytic distributions take the tabulated values") {
    const auto renninger = expected_distribution(ExperimentSpec::renninger());
    CHECK(renninger.prob("D1") == 0.5);
    CHECK(renninger.prob("D2") == 0.5);

    const auto mz = expected_distribution(ExperimentSpec::mach_zehnder());
    CHECK(mz.prob("D1") == 0.0);
    CHECK(mz.prob("D2") == 1.0);

    const auto usable = expected_distribution(ExperimentSpec::bomb_tester(BombState::Usable));
    CHECK(usable.prob("Explosion") == 0.5);
    CHECK(usable.prob("D1") == 0.25);
    CHECK(usable.prob("D2") == 0.25);

    const auto fake = expected_distribution(ExperimentSpec::bomb_tester(BombState::Fake));
    CHECK(fake.prob("D1") == 0.0);
    CHECK(fake.prob("D2") == 1.0);

    for (double t : {0.0, 0.25, 0.5, 0.75, 1.0}) {
        const auto d = expected_distribution(ExperimentSpec::induced_coherence(t));
        CHECK_THAT(d.prob("D1"), WithinAbs((1.0 - t) / 2.0, 1e-15));
        CHECK_THAT(d.prob("D2"), WithinAbs((1.0 + t) / 2.0, 1e-15));
    }

    const auto tilted = expected_distribution(ExperimentSpec::mach_zehnder(std::numbers::pi / 3.0));
    CHECK_THAT(tilted.prob("D1"), WithinAbs(0.25, 1e-12));  // sin^2(pi/6)
    CHECK_THAT(tilted.prob("D2"), WithinAbs(0.75, 1e-12));
}

TEST_CASE("distributions normalize across the whole parameter grid") {
    for (double t = 0.0; t <= 1.0 + 1e-9; t += 0.05)
        REQUIRE(expected_distribution(ExperimentSpec::induced_coherence(std::min(t, 1.0))).is_normalized(1e-12));
    for (double phi = 0.0; phi <= 2.0 * std::numbers::pi + 1e-9; phi += 0.05)
        REQUIRE(expected_distribution(ExperimentSpec::mach_zehnder(phi)).is_normalized(1e-12));
    for (auto bomb : {BombState::Absent, BombState::Fake, BombState::Usable})
        REQUIRE(expected_distribution(ExperimentSpec::bomb_tester(bomb)).is_normalized(1e-12));
    REQUIRE(expected_distribution(ExperimentSpec::renninger()).is_normalized(1e-12));
    REQUIRE(expected_distribution(ExperimentSpec::renninger_fiber()).is_normalized(1e-12));
}

TEST_CASE("the amplitude engine reproduces every analytic distribution independently") {
    auto agree = [](const ExperimentSpec& spec) {
        const auto expected = expected_distribution(spec);
        const auto prop = orthodox::propagate(build(spec));
        for (const auto& [label, p] : expected.entries) {
            INFO(spec.label() << " outcome " << label);
            REQUIRE_THAT(prop.distribution.prob(label), WithinAbs(p, 1e-9));
        }
        REQUIRE(prop.distribution.is_normalized(1e-9));
    };

    agree(ExperimentSpec::renninger());
    agree(ExperimentSpec::renninger_fiber());
    for (auto bomb : {BombState::Absent, BombState::Fake, BombState::Usable}) agree(ExperimentSpec::bomb_tester(bomb));
    for (double t = 0.0; t <= 1.0 + 1e-9; t += 0.05) agree(ExperimentSpec::induced_coherence(std::min(t, 1.0)));
    for (double phi = 0.0; phi <= 2.0 * std::numbers::pi + 1e-9; phi += 0.05)
        agree(ExperimentSpec::mach_zehnder(phi));
}

TEST_CASE("invalid experiment parameters are rejected at construction") {
    CHECK_THROWS_AS(ExperimentSpec::induced_coherence(1.5), ExperimentError);
    CHECK_THROWS_AS(ExperimentSpec::induced_coherence(-0.1), ExperimentError);
    CHECK_THROWS_AS(ExperimentSpec::renninger(3.0, 1.0), ExperimentError);
    CHECK_THROWS_AS(ExperimentSpec::renninger(-1.0, 3.0), ExperimentError);
    CHECK_THROWS_AS(ExperimentSpec::mach_zehnder(std::nan("")), ExperimentError);
}
