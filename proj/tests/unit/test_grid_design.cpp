#include <doctest.h>

#include <algorithm>
#include <map>

#include "ofesim/errors.hpp"
#include "ofesim/grid_design.hpp"

using namespace ofesim;

TEST_CASE("grid enumerates rows within ranges") {
    const FieldGrid g = build_grid(2, 3);
    REQUIRE(g.size() == 6);
    const std::vector<PlotCoord> expected{{1, 1}, {2, 1}, {1, 2}, {2, 2}, {1, 3}, {2, 3}};
    CHECK(g.coords() == expected);
    for (std::size_t i = 0; i < g.size(); ++i) CHECK(g.index(g.coord(i).row, g.coord(i).range) == i);
}

TEST_CASE("published field has 1860 plots") {
    const FieldGrid g = build_grid(93, 20);
    CHECK(g.size() == 1860);
    CHECK(g.coord(1859) == PlotCoord{93, 20});
}

TEST_CASE("single plot grid") {
    const FieldGrid g = build_grid(1, 1);
    CHECK(g.size() == 1);
    CHECK(g.coord(0) == PlotCoord{1, 1});
}

TEST_CASE("grid rejects non-positive dimensions") {
    CHECK_THROWS_AS(build_grid(0, 5), InvalidInput);
    CHECK_THROWS_AS(build_grid(5, -1), InvalidInput);
    CHECK_THROWS_AS(build_grid(2, 2).index(3, 1), InvalidInput);
}

TEST_CASE("treatment levels must increase strictly") {
    CHECK_NOTHROW(TreatmentLevels{}.validate());
    CHECK_THROWS_AS(TreatmentLevels{{5.0}}.validate(), InvalidInput);
    CHECK_THROWS_AS((TreatmentLevels{{0.0, 35.0, 35.0}}.validate()), InvalidInput);
    CHECK_THROWS_AS((TreatmentLevels{{70.0, 35.0}}.validate()), InvalidInput);
    // the 75 kg/ha variant stays expressible
    CHECK_NOTHROW((TreatmentLevels{{0.0, 35.0, 75.0, 105.0, 140.0}}.validate()));
}

TEST_CASE("systematic plan cycles ascending levels and ignores the rng") {
    const FieldGrid g = build_grid(93, 20);
    Rng a(1), b(999);
    const DesignPlan p = allocate_treatments(g, TreatmentLevels{}, DesignKind::Systematic, a);
    const DesignPlan q = allocate_treatments(g, TreatmentLevels{}, DesignKind::Systematic, b);
    CHECK(p.rate == q.rate);
    CHECK(a.next_u64() == Rng(1).next_u64());
    CHECK(p.replicate_blocks == 4);
    CHECK(p.strips_per_block == 5);
    const double rates[] = {0, 35, 70, 105, 140};
    for (int j = 1; j <= 20; ++j) CHECK(p.range_rate[static_cast<std::size_t>(j - 1)] == rates[(j - 1) % 5]);
}

TEST_CASE("every plot in a strip carries the strip's rate") {
    const FieldGrid g = build_grid(7, 10);
    Rng rng(3);
    for (DesignKind kind : {DesignKind::Systematic, DesignKind::Randomised}) {
        const DesignPlan p = allocate_treatments(g, TreatmentLevels{}, kind, rng);
        for (std::size_t i = 0; i < g.size(); ++i) {
            CHECK(p.rate[i] == p.range_rate[static_cast<std::size_t>(g.coord(i).range - 1)]);
        }
        std::map<double, int> count;
        for (double r : p.rate) ++count[r];
        CHECK(count.size() == 5);
        for (const auto& [rate, c] : count) CHECK(c == 7 * 2);
    }
}

TEST_CASE("randomised blocks are permutations of the levels") {
    const FieldGrid g = build_grid(3, 20);
    Rng rng(42);
    const DesignPlan p = allocate_treatments(g, TreatmentLevels{}, DesignKind::Randomised, rng);
    for (int block = 0; block < 4; ++block) {
        std::vector<double> strip(p.range_rate.begin() + block * 5, p.range_rate.begin() + block * 5 + 5);
        std::sort(strip.begin(), strip.end());
        CHECK(strip == TreatmentLevels{}.rates);
    }
    const FieldGrid one = build_grid(4, 5);
    Rng r2(5);
    auto single = allocate_treatments(one, TreatmentLevels{}, DesignKind::Randomised, r2).range_rate;
    std::sort(single.begin(), single.end());
    CHECK(single == TreatmentLevels{}.rates);
}

TEST_CASE("randomised allocation is reproducible") {
    const FieldGrid g = build_grid(93, 20);
    Rng a(77), b(77);
    CHECK(allocate_treatments(g, TreatmentLevels{}, DesignKind::Randomised, a).rate ==
          allocate_treatments(g, TreatmentLevels{}, DesignKind::Randomised, b).rate);
}

TEST_CASE("each level reaches range 1 with frequency 1/5") {
    const FieldGrid g = build_grid(1, 20);
    Rng rng(2024);
    std::map<double, int> first;
    const int draws = 10000;
    for (int i = 0; i < draws; ++i) ++first[allocate_treatments(g, TreatmentLevels{}, DesignKind::Randomised, rng).range_rate[0]];
    REQUIRE(first.size() == 5);
    for (const auto& [rate, c] : first) CHECK(std::abs(c / double(draws) - 0.2) < 0.02);
}

TEST_CASE("ranges must divide into level blocks") {
    Rng rng(1);
    CHECK_THROWS_AS(allocate_treatments(build_grid(3, 12), TreatmentLevels{}, DesignKind::Systematic, rng), InvalidInput);
}

TEST_CASE("design kind names round-trip") {
    for (DesignKind k : {DesignKind::Randomised, DesignKind::Systematic}) CHECK(parse_design_kind(to_string(k)) == k);
    CHECK_THROWS_AS(parse_design_kind("latin"), InvalidInput);
}
