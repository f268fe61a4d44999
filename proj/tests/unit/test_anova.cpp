#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>

#include "ofesim/anova.hpp"
#include "ofesim/errors.hpp"

using namespace ofesim;

namespace {

constexpr std::size_t kD = static_cast<std::size_t>(AnovaFactor::Design);
constexpr std::size_t kB = static_cast<std::size_t>(AnovaFactor::Bandwidth);

// Frame over Design x Bandwidth only; the other factors have a single level.
FactorFrame two_way(const std::vector<double>& y, const std::vector<int>& a, const std::vector<int>& b, int na,
                    int nb) {
    FactorFrame f;
    f.response = y;
    for (auto& lv : f.level) lv.assign(y.size(), 0);
    f.level[kD] = a;
    f.level[kB] = b;
    for (int i = 0; i < na; ++i) f.level_names[kD].push_back("a" + std::to_string(i));
    for (int i = 0; i < nb; ++i) f.level_names[kB].push_back("b" + std::to_string(i));
    return f;
}

const std::vector<AnovaTerm> kTwoWay{{AnovaFactor::Design}, {AnovaFactor::Bandwidth},
                                     {AnovaFactor::Design, AnovaFactor::Bandwidth}};

std::vector<ScenarioResult> synthetic_results(ResponseKind response, int replicates, std::uint64_t seed,
                                              bool drop_matern = false) {
    std::mt19937_64 gen(seed);
    std::lognormal_distribution<double> noise(0.0, 1.0);
    std::vector<ScenarioResult> rs;
    const int k = coefficient_count(response);
    for (auto d : {DesignKind::Randomised, DesignKind::Systematic})
        for (auto p : {BandwidthPolicy::fixed(5), BandwidthPolicy::fixed(9), BandwidthPolicy::aicc()})
            for (auto c : {SpatialKind::NoSpatial, SpatialKind::Ar1Ar1, SpatialKind::Matern})
                for (double eta : {1.0, 0.1})
                    for (int r = 0; r < replicates; ++r) {
                        if (drop_matern && c == SpatialKind::Matern) continue;
                        ScenarioResult s;
                        s.design = d;
                        s.policy = p;
                        s.covariance = c;
                        s.eta = eta;
                        s.response = response;
                        s.replicate = r;
                        for (int j = 0; j < k; ++j) s.mse.push_back(noise(gen) * std::pow(10.0, -3.0 * j));
                        rs.push_back(s);
                    }
    return rs;
}

}  // namespace

TEST_CASE("two-way table against cell means") {
    // 2 x 2 with two replicates per cell
    const std::vector<double> y{1, 3, 4, 6, 5, 9, 2, 2};
    const std::vector<int> a{0, 0, 0, 0, 1, 1, 1, 1};
    const std::vector<int> b{0, 0, 1, 1, 0, 0, 1, 1};
    const AnovaTable t = anova_fit(two_way(y, a, b, 2, 2), kTwoWay);
    // grand 4; A means 3.5, 4.5; B means 4.5, 3.5; cells 2, 5, 7, 2
    const double ss_a = 4 * (0.25 + 0.25);
    const double ss_b = 4 * (0.25 + 0.25);
    double ss_ab = 0.0;
    const double cell[2][2] = {{2, 5}, {7, 2}};
    const double ma[2] = {3.5, 4.5}, mb[2] = {4.5, 3.5};
    for (int i = 0; i < 2; ++i)
        for (int j = 0; j < 2; ++j) ss_ab += 2 * std::pow(cell[i][j] - ma[i] - mb[j] + 4.0, 2);
    const double ss_e = 2 + 2 + 8 + 0;
    CHECK(t.row("Design").sum_sq == doctest::Approx(ss_a).epsilon(1e-9));
    CHECK(t.row("Bandwidth").sum_sq == doctest::Approx(ss_b).epsilon(1e-9));
    CHECK(t.row("Design:Bandwidth").sum_sq == doctest::Approx(ss_ab).epsilon(1e-9));
    CHECK(t.residual.sum_sq == doctest::Approx(ss_e).epsilon(1e-9));
    CHECK(t.residual.df == 4);
    CHECK(t.row("Design").f_value == doctest::Approx(ss_a / (ss_e / 4)).epsilon(1e-9));
}

TEST_CASE("two-way table against a reference fit") {
    const std::vector<double> y{3.1, 2.7, 3.5, 4.2, 4.9, 4.4, 5.0, 5.6, 5.1,
                                2.2, 2.9, 2.4, 3.8, 3.3, 4.1, 6.3, 6.0, 6.8};
    std::vector<int> a, b;
    for (int i = 0; i < 18; ++i) {
        a.push_back(i < 9 ? 0 : 1);
        b.push_back((i % 9) / 3);
    }
    const AnovaTable t = anova_fit(two_way(y, a, b, 2, 3), kTwoWay);
    CHECK(t.row("Design").df == 1);
    CHECK(t.row("Bandwidth").df == 2);
    CHECK(t.row("Design:Bandwidth").df == 2);
    CHECK(t.residual.df == 12);
    CHECK(t.row("Design").sum_sq == doctest::Approx(0.027222222222222505).epsilon(1e-9));
    CHECK(t.row("Bandwidth").sum_sq == doctest::Approx(27.134444444444465).epsilon(1e-9));
    CHECK(t.row("Design:Bandwidth").sum_sq == doctest::Approx(3.3211111111111147).epsilon(1e-9));
    CHECK(t.residual.sum_sq == doctest::Approx(1.6999999999999995).epsilon(1e-9));
    CHECK(t.row("Design").p_value == doctest::Approx(0.6689149947808506).epsilon(1e-8));
    CHECK(t.row("Bandwidth").p_value == doctest::Approx(4.199755415920847e-08).epsilon(1e-6));
    CHECK(t.row("Design:Bandwidth").p_value == doctest::Approx(0.0015062412495812894).epsilon(1e-7));
    CHECK(t.row("Residuals").df == 12);
    CHECK_THROWS_AS(t.row("Covariance"), InvalidInput);
}

TEST_CASE("constant response has no variation to attribute") {
    const std::vector<double> y(8, 4.2);
    const std::vector<int> a{0, 0, 0, 0, 1, 1, 1, 1};
    const std::vector<int> b{0, 0, 1, 1, 0, 0, 1, 1};
    const AnovaTable t = anova_fit(two_way(y, a, b, 2, 2), kTwoWay);
    for (const auto& r : t.terms) {
        CHECK(r.sum_sq == 0.0);
        CHECK(r.f_value == 0.0);
        CHECK(r.p_value == 1.0);
    }
    CHECK(t.residual.sum_sq == 0.0);
}

TEST_CASE("sums of squares decompose the total and respect invariances") {
    const auto rs = synthetic_results(ResponseKind::Quadratic, 4, 77);
    const FactorFrame frame = build_frame(rs, ResponseKind::Quadratic);
    const AnovaTable t = anova_fit(frame);
    double sum = t.residual.sum_sq;
    int df = t.residual.df;
    for (const auto& r : t.terms) {
        sum += r.sum_sq;
        df += r.df;
    }
    CHECK(sum == doctest::Approx(t.total_ss).epsilon(1e-8));
    CHECK(df == t.total_df);

    SUBCASE("shifting the response") {
        FactorFrame shifted = frame;
        for (auto& v : shifted.response) v += 12.5;
        const AnovaTable s = anova_fit(shifted);
        for (std::size_t i = 0; i < t.terms.size(); ++i)
            CHECK(s.terms[i].sum_sq == doctest::Approx(t.terms[i].sum_sq).epsilon(1e-8));
    }
    SUBCASE("permuting observations") {
        std::vector<std::size_t> perm(frame.size());
        for (std::size_t i = 0; i < perm.size(); ++i) perm[i] = i;
        std::shuffle(perm.begin(), perm.end(), std::mt19937_64(3));
        FactorFrame p = frame;
        for (std::size_t i = 0; i < perm.size(); ++i) {
            p.response[i] = frame.response[perm[i]];
            for (std::size_t f = 0; f < kAnovaFactorCount; ++f) p.level[f][i] = frame.level[f][perm[i]];
        }
        const AnovaTable s = anova_fit(p);
        for (std::size_t i = 0; i < t.terms.size(); ++i)
            CHECK(s.terms[i].sum_sq == doctest::Approx(t.terms[i].sum_sq).epsilon(1e-8));
    }
    SUBCASE("reordering terms in a balanced frame") {
        // main effects stay ahead of interactions; order within each tier is free
        auto terms = default_anova_terms();
        std::reverse(terms.begin(), terms.begin() + 5);
        std::reverse(terms.begin() + 5, terms.end());
        const AnovaTable s = anova_fit(frame, terms);
        for (const auto& r : t.terms) CHECK(s.row(r.term).sum_sq == doctest::Approx(r.sum_sq).epsilon(1e-8));
    }
}

TEST_CASE("frame layout and degrees of freedom") {
    const auto lin = synthetic_results(ResponseKind::Linear, 100, 1);
    CHECK(build_frame(lin, ResponseKind::Linear).size() == 7200);
    const auto quad = synthetic_results(ResponseKind::Quadratic, 100, 2);
    const FactorFrame frame = build_frame(quad, ResponseKind::Quadratic);
    CHECK(frame.size() == 10800);
    CHECK(frame.n_levels(AnovaFactor::Bandwidth) == 3);
    CHECK(frame.level_names[kB].back() == "AICc");
    const AnovaTable t = anova_fit(frame);
    CHECK(t.terms.size() == 15);
    CHECK(t.row("Design").df == 1);
    CHECK(t.row("Bandwidth").df == 2);
    CHECK(t.row("Covariance").df == 2);
    CHECK(t.row("Coefficients").df == 2);
    CHECK(t.row("Correlation").df == 1);
    CHECK(t.row("Design:Bandwidth").df == 2);
    CHECK(t.row("Covariance:Coefficients").df == 4);
    CHECK(t.row("Coefficients:Correlation").df == 2);
    CHECK(t.total_df == 10799);
    // intercept, 8 main-effect columns and 25 interaction columns
    CHECK(t.residual.df == 10800 - 34);
    CHECK(term_name({AnovaFactor::Design, AnovaFactor::Covariance}) == "Design:Covariance");
}

TEST_CASE("incomplete frames are rejected") {
    const auto rs = synthetic_results(ResponseKind::Linear, 2, 5, true);
    CHECK_THROWS_AS(build_frame(rs, ResponseKind::Linear), InvalidInput);
    auto one_eta = synthetic_results(ResponseKind::Linear, 2, 5);
    std::erase_if(one_eta, [](const ScenarioResult& r) { return r.eta == 0.1; });
    CHECK_THROWS_AS(build_frame(one_eta, ResponseKind::Linear), InvalidInput);

    const std::vector<double> y{1, 2, 3, 4, 5};
    const std::vector<int> a{0, 0, 1, 1, 1};
    const std::vector<int> b{0, 1, 0, 1, 1};
    CHECK_THROWS_AS(anova_fit(two_way(y, a, b, 2, 2), kTwoWay), InvalidInput);
}

TEST_CASE("F distribution tail") {
    for (double f : {0.1, 0.5, 1.0, 3.0, 40.0}) {
        const double closed = 1.0 - 2.0 / std::numbers::pi * std::atan(std::sqrt(f));
        CHECK(f_upper_tail(f, 1, 1) == doctest::Approx(closed).epsilon(1e-10));
    }
    CHECK(f_upper_tail(1.0, 1, 1) == doctest::Approx(0.5).epsilon(1e-12));
    CHECK(f_upper_tail(4.9646, 1, 10) == doctest::Approx(0.05000005219291376).epsilon(1e-9));
    CHECK(f_upper_tail(3.2, 2, 7) == doctest::Approx(0.10303300010931185).epsilon(1e-9));
    CHECK(f_upper_tail(0.5, 4, 30) == doctest::Approx(0.7358865362670385).epsilon(1e-9));
    CHECK(f_upper_tail(12.0, 3, 5) == doctest::Approx(0.010107916771243173).epsilon(1e-9));
    CHECK(f_upper_tail(1.7, 2, 7200) == doctest::Approx(0.18275684282333587).epsilon(1e-9));
    CHECK(f_upper_tail(0.0, 3, 5) == 1.0);
    double prev = 1.0;
    for (double f = 0.25; f < 20; f += 0.25) {
        const double p = f_upper_tail(f, 3, 40);
        CHECK(p < prev);
        prev = p;
    }
}

TEST_CASE("regularised incomplete beta") {
    CHECK(incomplete_beta(2.5, 3.5, 0.3) == doctest::Approx(0.29675298929566646).epsilon(1e-10));
    CHECK(incomplete_beta(0.5, 0.5, 0.9) == doctest::Approx(0.7951672353008665).epsilon(1e-10));
    CHECK(incomplete_beta(10, 20, 0.4) == doctest::Approx(0.7853183897628262).epsilon(1e-10));
    CHECK(incomplete_beta(1, 1, 0.25) == doctest::Approx(0.25).epsilon(1e-12));
    CHECK(incomplete_beta(3, 4, 0.0) == 0.0);
    CHECK(incomplete_beta(3, 4, 1.0) == 1.0);
    // symmetry I_x(a, b) = 1 - I_{1-x}(b, a)
    CHECK(incomplete_beta(2.0, 7.0, 0.35) == doctest::Approx(1.0 - incomplete_beta(7.0, 2.0, 0.65)).epsilon(1e-12));
}
