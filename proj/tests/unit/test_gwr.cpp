#include <doctest.h>

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <numbers>
#include <vector>

#include "ofesim/errors.hpp"
#include "ofesim/gwr.hpp"
#include "ofesim/rng.hpp"

using namespace ofesim;

namespace {

// Solves (Z^T W Z) beta = Z^T W y with partial-pivot elimination in long double.
std::vector<long double> normal_equations(const std::vector<std::vector<double>>& z, const std::vector<double>& y,
                                          const std::vector<double>& w) {
    const std::size_t p = z[0].size();
    std::vector<std::vector<long double>> a(p, std::vector<long double>(p + 1, 0.0L));
    for (std::size_t i = 0; i < y.size(); ++i) {
        for (std::size_t r = 0; r < p; ++r) {
            for (std::size_t c = 0; c < p; ++c) a[r][c] += w[i] * z[i][r] * (long double)z[i][c];
            a[r][p] += w[i] * z[i][r] * (long double)y[i];
        }
    }
    for (std::size_t col = 0; col < p; ++col) {
        std::size_t piv = col;
        for (std::size_t r = col + 1; r < p; ++r)
            if (std::fabs(a[r][col]) > std::fabs(a[piv][col])) piv = r;
        std::swap(a[piv], a[col]);
        for (std::size_t r = 0; r < p; ++r) {
            if (r == col) continue;
            const long double f = a[r][col] / a[col][col];
            for (std::size_t c = col; c <= p; ++c) a[r][c] -= f * a[col][c];
        }
    }
    std::vector<long double> beta(p);
    for (std::size_t r = 0; r < p; ++r) beta[r] = a[r][p] / a[r][r];
    return beta;
}

// (Z^T W Z)^{-1} column q of Z^T W, dotted with z_q: the hat entry S_qq.
long double hat_entry(const std::vector<std::vector<double>>& z, const std::vector<double>& w, std::size_t q) {
    std::vector<double> e(z.size(), 0.0);
    e[q] = 1.0;
    const auto coef = normal_equations(z, e, w);
    long double s = 0.0L;
    for (std::size_t j = 0; j < coef.size(); ++j) s += coef[j] * z[q][j];
    return s;
}

struct Toy {
    FieldGrid grid;
    std::vector<double> rates;
    Eigen::VectorXd y;
};

Toy toy_trial(int rows, int ranges, ResponseKind basis, std::uint64_t seed, double noise) {
    Toy t{FieldGrid(rows, ranges), {}, {}};
    Rng rng(seed);
    const DesignPlan plan = allocate_treatments(t.grid, TreatmentLevels{}, DesignKind::Randomised, rng);
    t.rates = plan.rate;
    t.y.resize(static_cast<Eigen::Index>(t.grid.size()));
    for (std::size_t i = 0; i < t.grid.size(); ++i) {
        const double n = t.rates[i];
        const double r = t.grid.coord(i).row;
        double v = 65.0 + 0.3 * r + (0.05 + 0.001 * t.grid.coord(i).range) * n;
        if (basis == ResponseKind::Quadratic) v += -0.0003 * n * n;
        t.y(static_cast<Eigen::Index>(i)) = v + noise * rng.normal();
    }
    return t;
}

}  // namespace

TEST_CASE("gaussian kernel values") {
    const FieldGrid g(93, 20);
    const PlotCoord q{10, 5};
    const Eigen::VectorXd w = gaussian_weights(q, g.coords(), 3.0);
    CHECK(w(static_cast<Eigen::Index>(g.index(10, 5))) == 1.0);
    CHECK(w(static_cast<Eigen::Index>(g.index(13, 5))) == doctest::Approx(std::exp(-0.5)).epsilon(1e-14));
    CHECK(w(static_cast<Eigen::Index>(g.index(10, 8))) == doctest::Approx(std::exp(-0.5)).epsilon(1e-14));
    CHECK(w(static_cast<Eigen::Index>(g.index(13, 9))) == doctest::Approx(std::exp(-25.0 / 18.0)).epsilon(1e-14));
    const Eigen::VectorXd flat = gaussian_weights(q, g.coords(), 1e6);
    CHECK(flat.minCoeff() > 1.0 - 1e-6);
    CHECK(flat.maxCoeff() == 1.0);
    CHECK_THROWS_AS(KernelSpec{0.0}.validate(), InvalidInput);
    CHECK_THROWS_AS(KernelSpec{-1.0}.validate(), InvalidInput);
    CHECK_THROWS_AS(KernelSpec{std::numeric_limits<double>::quiet_NaN()}.validate(), InvalidInput);
}

TEST_CASE("design matrix bases") {
    const std::vector<double> n{0.0, 35.0, 140.0};
    const Eigen::MatrixXd lin = design_matrix(n, ResponseKind::Linear);
    CHECK(lin.cols() == 2);
    CHECK(lin(2, 0) == 1.0);
    CHECK(lin(2, 1) == 140.0);
    const Eigen::MatrixXd quad = design_matrix(n, ResponseKind::Quadratic);
    CHECK(quad.cols() == 3);
    CHECK(quad(1, 2) == 1225.0);
}

TEST_CASE("local fit agrees with weighted normal equations") {
    for (auto basis : {ResponseKind::Linear, ResponseKind::Quadratic}) {
        const Toy t = toy_trial(12, 10, basis, 17, 1.0);
        const Eigen::MatrixXd z = design_matrix(t.rates, basis);
        for (std::size_t q : {std::size_t{0}, std::size_t{37}, t.grid.size() - 1}) {
            const Eigen::VectorXd w = gaussian_weights(t.grid.coord(q), t.grid.coords(), 2.5);
            const LocalFit f = local_fit(t.y, z, w, static_cast<Eigen::Index>(q));

            std::vector<std::vector<double>> zz(t.grid.size());
            std::vector<double> yy(t.grid.size()), ww(t.grid.size());
            for (std::size_t i = 0; i < t.grid.size(); ++i) {
                for (Eigen::Index j = 0; j < z.cols(); ++j) zz[i].push_back(z(static_cast<Eigen::Index>(i), j));
                yy[i] = t.y(static_cast<Eigen::Index>(i));
                ww[i] = w(static_cast<Eigen::Index>(i));
            }
            const auto ref = normal_equations(zz, yy, ww);
            for (Eigen::Index j = 0; j < z.cols(); ++j) {
                const double scale = std::max(1.0, std::fabs((double)ref[j]));
                CHECK(std::fabs(f.beta(j) - (double)ref[j]) / scale < 1e-9);
            }
            CHECK(f.hat == doctest::Approx((double)hat_entry(zz, ww, q)).epsilon(1e-9));
        }
    }
}

TEST_CASE("local fit interpolates an exact quadratic") {
    const std::vector<double> n{0.0, 35.0, 70.0, 105.0, 140.0};
    Eigen::VectorXd y(5);
    for (int i = 0; i < 5; ++i) y(i) = 1.0 + 2.0 * n[i] + 0.0 * n[i] * n[i];
    const Eigen::MatrixXd z = design_matrix(n, ResponseKind::Quadratic);
    const Eigen::VectorXd w = Eigen::VectorXd::Constant(5, 0.7);
    const LocalFit f = local_fit(y, z, w, 2);
    CHECK(f.beta(0) == doctest::Approx(1.0).epsilon(1e-9));
    CHECK(f.beta(1) == doctest::Approx(2.0).epsilon(1e-9));
    CHECK(std::fabs(f.beta(2)) < 1e-12);
}

TEST_CASE("uniform weights give ordinary least squares and weights are scale free") {
    const Toy t = toy_trial(8, 10, ResponseKind::Linear, 3, 2.0);
    const Eigen::MatrixXd z = design_matrix(t.rates, ResponseKind::Linear);
    const Eigen::VectorXd ones = Eigen::VectorXd::Ones(z.rows());
    const LocalFit f = local_fit(t.y, z, ones, 0);
    const Eigen::VectorXd ols = z.colPivHouseholderQr().solve(t.y);
    CHECK(f.beta(0) == doctest::Approx(ols(0)).epsilon(1e-10));
    CHECK(f.beta(1) == doctest::Approx(ols(1)).epsilon(1e-10));
    const LocalFit g = local_fit(t.y, z, ones * 1e-3, 0);
    CHECK(g.beta(0) == doctest::Approx(f.beta(0)).epsilon(1e-10));
    CHECK(g.beta(1) == doctest::Approx(f.beta(1)).epsilon(1e-10));
    CHECK(g.hat == doctest::Approx(f.hat).epsilon(1e-10));
}

TEST_CASE("local fit maximises the weighted gaussian likelihood") {
    const Toy t = toy_trial(6, 5, ResponseKind::Linear, 11, 1.5);
    const Eigen::MatrixXd z = design_matrix(t.rates, ResponseKind::Linear);
    const Eigen::VectorXd w = gaussian_weights(t.grid.coord(7), t.grid.coords(), 2.0);
    const LocalFit f = local_fit(t.y, z, w, 7);
    // for fixed variance the weighted log-likelihood is -1/2 sum w_i r_i^2, so compare
    // against a coordinate-free Nelder-Mead descent on the weighted residual sum
    auto loss = [&](double b0, double b1) {
        double s = 0.0;
        for (Eigen::Index i = 0; i < z.rows(); ++i) {
            const double r = t.y(i) - b0 - b1 * z(i, 1);
            s += w(i) * r * r;
        }
        return s;
    };
    // parameterise slope in units of 1/100 to keep the simplex well scaled
    std::array<std::array<double, 2>, 3> s{{{60.0, 0.0}, {70.0, 0.0}, {60.0, 10.0}}};
    auto fx = [&](const std::array<double, 2>& p) { return loss(p[0], p[1] / 100.0); };
    for (int it = 0; it < 4000; ++it) {
        std::sort(s.begin(), s.end(), [&](auto& a, auto& b) { return fx(a) < fx(b); });
        const std::array<double, 2> c{(s[0][0] + s[1][0]) / 2, (s[0][1] + s[1][1]) / 2};
        const std::array<double, 2> r{2 * c[0] - s[2][0], 2 * c[1] - s[2][1]};
        if (fx(r) < fx(s[0])) {
            const std::array<double, 2> e{3 * c[0] - 2 * s[2][0], 3 * c[1] - 2 * s[2][1]};
            s[2] = fx(e) < fx(r) ? e : r;
        } else if (fx(r) < fx(s[1])) {
            s[2] = r;
        } else {
            const std::array<double, 2> k{(c[0] + s[2][0]) / 2, (c[1] + s[2][1]) / 2};
            if (fx(k) < fx(s[2])) {
                s[2] = k;
            } else {
                for (int v = 1; v < 3; ++v)
                    for (int d = 0; d < 2; ++d) s[v][d] = (s[v][d] + s[0][d]) / 2;
            }
        }
    }
    CHECK(s[0][0] == doctest::Approx(f.beta(0)).epsilon(1e-6));
    CHECK(s[0][1] / 100.0 == doctest::Approx(f.beta(1)).epsilon(1e-6));
    CHECK(loss(f.beta(0), f.beta(1)) <= fx(s[0]) * (1 + 1e-12));
}

TEST_CASE("rank deficient window raises SingularFit with the query") {
    const std::vector<double> n(10, 70.0);
    const Eigen::MatrixXd z = design_matrix(n, ResponseKind::Linear);
    const Eigen::VectorXd y = Eigen::VectorXd::LinSpaced(10, 1.0, 10.0);
    try {
        local_fit(y, z, Eigen::VectorXd::Ones(10), 4);
        FAIL("expected SingularFit");
    } catch (const SingularFit& e) {
        CHECK(e.query() == 4);
    }
    // one strip wide window on a quadratic basis only sees one or two rates
    const FieldGrid g(20, 10);
    Rng rng(1);
    const DesignPlan plan = allocate_treatments(g, TreatmentLevels{}, DesignKind::Systematic, rng);
    const Eigen::VectorXd yy = Eigen::VectorXd::Ones(static_cast<Eigen::Index>(g.size()));
    CHECK_THROWS_AS(gwr_fit(g, plan.rate, yy, ResponseKind::Quadratic, KernelSpec{0.05}), SingularFit);
}

TEST_CASE("fast separable fit matches the per-plot reference") {
    for (auto basis : {ResponseKind::Linear, ResponseKind::Quadratic}) {
        for (double h : {1.0, 2.5, 9.0}) {
            const Toy t = toy_trial(15, 10, basis, 29, 1.0);
            const GwrFit fast = gwr_fit(t.grid, t.rates, t.y, basis, KernelSpec{h});
            const GwrFit ref = gwr_fit_direct(t.grid, t.rates, t.y, basis, KernelSpec{h});
            for (Eigen::Index j = 0; j < ref.beta_hat.cols(); ++j) {
                const double scale = std::max(1.0, ref.beta_hat.col(j).cwiseAbs().maxCoeff());
                CHECK((fast.beta_hat.col(j) - ref.beta_hat.col(j)).cwiseAbs().maxCoeff() / scale < 1e-8);
            }
            CHECK((fast.hat - ref.hat).cwiseAbs().maxCoeff() < 1e-9);
            CHECK(fast.trace_s == doctest::Approx(ref.trace_s).epsilon(1e-9));
            CHECK(fast.rss == doctest::Approx(ref.rss).epsilon(1e-9));
            CHECK(fast.aicc == doctest::Approx(ref.aicc).epsilon(1e-9));
        }
    }
}

TEST_CASE("flat kernel reduces to global least squares") {
    const Toy t = toy_trial(30, 10, ResponseKind::Linear, 5, 1.0);
    const GwrFit f = gwr_fit(t.grid, t.rates, t.y, ResponseKind::Linear, KernelSpec{1e6});
    const Eigen::MatrixXd z = design_matrix(t.rates, ResponseKind::Linear);
    const Eigen::VectorXd ols = z.colPivHouseholderQr().solve(t.y);
    CHECK((f.beta_hat.col(0).array() - ols(0)).abs().maxCoeff() < 1e-6);
    CHECK((f.beta_hat.col(1).array() - ols(1)).abs().maxCoeff() < 1e-6);
    CHECK(f.trace_s == doctest::Approx(2.0).epsilon(1e-6));

    // noise-free global curve is recovered exactly
    Eigen::VectorXd clean(z.rows());
    for (Eigen::Index i = 0; i < z.rows(); ++i) clean(i) = 65.0 + 0.05 * z(i, 1);
    const GwrFit c = gwr_fit(t.grid, t.rates, clean, ResponseKind::Linear, KernelSpec{1e6});
    CHECK((c.beta_hat.col(0).array() - 65.0).abs().maxCoeff() < 1e-8);
    CHECK((c.beta_hat.col(1).array() - 0.05).abs().maxCoeff() < 1e-10);
}

TEST_CASE("bandwidth 5 quadratic fit on the full systematic field is regular") {
    const FieldGrid g(93, 20);
    Rng rng(2);
    const DesignPlan plan = allocate_treatments(g, TreatmentLevels{}, DesignKind::Systematic, rng);
    Eigen::VectorXd y(static_cast<Eigen::Index>(g.size()));
    for (Eigen::Index i = 0; i < y.size(); ++i) {
        const double n = plan.rate[static_cast<std::size_t>(i)];
        y(i) = 65.0 + 0.05 * n - 0.0003 * n * n + rng.normal();
    }
    const GwrFit f = gwr_fit(g, plan.rate, y, ResponseKind::Quadratic, KernelSpec{5.0});
    CHECK(f.beta_hat.allFinite());
    CHECK(f.trace_s > 3.0);
    CHECK(f.trace_s < static_cast<double>(g.size()));
    CHECK(std::isfinite(f.aicc));
}

TEST_CASE("effective number of parameters shrinks as the bandwidth grows") {
    const Toy t = toy_trial(20, 10, ResponseKind::Linear, 8, 1.0);
    double prev = std::numeric_limits<double>::infinity();
    for (double h : {2.0, 5.0, 9.0, 20.0}) {
        const GwrFit f = gwr_fit(t.grid, t.rates, t.y, ResponseKind::Linear, KernelSpec{h});
        CHECK(f.trace_s < prev);
        CHECK(f.trace_s > 2.0);
        CHECK(f.tau2 == doctest::Approx(f.rss / static_cast<double>(t.grid.size())).epsilon(1e-14));
        CHECK((f.hat.array() >= -1e-12).all());
        CHECK((f.hat.array() <= 1.0 + 1e-12).all());
        prev = f.trace_s;
    }
    // with every weight equal the smoother is the OLS projection, whose trace is p
    const GwrFit flat = gwr_fit(t.grid, t.rates, t.y, ResponseKind::Linear, KernelSpec{1e7});
    CHECK(flat.trace_s == doctest::Approx(2.0).epsilon(1e-6));
}

TEST_CASE("aicc expressions") {
    const double n = 100.0, rss = 250.0, tr = 7.5;
    const double tau2 = rss / n;
    const double tail = n * std::log(2 * std::numbers::pi) + n * (n + tr) / (n - 2 - tr);
    CHECK(aicc_value(n, rss, tr, AiccFormula::Standard) == doctest::Approx(n * std::log(tau2) + tail).epsilon(1e-14));
    CHECK(aicc_value(n, rss, tr, AiccFormula::PaperLiteral) ==
          doctest::Approx(2 * n * std::log(tau2) + tail).epsilon(1e-14));
    // hand value: 100 ln 2.5 + 100 ln 2pi + 100 * 107.5 / 90.5
    CHECK(aicc_value(n, rss, tr, AiccFormula::Standard) == doctest::Approx(394.2013102150904).epsilon(1e-12));
    CHECK(std::isinf(aicc_value(n, rss, 98.0, AiccFormula::Standard)));
    CHECK(std::isinf(aicc_value(n, rss, 99.0, AiccFormula::Standard)));
    CHECK(parse_aicc_formula("paper-literal") == AiccFormula::PaperLiteral);
    CHECK(to_string(AiccFormula::Standard) == "standard");
    CHECK_THROWS_AS(parse_aicc_formula("other"), InvalidInput);
}

TEST_CASE("bandwidth policy labels") {
    CHECK(BandwidthPolicy::fixed(5).label() == "5");
    CHECK(BandwidthPolicy::fixed(9).label() == "9");
    CHECK(BandwidthPolicy::aicc().label() == "AICc");
    CHECK(BandwidthPolicy::parse("aicc") == BandwidthPolicy::aicc());
    CHECK(BandwidthPolicy::parse("AICc") == BandwidthPolicy::aicc());
    CHECK(BandwidthPolicy::parse("9") == BandwidthPolicy::fixed(9));
    CHECK_THROWS_AS(BandwidthPolicy::parse("-2"), InvalidInput);
    CHECK_THROWS_AS(BandwidthPolicy::parse("wide"), InvalidInput);
}

TEST_CASE("bandwidth minimiser") {
    const BandwidthSearch search;
    SUBCASE("increasing objective lands on the lower bound") {
        const auto s = minimise_bandwidth([](double h) { return h; }, search);
        CHECK(s.bandwidth == doctest::Approx(1.0).epsilon(0.01));
        CHECK_FALSE(s.used_scan_fallback);
    }
    SUBCASE("decreasing objective lands on the upper bound") {
        const auto s = minimise_bandwidth([](double h) { return -h; }, search);
        CHECK(s.bandwidth == doctest::Approx(93.0).epsilon(1e-3));
    }
    SUBCASE("bowl is refined to the tolerance") {
        const auto s = minimise_bandwidth([](double h) { return (h - 7.3) * (h - 7.3); }, search);
        CHECK(std::fabs(s.bandwidth - 7.3) < 0.01);
        CHECK_FALSE(s.used_scan_fallback);
        CHECK(s.evaluations > search.scan_points);
    }
    SUBCASE("two wells fall back to the best scan point") {
        auto f = [](double h) { return std::min((h - 3.0) * (h - 3.0), 0.5 + (h - 40.0) * (h - 40.0) / 100.0); };
        const auto s = minimise_bandwidth(f, search);
        CHECK(s.used_scan_fallback);
        CHECK(s.evaluations == search.scan_points);
        CHECK(std::fabs(s.bandwidth - 3.0) < 0.5);
    }
    SUBCASE("infinite values rank last") {
        auto f = [](double h) { return h < 2.0 ? std::numeric_limits<double>::infinity() : h; };
        const auto s = minimise_bandwidth(f, search);
        CHECK(s.bandwidth >= 2.0);
        CHECK(s.bandwidth < 2.3);
    }
    SUBCASE("all singular") {
        auto f = [](double) { return std::numeric_limits<double>::infinity(); };
        CHECK_THROWS_AS(minimise_bandwidth(f, search), SelectionError);
    }
    SUBCASE("bad searches") {
        BandwidthSearch b;
        b.lower = 0.0;
        CHECK_THROWS_AS(b.validate(), InvalidInput);
        b = {};
        b.upper = 0.5;
        CHECK_THROWS_AS(b.validate(), InvalidInput);
        b = {};
        b.scan_points = 2;
        CHECK_THROWS_AS(b.validate(), InvalidInput);
    }
}

TEST_CASE("aicc selection prefers wide windows when the truth is global") {
    const Toy t = toy_trial(30, 10, ResponseKind::Linear, 21, 1.0);
    Eigen::VectorXd y(static_cast<Eigen::Index>(t.grid.size()));
    Rng rng(4);
    for (Eigen::Index i = 0; i < y.size(); ++i) y(i) = 65.0 + 0.05 * t.rates[static_cast<std::size_t>(i)] + rng.normal();
    BandwidthSearch s;
    s.upper = 30.0;
    const auto sel = select_bandwidth_aicc(t.grid, t.rates, y, ResponseKind::Linear, s);
    CHECK(sel.bandwidth > 10.0);
    const GwrFit at = gwr_fit(t.grid, t.rates, y, ResponseKind::Linear, KernelSpec{sel.bandwidth});
    CHECK(at.aicc == doctest::Approx(sel.aicc).epsilon(1e-12));
    const GwrFit narrow = gwr_fit(t.grid, t.rates, y, ResponseKind::Linear, KernelSpec{2.0});
    CHECK(narrow.aicc > sel.aicc);
}

TEST_CASE("fit does not depend on the thread count") {
    const Toy t = toy_trial(40, 10, ResponseKind::Quadratic, 13, 1.0);
    const GwrFit one = gwr_fit(t.grid, t.rates, t.y, ResponseKind::Quadratic, KernelSpec{5.0}, {AiccFormula::Standard, 1});
    const GwrFit four = gwr_fit(t.grid, t.rates, t.y, ResponseKind::Quadratic, KernelSpec{5.0}, {AiccFormula::Standard, 4});
    CHECK(one.beta_hat == four.beta_hat);
    CHECK(one.hat == four.hat);
    CHECK(one.aicc == four.aicc);
}
