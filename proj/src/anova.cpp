#include "ofesim/anova.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cstdio>
#include <cmath>
#include <map>
#include <set>

#include "ofesim/errors.hpp"

namespace ofesim {

std::string_view to_string(AnovaFactor factor) {
    switch (factor) {
        case AnovaFactor::Design: return "Design";
        case AnovaFactor::Bandwidth: return "Bandwidth";
        case AnovaFactor::Covariance: return "Covariance";
        case AnovaFactor::Coefficients: return "Coefficients";
        case AnovaFactor::Correlation: return "Correlation";
    }
    return "?";
}

namespace {

constexpr std::size_t idx(AnovaFactor f) { return static_cast<std::size_t>(f); }

std::string policy_sort_key(const BandwidthPolicy& p) {
    // fixed bandwidths ascending, AICc last
    char buf[64];
    std::snprintf(buf, sizeof buf, "%d%024.12f", p.kind == BandwidthPolicy::Kind::Fixed ? 0 : 1, p.value);
    return buf;
}

}  // namespace

FactorFrame build_frame(std::span<const ScenarioResult> results, ResponseKind response_kind) {
    const int k = coefficient_count(response_kind);
    std::map<std::string, BandwidthPolicy> policies;
    std::set<double> etas;
    for (const auto& r : results) {
        if (r.response != response_kind) continue;
        policies.emplace(policy_sort_key(r.policy), r.policy);
        etas.insert(r.eta);
    }

    FactorFrame frame;
    frame.level_names[idx(AnovaFactor::Design)] = {"randomised", "systematic"};
    frame.level_names[idx(AnovaFactor::Covariance)] = {"NS", "AR1", "Matern"};
    for (int j = 0; j < k; ++j) frame.level_names[idx(AnovaFactor::Coefficients)].push_back("beta" + std::to_string(j));
    std::vector<BandwidthPolicy> policy_levels;
    for (const auto& [key, p] : policies) {
        policy_levels.push_back(p);
        frame.level_names[idx(AnovaFactor::Bandwidth)].push_back(p.label());
    }
    // eta levels in descending order so the first level is the weakest correlation
    std::vector<double> eta_levels(etas.rbegin(), etas.rend());
    for (double e : eta_levels) {
        char buf[32];
        std::snprintf(buf, sizeof buf, "%g", e);
        frame.level_names[idx(AnovaFactor::Correlation)].push_back(buf);
    }
    if (policy_levels.size() < 2) throw InvalidInput("ANOVA frame needs at least two bandwidth policies");
    if (eta_levels.size() < 2) throw InvalidInput("ANOVA frame needs at least two eta levels");

    // cell key: design, bandwidth, covariance, correlation (coefficient expands each result)
    std::map<std::array<int, 4>, std::size_t> counts;
    for (const auto& r : results) {
        if (r.response != response_kind) continue;
        if (static_cast<int>(r.mse.size()) != k) {
            throw SchemaError("result carries " + std::to_string(r.mse.size()) + " coefficients, expected " +
                              std::to_string(k));
        }
        const int d = r.design == DesignKind::Randomised ? 0 : 1;
        const int b = static_cast<int>(std::find(policy_levels.begin(), policy_levels.end(), r.policy) -
                                       policy_levels.begin());
        const int c = static_cast<int>(r.covariance);
        const int e = static_cast<int>(std::find(eta_levels.begin(), eta_levels.end(), r.eta) - eta_levels.begin());
        ++counts[{d, b, c, e}];
        for (int j = 0; j < k; ++j) {
            frame.response.push_back(r.ln_mse(static_cast<std::size_t>(j)));
            frame.level[idx(AnovaFactor::Design)].push_back(d);
            frame.level[idx(AnovaFactor::Bandwidth)].push_back(b);
            frame.level[idx(AnovaFactor::Covariance)].push_back(c);
            frame.level[idx(AnovaFactor::Coefficients)].push_back(j);
            frame.level[idx(AnovaFactor::Correlation)].push_back(e);
        }
    }

    std::vector<std::string> missing;
    for (int d = 0; d < 2; ++d) {
        for (int b = 0; b < static_cast<int>(policy_levels.size()); ++b) {
            for (int c = 0; c < 3; ++c) {
                for (int e = 0; e < static_cast<int>(eta_levels.size()); ++e) {
                    if (counts.count({d, b, c, e}) == 0) {
                        missing.push_back(frame.level_names[0][d] + "/bw" + frame.level_names[1][b] + "/" +
                                          frame.level_names[2][c] + "/eta" + frame.level_names[4][e]);
                    }
                }
            }
        }
    }
    if (!missing.empty()) {
        std::string msg = "incomplete factor grid for the " + std::string(to_string(response_kind)) +
                          " response; missing cells:";
        for (const auto& m : missing) msg += " " + m;
        throw InvalidInput(msg);
    }
    return frame;
}

std::string term_name(const AnovaTerm& term) {
    std::string out;
    for (std::size_t i = 0; i < term.size(); ++i) {
        if (i) out += ":";
        out += to_string(term[i]);
    }
    return out;
}

std::vector<AnovaTerm> default_anova_terms() {
    const AnovaFactor f[] = {AnovaFactor::Design, AnovaFactor::Bandwidth, AnovaFactor::Covariance,
                             AnovaFactor::Coefficients, AnovaFactor::Correlation};
    std::vector<AnovaTerm> terms;
    for (AnovaFactor a : f) terms.push_back({a});
    for (std::size_t i = 0; i < 5; ++i) {
        for (std::size_t j = i + 1; j < 5; ++j) terms.push_back({f[i], f[j]});
    }
    return terms;
}

const AnovaRow& AnovaTable::row(std::string_view term) const {
    for (const auto& r : terms) {
        if (r.term == term) return r;
    }
    if (term == "Residuals") return residual;
    throw InvalidInput("ANOVA table has no term '" + std::string(term) + "'");
}

AnovaTable anova_fit(const FactorFrame& frame) {
    const auto terms = default_anova_terms();
    return anova_fit(frame, terms);
}

AnovaTable anova_fit(const FactorFrame& frame, std::span<const AnovaTerm> terms) {
    const auto n = static_cast<Eigen::Index>(frame.size());
    for (const auto& lv : frame.level) {
        if (static_cast<Eigen::Index>(lv.size()) != n) throw SchemaError("factor columns differ in length");
    }
    if (n < 2) throw InvalidInput("ANOVA needs at least two observations");

    // balance: equal counts in every full factor cell
    std::map<std::array<int, kAnovaFactorCount>, std::size_t> cells;
    for (Eigen::Index i = 0; i < n; ++i) {
        std::array<int, kAnovaFactorCount> key{};
        for (std::size_t f = 0; f < kAnovaFactorCount; ++f) key[f] = frame.level[f][static_cast<std::size_t>(i)];
        ++cells[key];
    }
    std::size_t expected_cells = 1;
    for (std::size_t f = 0; f < kAnovaFactorCount; ++f) {
        expected_cells *= std::max<std::size_t>(1, frame.level_names[f].size());
    }
    const std::size_t per_cell = cells.begin()->second;
    if (cells.size() != expected_cells ||
        std::any_of(cells.begin(), cells.end(), [&](const auto& c) { return c.second != per_cell; })) {
        throw InvalidInput("ANOVA frame is unbalanced: cells have unequal replicate counts");
    }

    // treatment-contrast model matrix, columns grouped by term
    std::vector<std::pair<Eigen::Index, Eigen::Index>> spans;
    Eigen::Index p = 1;
    for (const auto& term : terms) {
        Eigen::Index width = 1;
        for (AnovaFactor f : term) width *= frame.n_levels(f) - 1;
        if (width < 1) throw InvalidInput("term " + term_name(term) + " has a factor with fewer than two levels");
        spans.emplace_back(p, width);
        p += width;
    }
    if (p > n) throw InvalidInput("ANOVA model has more columns than observations");
    Eigen::MatrixXd x = Eigen::MatrixXd::Zero(n, p);
    x.col(0).setOnes();
    for (std::size_t t = 0; t < terms.size(); ++t) {
        const auto& term = terms[t];
        for (Eigen::Index i = 0; i < n; ++i) {
            // column offset of this observation's dummy product, or skip when any factor sits at baseline
            Eigen::Index offset = 0;
            bool baseline = false;
            for (AnovaFactor f : term) {
                const int lv = frame.level[idx(f)][static_cast<std::size_t>(i)];
                if (lv == 0) {
                    baseline = true;
                    break;
                }
                offset = offset * (frame.n_levels(f) - 1) + (lv - 1);
            }
            if (!baseline) x(i, spans[t].first + offset) = 1.0;
        }
    }

    Eigen::VectorXd y(n);
    for (Eigen::Index i = 0; i < n; ++i) y(i) = frame.response[static_cast<std::size_t>(i)];
    const double mean = y.mean();
    Eigen::VectorXd yc = y.array() - mean;
    const double total = yc.squaredNorm();
    const double magnitude = std::max(1.0, y.cwiseAbs().maxCoeff());
    const bool degenerate = total <= static_cast<double>(n) * std::pow(1e-13 * magnitude, 2);

    const Eigen::HouseholderQR<Eigen::MatrixXd> qr(x);
    const Eigen::VectorXd rdiag = qr.matrixQR().diagonal().head(p).cwiseAbs();
    if (rdiag.minCoeff() <= 1e-10 * rdiag.maxCoeff()) {
        throw InvalidInput("ANOVA model matrix is rank deficient");
    }
    const Eigen::VectorXd effects = qr.householderQ().transpose() * yc;

    AnovaTable table;
    table.total_df = static_cast<int>(n - 1);
    table.total_ss = degenerate ? 0.0 : total;
    table.residual.term = "Residuals";
    table.residual.df = static_cast<int>(n - p);
    table.residual.sum_sq = degenerate ? 0.0 : effects.tail(n - p).squaredNorm();
    table.residual.mean_sq = table.residual.df > 0 ? table.residual.sum_sq / table.residual.df : 0.0;
    table.residual.f_value = 0.0;
    table.residual.p_value = 1.0;
    for (std::size_t t = 0; t < terms.size(); ++t) {
        AnovaRow row;
        row.term = term_name(terms[t]);
        row.df = static_cast<int>(spans[t].second);
        row.sum_sq = degenerate ? 0.0 : effects.segment(spans[t].first, spans[t].second).squaredNorm();
        row.mean_sq = row.sum_sq / row.df;
        if (table.residual.mean_sq > 0.0 && row.sum_sq > 0.0) {
            row.f_value = row.mean_sq / table.residual.mean_sq;
            row.p_value = f_upper_tail(row.f_value, row.df, table.residual.df);
        }
        table.terms.push_back(std::move(row));
    }
    return table;
}

namespace {

// Continued fraction for I_x(a, b), modified Lentz; valid for x < (a + 1) / (a + b + 2).
double beta_continued_fraction(double a, double b, double x) {
    constexpr int max_iter = 200;
    constexpr double eps = 1e-12;
    constexpr double tiny = 1e-300;
    const double qab = a + b;
    const double qap = a + 1.0;
    const double qam = a - 1.0;
    double c = 1.0;
    double d = 1.0 - qab * x / qap;
    if (std::abs(d) < tiny) d = tiny;
    d = 1.0 / d;
    double h = d;
    for (int m = 1; m <= max_iter; ++m) {
        const double m2 = 2.0 * m;
        double aa = m * (b - m) * x / ((qam + m2) * (a + m2));
        d = 1.0 + aa * d;
        if (std::abs(d) < tiny) d = tiny;
        c = 1.0 + aa / c;
        if (std::abs(c) < tiny) c = tiny;
        d = 1.0 / d;
        h *= d * c;
        aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
        d = 1.0 + aa * d;
        if (std::abs(d) < tiny) d = tiny;
        c = 1.0 + aa / c;
        if (std::abs(c) < tiny) c = tiny;
        d = 1.0 / d;
        const double del = d * c;
        h *= del;
        if (std::abs(del - 1.0) < eps) break;
    }
    return h;
}

}  // namespace

double incomplete_beta(double a, double b, double x) {
    if (!(a > 0.0) || !(b > 0.0)) throw InvalidInput("incomplete beta needs positive shape parameters");
    if (!(x >= 0.0 && x <= 1.0)) throw InvalidInput("incomplete beta argument must lie in [0, 1]");
    if (x == 0.0) return 0.0;
    if (x == 1.0) return 1.0;
    const double log_front =
        std::lgamma(a + b) - std::lgamma(a) - std::lgamma(b) + a * std::log(x) + b * std::log1p(-x);
    const double front = std::exp(log_front);
    if (x < (a + 1.0) / (a + b + 2.0)) {
        return front * beta_continued_fraction(a, b, x) / a;
    }
    return 1.0 - front * beta_continued_fraction(b, a, 1.0 - x) / b;
}

double f_upper_tail(double f, double d1, double d2) {
    if (!(d1 > 0.0) || !(d2 > 0.0)) throw InvalidInput("F distribution degrees of freedom must be positive");
    if (!(f > 0.0)) return 1.0;
    if (std::isinf(f)) return 0.0;
    return incomplete_beta(d2 / 2.0, d1 / 2.0, d2 / (d2 + d1 * f));
}

}  // namespace ofesim
