#pragma once

#include <array>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "ofesim/metrics.hpp"

namespace ofesim {

enum class AnovaFactor { Design, Bandwidth, Covariance, Coefficients, Correlation };

inline constexpr std::size_t kAnovaFactorCount = 5;

std::string_view to_string(AnovaFactor factor);

/// Long-format observations of ln(MSE): one per (scenario cell, coefficient, replicate).
struct FactorFrame {
    std::vector<double> response;
    std::array<std::vector<int>, kAnovaFactorCount> level;  ///< level index per observation
    std::array<std::vector<std::string>, kAnovaFactorCount> level_names;

    std::size_t size() const noexcept { return response.size(); }
    int n_levels(AnovaFactor f) const { return static_cast<int>(level_names[static_cast<std::size_t>(f)].size()); }
};

/// Frame of one response kind. Requires both designs, all three covariance kinds, at least
/// two bandwidth policies and two eta levels, and every cell of their cross product.
FactorFrame build_frame(std::span<const ScenarioResult> results, ResponseKind response_kind);

/// A main effect (one factor) or a two-factor interaction.
using AnovaTerm = std::vector<AnovaFactor>;

std::string term_name(const AnovaTerm& term);

/// Main effects Design, Bandwidth, Covariance, Coefficients, Correlation, then all ten
/// pairwise interactions in lexicographic order of that list.
std::vector<AnovaTerm> default_anova_terms();

struct AnovaRow {
    std::string term;
    int df = 0;
    double sum_sq = 0.0;
    double mean_sq = 0.0;
    double f_value = 0.0;
    double p_value = 1.0;
};

struct AnovaTable {
    std::vector<AnovaRow> terms;
    AnovaRow residual;
    int total_df = 0;
    double total_ss = 0.0;  ///< corrected total sum of squares

    const AnovaRow& row(std::string_view term) const;
};

/// Sequential (type I) sums of squares with treatment contrasts, terms added in `terms` order.
/// Throws InvalidInput on unbalanced frames.
AnovaTable anova_fit(const FactorFrame& frame, std::span<const AnovaTerm> terms);
AnovaTable anova_fit(const FactorFrame& frame);

/// Regularised incomplete beta I_x(a, b) by Lentz's continued fraction.
double incomplete_beta(double a, double b, double x);

/// Upper tail P(F > f) of the F(d1, d2) distribution.
double f_upper_tail(double f, double d1, double d2);

}  // namespace ofesim
