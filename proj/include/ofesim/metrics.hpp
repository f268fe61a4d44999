#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "ofesim/gwr.hpp"
#include "ofesim/simulate.hpp"

namespace ofesim {

/// Coefficient-recovery score of one fitted trial under one bandwidth policy.
struct ScenarioResult {
    DesignKind design = DesignKind::Systematic;
    ResponseKind response = ResponseKind::Linear;
    SpatialKind covariance = SpatialKind::NoSpatial;
    double eta = 1.0;
    BandwidthPolicy policy;
    int scenario_id = 0;
    int replicate = 0;
    std::uint64_t seed = 0;
    std::vector<double> mse;
    std::optional<double> selected_bandwidth;

    /// ln(mse_j); an exact-zero MSE is a data error and throws.
    double ln_mse(std::size_t j) const;
};

/// mse_j = mean over plots of (beta_j - beta_hat_j)^2.
std::vector<double> coefficient_mse(const CoefficientField& truth, const GwrFit& fit);

/// Median with the midpoint convention for even counts. Throws on empty input.
double median(std::vector<double> values);

/// Type-7 (linear interpolation) sample quantile of already sorted values.
double quantile_sorted(std::span<const double> sorted, double prob);

struct BoxplotStats {
    std::string group;
    std::size_t count = 0;
    double min = 0.0;       ///< lower whisker end: smallest value within q1 - 1.5 IQR
    double q1 = 0.0;
    double median = 0.0;
    double q3 = 0.0;
    double max = 0.0;       ///< upper whisker end: largest value within q3 + 1.5 IQR
    std::vector<double> outliers;
};

BoxplotStats boxplot_stats(std::span<const double> values, std::string group = {});

/// Grouping factors for median tables.
enum class GroupFactor { Response, Eta, Covariance, Design, Policy, Coefficient };

struct MedianRow {
    std::vector<std::string> key;  ///< one label per group factor
    std::size_t count = 0;
    double median = 0.0;
    double scaled_median = 0.0;  ///< median times the coefficient's display scale
    double scale = 1.0;
};

/// Display multiplier for coefficient j: beta1 x1e3 (linear) or x1e4 (quadratic), beta2 x1e8.
double coefficient_display_scale(ResponseKind response, std::size_t j);

/// Coefficient label used in tables, e.g. "beta0" or "beta1_x1e3".
std::string coefficient_label(ResponseKind response, std::size_t j);

/// Median MSE per group. `Coefficient` expands each result into one observation per
/// coefficient; omitting it is only allowed when every result has a single coefficient.
/// Groups are emitted in lexicographic key order; empty groups never appear.
std::vector<MedianRow> median_table(std::span<const ScenarioResult> results, std::span<const GroupFactor> group_by);

/// One row of a published-style table: covariance, design, coefficient, then one
/// scaled median per bandwidth policy (absent cells are NaN).
struct PaperTableRow {
    SpatialKind covariance;
    DesignKind design;
    std::size_t coefficient;
    std::vector<double> values;
};

struct PaperTable {
    ResponseKind response;
    double eta;
    std::vector<BandwidthPolicy> policies;
    std::vector<PaperTableRow> rows;

    /// Scaled median for one cell; NaN when absent.
    double cell(SpatialKind covariance, DesignKind design, std::size_t coefficient, const BandwidthPolicy& policy) const;
};

PaperTable paper_table(std::span<const ScenarioResult> results, ResponseKind response, double eta,
                       std::span<const BandwidthPolicy> policies);

/// Unit-width bins over [lower, upper]: a selection h lands in bin floor(h).
std::map<int, std::size_t> bandwidth_histogram(std::span<const ScenarioResult> results, int lower = 1,
                                               int upper = 93);

}  // namespace ofesim
