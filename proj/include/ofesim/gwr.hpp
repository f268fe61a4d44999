#pragma once

#include <Eigen/Dense>
#include <functional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "ofesim/grid_design.hpp"
#include "ofesim/simulate.hpp"

namespace ofesim {

/// Which AICc expression to minimise.
///
/// Standard:     n log(tau2) + n log(2 pi) + n (n + tr S) / (n - 2 - tr S)
/// PaperLiteral: the same with 2 n log(tau2) as the leading term.
enum class AiccFormula { Standard, PaperLiteral };

std::string_view to_string(AiccFormula formula);
AiccFormula parse_aicc_formula(std::string_view text);

/// Either a fixed Gaussian bandwidth or the AICc-optimal one.
struct BandwidthPolicy {
    enum class Kind { Fixed, AiccOptimal };
    Kind kind = Kind::Fixed;
    double value = 5.0;

    static BandwidthPolicy fixed(double h) { return {Kind::Fixed, h}; }
    static BandwidthPolicy aicc() { return {Kind::AiccOptimal, 0.0}; }

    /// "5", "9", ... for fixed bandwidths, "AICc" otherwise.
    std::string label() const;
    static BandwidthPolicy parse(std::string_view text);

    friend bool operator==(const BandwidthPolicy&, const BandwidthPolicy&) = default;
};

/// Gaussian kernel w(d) = exp(-d^2 / (2 h^2)) with h in grid units.
struct KernelSpec {
    double bandwidth = 5.0;
    void validate() const;
};

struct GwrOptions {
    AiccFormula formula = AiccFormula::Standard;
    int threads = 1;
};

/// Result of fitting GWR at every plot of a trial.
struct GwrFit {
    Eigen::MatrixXd beta_hat;  ///< n x p local estimates
    Eigen::VectorXd fitted;    ///< Z_i beta_hat(s_i)
    Eigen::VectorXd hat;       ///< diagonal of the smoother S
    double rss = 0.0;
    double trace_s = 0.0;
    double tau2 = 0.0;  ///< RSS / n
    double aicc = 0.0;
    double bandwidth = 0.0;
    BandwidthPolicy policy;
};

struct LocalFit {
    Eigen::VectorXd beta;
    double hat = 0.0;  ///< S_qq for the query plot q
};

/// Relative pivot below which a column-normalised weighted design counts as rank deficient.
inline constexpr double kSingularTolerance = 1e-10;

Eigen::VectorXd gaussian_weights(const PlotCoord& query, std::span<const PlotCoord> coords, double h);

/// Polynomial basis [1, N] or [1, N, N^2] for every plot.
Eigen::MatrixXd design_matrix(std::span<const double> rates, ResponseKind basis);

/// Weighted least squares at one query plot, solved by Householder QR of the
/// column-normalised root-weighted design. Throws SingularFit carrying `query`.
LocalFit local_fit(const Eigen::VectorXd& y, const Eigen::MatrixXd& z, const Eigen::VectorXd& w,
                   Eigen::Index query);

double aicc_value(double n, double rss, double trace_s, AiccFormula formula);

/// GWR at every plot of the grid.
///
/// The kernel on a unit lattice factorises into a row kernel times a range kernel,
/// so the weighted cross-products Z^T W(s) Z and Z^T W(s) y for all query plots
/// come from two small dense filters over per-plot moment fields. The basis is
/// rescaled to N / max|N| before solving; estimates are mapped back to rate units.
/// Throws SingularFit naming the query plot and bandwidth on the first rank-deficient window.
GwrFit gwr_fit(const FieldGrid& grid, std::span<const double> rates, const Eigen::VectorXd& y,
               ResponseKind basis, const KernelSpec& kernel, const GwrOptions& options = {});

GwrFit gwr_fit(const TrialData& trial, ResponseKind basis, const KernelSpec& kernel,
               const GwrOptions& options = {});

/// Per-plot local_fit on dense weights. O(n^2 p^2); meant for validation on small grids.
GwrFit gwr_fit_direct(const FieldGrid& grid, std::span<const double> rates, const Eigen::VectorXd& y,
                      ResponseKind basis, const KernelSpec& kernel, const GwrOptions& options = {});

struct BandwidthSearch {
    double lower = 1.0;
    double upper = 93.0;
    double tolerance = 0.01;
    int scan_points = 40;

    void validate() const;
};

struct BandwidthSelection {
    double bandwidth = 0.0;
    double aicc = 0.0;
    bool used_scan_fallback = false;
    int evaluations = 0;
};

/// Minimises `objective` over the search interval: a log-spaced scan, then golden-section
/// refinement inside the bracket around the best scan point when the scanned values are
/// unimodal; otherwise the best scan point is returned. Non-finite values rank last.
BandwidthSelection minimise_bandwidth(const std::function<double(double)>& objective,
                                      const BandwidthSearch& search);

/// AICc-optimal Gaussian bandwidth; singular bandwidths score +infinity.
BandwidthSelection select_bandwidth_aicc(const TrialData& trial, ResponseKind basis,
                                         const BandwidthSearch& search, const GwrOptions& options = {});

BandwidthSelection select_bandwidth_aicc(const FieldGrid& grid, std::span<const double> rates,
                                         const Eigen::VectorXd& y, ResponseKind basis,
                                         const BandwidthSearch& search, const GwrOptions& options = {});

}  // namespace ofesim
