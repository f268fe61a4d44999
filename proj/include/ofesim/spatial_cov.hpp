#pragma once

#include <Eigen/Dense>
#include <string>
#include <string_view>
#include <vector>

#include "ofesim/grid_design.hpp"
#include "ofesim/rng.hpp"

namespace ofesim {

enum class SpatialKind { NoSpatial, Ar1Ar1, Matern };

std::string_view to_string(SpatialKind kind);
SpatialKind parse_spatial_kind(std::string_view text);

/// Between-plot covariance Vs.
///
/// Ar1Ar1 uses rho_col (across ranges) and rho_row (along rows). Matern uses
/// sigma2, range_scale and nu, where nu must be 1/2, 3/2 or 5/2.
struct SpatialCovSpec {
    SpatialKind kind = SpatialKind::NoSpatial;
    double rho_col = 0.15;
    double rho_row = 0.5;
    double sigma2 = 1.0;
    double range_scale = 1.0;
    double nu = 1.5;

    static SpatialCovSpec none() { return {}; }
    static SpatialCovSpec ar1(double rho_col = 0.15, double rho_row = 0.5);
    static SpatialCovSpec matern(double sigma2 = 1.0, double range_scale = 1.0, double nu = 1.5);

    void validate() const;
};

/// Within-plot covariance Vu = B(sigma_u) R B(sigma_u) with R ~ LKJ(eta).
struct WithinGridCovSpec {
    std::vector<double> sigma_u{5.0, 0.01, 0.0001};
    double eta = 1.0;

    void validate() const;
};

/// rho^|i-j| correlation matrix of a stationary first-order autoregression.
Eigen::MatrixXd ar1_matrix(double rho, int m);

/// Matern covariance at lag d, evaluated with the half-integer closed forms.
double matern_cov(double d, const SpatialCovSpec& spec);

/// Dense Vs for all plots of `grid`, indexed in the grid's plot order.
Eigen::MatrixXd build_vs(const FieldGrid& grid, const SpatialCovSpec& spec);

/// LKJ(eta) correlation matrix drawn with the onion method.
Eigen::MatrixXd sample_lkj(double eta, int k, Rng& rng);

/// Lower Cholesky factor of the same draw, built row by row by the onion steps.
/// Stays usable when eta is small and R is numerically singular.
Eigen::MatrixXd sample_lkj_cholesky(double eta, int k, Rng& rng);

Eigen::MatrixXd kron(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b);

/// Lower Cholesky factor. Throws FactorizationError when a pivot falls below
/// 1e-12 of the largest diagonal entry or the input is not symmetric.
Eigen::MatrixXd chol_lower(const Eigen::MatrixXd& m);

inline constexpr double kPivotTolerance = 1e-12;

/// Cholesky factor of Vs kept in whatever structured form Vs admits.
///
/// NoSpatial stores nothing, Ar1Ar1 stores the per-axis AR1 factors (the factor
/// of a Kronecker product is the Kronecker product of the factors), Matern stores
/// the dense n x n factor. Immutable after construction; safe to share across threads.
class SpatialFactor {
public:
    SpatialFactor(const FieldGrid& grid, const SpatialCovSpec& spec);

    SpatialKind kind() const noexcept { return spec_.kind; }
    const SpatialCovSpec& spec() const noexcept { return spec_; }
    Eigen::Index size() const noexcept { return n_; }

    /// Returns L_s * z for an n x k block of deviates (one column per coefficient).
    Eigen::MatrixXd apply(const Eigen::MatrixXd& z) const;

    /// Materialised L_s, for testing and small grids.
    Eigen::MatrixXd dense() const;

private:
    SpatialCovSpec spec_;
    Eigen::Index n_rows_;
    Eigen::Index n_ranges_;
    Eigen::Index n_;
    Eigen::MatrixXd row_factor_;    // Ar1Ar1: AR1(rho_row), n_rows x n_rows
    Eigen::MatrixXd range_factor_;  // Ar1Ar1: AR1(rho_col), n_ranges x n_ranges
    Eigen::MatrixXd dense_factor_;  // Matern
};

}  // namespace ofesim
