#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <string_view>
#include <vector>

#include "ofesim/grid_design.hpp"
#include "ofesim/rng.hpp"
#include "ofesim/spatial_cov.hpp"

namespace ofesim {

enum class ResponseKind { Linear, Quadratic };

std::string_view to_string(ResponseKind kind);
ResponseKind parse_response_kind(std::string_view text);

/// Number of polynomial coefficients: 2 for linear, 3 for quadratic.
int coefficient_count(ResponseKind kind) noexcept;

/// Global response curve and error scale.
struct ResponseSpec {
    ResponseKind kind = ResponseKind::Linear;
    std::vector<double> b{65.0, 0.05};
    double sigma_e = 1.0;

    /// b = (65, 0.05) for linear, (65, 0.05, -0.0003) for quadratic, sigma_e = 1.
    static ResponseSpec defaults(ResponseKind kind);

    int k() const noexcept { return coefficient_count(kind); }
    void validate() const;
};

/// True local coefficients; row i holds beta(s_i) for plot i.
struct CoefficientField {
    Eigen::MatrixXd beta;

    friend bool operator==(const CoefficientField& a, const CoefficientField& b) {
        return a.beta.rows() == b.beta.rows() && a.beta.cols() == b.beta.cols() && a.beta == b.beta;
    }
};

struct TrialLabels {
    DesignKind design = DesignKind::Systematic;
    ResponseKind response = ResponseKind::Linear;
    SpatialKind covariance = SpatialKind::NoSpatial;
    double eta = 1.0;
    std::uint64_t seed = 0;
    int scenario_id = 0;
    int replicate = 0;
};

struct TrialData {
    DesignPlan design;
    Eigen::VectorXd yield;
    CoefficientField truth;
    TrialLabels labels;

    FieldGrid grid() const {
        return FieldGrid(design.n_rows, static_cast<int>(design.range_rate.size()));
    }
    std::size_t size() const noexcept { return static_cast<std::size_t>(yield.size()); }
};

/// Draws u ~ N(0, Vs kron Vu) and returns beta = b + u.
///
/// Vu = B(sigma_u) R B(sigma_u) with a fresh R ~ LKJ(eta); the deviates are
/// consumed plot-major (all coefficients of plot 1, then plot 2, ...).
CoefficientField sample_coefficient_field(const FieldGrid& grid, const ResponseSpec& response,
                                          const WithinGridCovSpec& within, const SpatialFactor& spatial,
                                          Rng& rng);

CoefficientField sample_coefficient_field(const FieldGrid& grid, const ResponseSpec& response,
                                          const WithinGridCovSpec& within, const SpatialCovSpec& spatial,
                                          Rng& rng);

/// y_i = sum_j beta_j(s_i) N_i^j + e_i with e_i ~ N(0, sigma_e^2).
TrialData simulate_yield(const DesignPlan& design, const CoefficientField& truth,
                         const ResponseSpec& response, Rng& rng);

}  // namespace ofesim
