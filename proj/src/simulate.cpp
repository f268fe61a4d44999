#include "ofesim/simulate.hpp"

#include <string>

#include "ofesim/errors.hpp"

namespace ofesim {

std::string_view to_string(ResponseKind kind) {
    return kind == ResponseKind::Linear ? "linear" : "quadratic";
}

ResponseKind parse_response_kind(std::string_view text) {
    if (text == "linear") return ResponseKind::Linear;
    if (text == "quadratic") return ResponseKind::Quadratic;
    throw InvalidInput("unknown response kind '" + std::string(text) + "'");
}

int coefficient_count(ResponseKind kind) noexcept {
    return kind == ResponseKind::Linear ? 2 : 3;
}

ResponseSpec ResponseSpec::defaults(ResponseKind kind) {
    ResponseSpec r;
    r.kind = kind;
    r.b = kind == ResponseKind::Linear ? std::vector<double>{65.0, 0.05}
                                       : std::vector<double>{65.0, 0.05, -0.0003};
    r.sigma_e = 1.0;
    return r;
}

void ResponseSpec::validate() const {
    if (static_cast<int>(b.size()) != k()) {
        throw InvalidInput(std::string(to_string(kind)) + " response needs exactly " + std::to_string(k()) +
                           " global coefficients");
    }
    if (!(sigma_e > 0.0)) throw InvalidInput("sigma_e must be positive");
}

CoefficientField sample_coefficient_field(const FieldGrid& grid, const ResponseSpec& response,
                                          const WithinGridCovSpec& within, const SpatialFactor& spatial,
                                          Rng& rng) {
    response.validate();
    within.validate();
    const int k = response.k();
    if (static_cast<int>(within.sigma_u.size()) < k) {
        throw InvalidInput("sigma_u has fewer entries than the response has coefficients");
    }
    const auto n = static_cast<Eigen::Index>(grid.size());
    if (spatial.size() != n) throw InvalidInput("spatial factor was built for a different grid");

    // L_u = B(sigma_u) L_R; small eta puts R close to singular, so L_R comes from the onion itself
    Eigen::MatrixXd lu = sample_lkj_cholesky(within.eta, k, rng);
    for (int j = 0; j < k; ++j) lu.row(j) *= within.sigma_u[static_cast<std::size_t>(j)];

    Eigen::MatrixXd z(n, k);
    for (Eigen::Index i = 0; i < n; ++i) {
        for (int j = 0; j < k; ++j) z(i, j) = rng.normal();
    }
    // (L_s kron L_u) vec(Z^T) == vec((L_s Z L_u^T)^T)
    const Eigen::MatrixXd u = spatial.apply(z) * lu.transpose();

    CoefficientField field;
    field.beta = u;
    for (int j = 0; j < k; ++j) field.beta.col(j).array() += response.b[static_cast<std::size_t>(j)];
    return field;
}

CoefficientField sample_coefficient_field(const FieldGrid& grid, const ResponseSpec& response,
                                          const WithinGridCovSpec& within, const SpatialCovSpec& spatial,
                                          Rng& rng) {
    return sample_coefficient_field(grid, response, within, SpatialFactor(grid, spatial), rng);
}

TrialData simulate_yield(const DesignPlan& design, const CoefficientField& truth,
                         const ResponseSpec& response, Rng& rng) {
    response.validate();
    const auto n = static_cast<Eigen::Index>(design.size());
    if (truth.beta.rows() != n || truth.beta.cols() != response.k()) {
        throw InvalidInput("coefficient field does not match the design and response kind");
    }
    TrialData trial;
    trial.design = design;
    trial.truth = truth;
    trial.labels.design = design.kind;
    trial.labels.response = response.kind;
    trial.yield.resize(n);
    for (Eigen::Index i = 0; i < n; ++i) {
        const double rate = design.rate[static_cast<std::size_t>(i)];
        double y = 0.0;
        double power = 1.0;
        for (Eigen::Index j = 0; j < truth.beta.cols(); ++j) {
            y += truth.beta(i, j) * power;
            power *= rate;
        }
        trial.yield(i) = y + response.sigma_e * rng.normal();
    }
    return trial;
}

}  // namespace ofesim
