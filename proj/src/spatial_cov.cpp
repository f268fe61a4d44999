#include "ofesim/spatial_cov.hpp"

#include <cmath>

#include "ofesim/errors.hpp"

namespace ofesim {

std::string_view to_string(SpatialKind kind) {
    switch (kind) {
        case SpatialKind::NoSpatial: return "NS";
        case SpatialKind::Ar1Ar1: return "AR1";
        case SpatialKind::Matern: return "Matern";
    }
    return "?";
}

SpatialKind parse_spatial_kind(std::string_view text) {
    if (text == "NS" || text == "none" || text == "identity") return SpatialKind::NoSpatial;
    if (text == "AR1" || text == "ar1" || text == "ar1xar1") return SpatialKind::Ar1Ar1;
    if (text == "Matern" || text == "matern") return SpatialKind::Matern;
    throw InvalidInput("unknown spatial covariance kind '" + std::string(text) + "'");
}

SpatialCovSpec SpatialCovSpec::ar1(double rho_col, double rho_row) {
    SpatialCovSpec s;
    s.kind = SpatialKind::Ar1Ar1;
    s.rho_col = rho_col;
    s.rho_row = rho_row;
    return s;
}

SpatialCovSpec SpatialCovSpec::matern(double sigma2, double range_scale, double nu) {
    SpatialCovSpec s;
    s.kind = SpatialKind::Matern;
    s.sigma2 = sigma2;
    s.range_scale = range_scale;
    s.nu = nu;
    return s;
}

void SpatialCovSpec::validate() const {
    switch (kind) {
        case SpatialKind::NoSpatial:
            break;
        case SpatialKind::Ar1Ar1:
            if (!(rho_col >= 0.0 && rho_col < 1.0) || !(rho_row >= 0.0 && rho_row < 1.0)) {
                throw InvalidInput("AR1 correlations must lie in [0, 1)");
            }
            break;
        case SpatialKind::Matern:
            if (!(sigma2 > 0.0)) throw InvalidInput("Matern variance must be positive");
            if (!(range_scale > 0.0)) throw InvalidInput("Matern range must be positive");
            if (nu != 0.5 && nu != 1.5 && nu != 2.5) {
                throw InvalidInput("Matern smoothness must be 0.5, 1.5 or 2.5");
            }
            break;
    }
}

void WithinGridCovSpec::validate() const {
    if (sigma_u.empty()) throw InvalidInput("sigma_u must not be empty");
    for (double s : sigma_u) {
        if (!(s > 0.0)) throw InvalidInput("every sigma_u must be positive");
    }
    if (!(eta > 0.0)) throw InvalidInput("LKJ eta must be positive");
}

Eigen::MatrixXd ar1_matrix(double rho, int m) {
    if (!(rho >= 0.0 && rho < 1.0)) throw InvalidInput("AR1 correlation must lie in [0, 1)");
    if (m < 1) throw InvalidInput("AR1 dimension must be positive");
    Eigen::MatrixXd out(m, m);
    for (int i = 0; i < m; ++i) {
        for (int j = 0; j < m; ++j) {
            out(i, j) = std::pow(rho, std::abs(i - j));
        }
    }
    return out;
}

double matern_cov(double d, const SpatialCovSpec& spec) {
    if (!(d >= 0.0)) throw InvalidInput("Matern lag must be non-negative");
    if (spec.nu != 0.5 && spec.nu != 1.5 && spec.nu != 2.5) {
        throw InvalidInput("Matern smoothness must be 0.5, 1.5 or 2.5");
    }
    const double t = d / spec.range_scale;
    if (spec.nu == 0.5) {
        return spec.sigma2 * std::exp(-t);
    }
    if (spec.nu == 1.5) {
        const double a = std::sqrt(3.0) * t;
        return spec.sigma2 * (1.0 + a) * std::exp(-a);
    }
    const double a = std::sqrt(5.0) * t;
    return spec.sigma2 * (1.0 + a + a * a / 3.0) * std::exp(-a);
}

Eigen::MatrixXd build_vs(const FieldGrid& grid, const SpatialCovSpec& spec) {
    spec.validate();
    const auto n = static_cast<Eigen::Index>(grid.size());
    switch (spec.kind) {
        case SpatialKind::NoSpatial:
            return Eigen::MatrixXd::Identity(n, n);
        case SpatialKind::Ar1Ar1:
            // ranges are the outer index of the plot ordering
            return kron(ar1_matrix(spec.rho_col, grid.n_ranges()), ar1_matrix(spec.rho_row, grid.n_rows()));
        case SpatialKind::Matern: {
            Eigen::MatrixXd out(n, n);
            const auto& c = grid.coords();
            for (Eigen::Index i = 0; i < n; ++i) {
                out(i, i) = spec.sigma2;
                for (Eigen::Index j = 0; j < i; ++j) {
                    const double dr = c[i].row - c[j].row;
                    const double dc = c[i].range - c[j].range;
                    out(i, j) = out(j, i) = matern_cov(std::sqrt(dr * dr + dc * dc), spec);
                }
            }
            return out;
        }
    }
    return {};
}

Eigen::MatrixXd sample_lkj_cholesky(double eta, int k, Rng& rng) {
    if (!(eta > 0.0)) throw InvalidInput("LKJ eta must be positive");
    if (k < 1) throw InvalidInput("LKJ dimension must be positive");
    Eigen::MatrixXd l = Eigen::MatrixXd::Identity(k, k);
    if (k == 1) return l;

    double shape = eta + (k - 2) / 2.0;
    const double r12 = 2.0 * rng.beta(shape, shape) - 1.0;
    l(1, 0) = r12;
    l(1, 1) = std::sqrt(std::max(0.0, (1.0 - r12) * (1.0 + r12)));

    // the onion step appends z = L_m sqrt(y) dir, whose Cholesky row is [sqrt(y) dir, sqrt(1 - y)]
    for (int m = 2; m < k; ++m) {
        shape -= 0.5;
        const double y = rng.beta(m / 2.0, shape);
        Eigen::VectorXd dir(m);
        for (int i = 0; i < m; ++i) dir(i) = rng.normal();
        dir.normalize();
        l.block(m, 0, 1, m) = std::sqrt(y) * dir.transpose();
        l(m, m) = std::sqrt(std::max(0.0, 1.0 - y));
    }
    return l;
}

Eigen::MatrixXd sample_lkj(double eta, int k, Rng& rng) {
    const Eigen::MatrixXd l = sample_lkj_cholesky(eta, k, rng);
    Eigen::MatrixXd r = l * l.transpose();
    r.diagonal().setOnes();
    return r;
}

Eigen::MatrixXd kron(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b) {
    Eigen::MatrixXd out(a.rows() * b.rows(), a.cols() * b.cols());
    for (Eigen::Index i = 0; i < a.rows(); ++i) {
        for (Eigen::Index j = 0; j < a.cols(); ++j) {
            out.block(i * b.rows(), j * b.cols(), b.rows(), b.cols()) = a(i, j) * b;
        }
    }
    return out;
}

Eigen::MatrixXd chol_lower(const Eigen::MatrixXd& m) {
    if (m.rows() != m.cols() || m.rows() == 0) {
        throw InvalidInput("Cholesky input must be a non-empty square matrix");
    }
    const double scale = m.cwiseAbs().maxCoeff();
    if ((m - m.transpose()).cwiseAbs().maxCoeff() > 1e-10 * scale) {
        throw FactorizationError("Cholesky input is not symmetric", 0);
    }
    const double max_diag = m.diagonal().maxCoeff();
    if (!(max_diag > 0.0)) {
        throw FactorizationError("Cholesky input has no positive diagonal entry", 0);
    }
    Eigen::LLT<Eigen::MatrixXd> llt(m);
    Eigen::MatrixXd l = llt.matrixL();
    const double threshold = kPivotTolerance * max_diag;
    if (llt.info() != Eigen::Success) {
        // LLT stops at the first non-positive pivot; recover its index for the error
        for (Eigen::Index j = 0; j < l.rows(); ++j) {
            const double s = m(j, j) - l.row(j).head(j).squaredNorm();
            if (!(s > 0.0)) {
                throw FactorizationError("matrix is not positive definite (pivot " + std::to_string(j) + ")",
                                         static_cast<std::size_t>(j));
            }
        }
        throw FactorizationError("matrix is not positive definite", static_cast<std::size_t>(l.rows()));
    }
    for (Eigen::Index j = 0; j < l.rows(); ++j) {
        const double pivot = l(j, j) * l(j, j);
        if (!(pivot > threshold)) {
            throw FactorizationError("matrix is not positive definite (pivot " + std::to_string(j) + ")",
                                     static_cast<std::size_t>(j));
        }
    }
    return l;
}

SpatialFactor::SpatialFactor(const FieldGrid& grid, const SpatialCovSpec& spec)
    : spec_(spec),
      n_rows_(grid.n_rows()),
      n_ranges_(grid.n_ranges()),
      n_(static_cast<Eigen::Index>(grid.size())) {
    spec_.validate();
    switch (spec_.kind) {
        case SpatialKind::NoSpatial:
            break;
        case SpatialKind::Ar1Ar1:
            row_factor_ = chol_lower(ar1_matrix(spec_.rho_row, grid.n_rows()));
            range_factor_ = chol_lower(ar1_matrix(spec_.rho_col, grid.n_ranges()));
            break;
        case SpatialKind::Matern:
            dense_factor_ = chol_lower(build_vs(grid, spec_));
            break;
    }
}

Eigen::MatrixXd SpatialFactor::apply(const Eigen::MatrixXd& z) const {
    if (z.rows() != n_) throw InvalidInput("deviate block does not match the grid size");
    switch (spec_.kind) {
        case SpatialKind::NoSpatial:
            return z;
        case SpatialKind::Ar1Ar1: {
            // (L_c kron L_r) v == vec(L_r V L_c^T) with V the n_rows x n_ranges reshape of v
            Eigen::MatrixXd out(n_, z.cols());
            for (Eigen::Index j = 0; j < z.cols(); ++j) {
                Eigen::Map<const Eigen::MatrixXd> v(z.col(j).data(), n_rows_, n_ranges_);
                Eigen::Map<Eigen::MatrixXd> dst(out.col(j).data(), n_rows_, n_ranges_);
                dst.noalias() = row_factor_.triangularView<Eigen::Lower>() * v * range_factor_.transpose();
            }
            return out;
        }
        case SpatialKind::Matern:
            return dense_factor_.triangularView<Eigen::Lower>() * z;
    }
    return {};
}

Eigen::MatrixXd SpatialFactor::dense() const {
    switch (spec_.kind) {
        case SpatialKind::NoSpatial: return Eigen::MatrixXd::Identity(n_, n_);
        case SpatialKind::Ar1Ar1: return kron(range_factor_, row_factor_);
        case SpatialKind::Matern: return dense_factor_;
    }
    return {};
}

}  // namespace ofesim
