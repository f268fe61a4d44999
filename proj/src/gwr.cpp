#include "ofesim/gwr.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <numbers>
#include <sstream>

#include "ofesim/errors.hpp"
#include "ofesim/parallel.hpp"

namespace ofesim {

std::string_view to_string(AiccFormula formula) {
    return formula == AiccFormula::Standard ? "standard" : "paper-literal";
}

AiccFormula parse_aicc_formula(std::string_view text) {
    if (text == "standard") return AiccFormula::Standard;
    if (text == "paper-literal") return AiccFormula::PaperLiteral;
    throw InvalidInput("unknown AICc formula '" + std::string(text) + "'");
}

std::string BandwidthPolicy::label() const {
    if (kind == Kind::AiccOptimal) return "AICc";
    std::ostringstream os;
    os << value;
    return os.str();
}

BandwidthPolicy BandwidthPolicy::parse(std::string_view text) {
    if (text == "AICc" || text == "aicc") return aicc();
    try {
        std::size_t used = 0;
        const double h = std::stod(std::string(text), &used);
        if (used == text.size() && h > 0.0) return fixed(h);
    } catch (const std::exception&) {
    }
    throw InvalidInput("bandwidth policy must be a positive number or 'aicc' (got '" + std::string(text) + "')");
}

void KernelSpec::validate() const {
    if (!(bandwidth > 0.0) || !std::isfinite(bandwidth)) {
        throw InvalidInput("kernel bandwidth must be positive and finite");
    }
}

void BandwidthSearch::validate() const {
    if (!(lower > 0.0) || !(upper > lower)) throw InvalidInput("bandwidth search needs 0 < lower < upper");
    if (!(tolerance > 0.0)) throw InvalidInput("bandwidth tolerance must be positive");
    if (scan_points < 3) throw InvalidInput("bandwidth scan needs at least 3 points");
}

Eigen::VectorXd gaussian_weights(const PlotCoord& query, std::span<const PlotCoord> coords, double h) {
    KernelSpec{h}.validate();
    Eigen::VectorXd w(static_cast<Eigen::Index>(coords.size()));
    const double inv = 1.0 / (2.0 * h * h);
    for (std::size_t i = 0; i < coords.size(); ++i) {
        const double dr = coords[i].row - query.row;
        const double dc = coords[i].range - query.range;
        w(static_cast<Eigen::Index>(i)) = std::exp(-(dr * dr + dc * dc) * inv);
    }
    return w;
}

Eigen::MatrixXd design_matrix(std::span<const double> rates, ResponseKind basis) {
    const int p = coefficient_count(basis);
    Eigen::MatrixXd z(static_cast<Eigen::Index>(rates.size()), p);
    for (std::size_t i = 0; i < rates.size(); ++i) {
        double power = 1.0;
        for (int j = 0; j < p; ++j) {
            z(static_cast<Eigen::Index>(i), j) = power;
            power *= rates[i];
        }
    }
    return z;
}

LocalFit local_fit(const Eigen::VectorXd& y, const Eigen::MatrixXd& z, const Eigen::VectorXd& w,
                   Eigen::Index query) {
    const Eigen::Index n = z.rows();
    const Eigen::Index p = z.cols();
    if (y.size() != n || w.size() != n) throw InvalidInput("local_fit: y, z and w disagree in length");
    if (query < 0 || query >= n) throw InvalidInput("local_fit: query index out of range");
    if ((w.array() < 0.0).any()) throw InvalidInput("local_fit: weights must be non-negative");

    const Eigen::VectorXd root = w.cwiseSqrt();
    Eigen::MatrixXd a = root.asDiagonal() * z;
    Eigen::VectorXd col_scale(p);
    for (Eigen::Index j = 0; j < p; ++j) {
        const double norm = a.col(j).norm();
        if (!(norm > 0.0)) {
            throw SingularFit("weighted design column " + std::to_string(j) + " is zero at query " +
                                  std::to_string(query),
                              static_cast<std::size_t>(query), 0.0);
        }
        col_scale(j) = 1.0 / norm;
        a.col(j) *= col_scale(j);
    }
    const Eigen::HouseholderQR<Eigen::MatrixXd> qr(a);
    const Eigen::MatrixXd r = qr.matrixQR().topRows(p).triangularView<Eigen::Upper>();
    for (Eigen::Index j = 0; j < p; ++j) {
        if (!(r(j, j) * r(j, j) >= kSingularTolerance)) {
            throw SingularFit("rank-deficient weighted design at query " + std::to_string(query),
                              static_cast<std::size_t>(query), 0.0);
        }
    }
    const Eigen::VectorXd qty = (qr.householderQ().transpose() * root.cwiseProduct(y)).head(p);
    const auto upper = r.triangularView<Eigen::Upper>();

    LocalFit out;
    out.beta = col_scale.cwiseProduct(upper.solve(qty));
    const Eigen::VectorXd zq = col_scale.cwiseProduct(z.row(query).transpose());
    const Eigen::VectorXd v = upper.transpose().solve(zq);
    out.hat = w(query) * v.squaredNorm();
    return out;
}

double aicc_value(double n, double rss, double trace_s, AiccFormula formula) {
    const double denom = n - 2.0 - trace_s;
    if (!(denom > 0.0)) return std::numeric_limits<double>::infinity();
    const double tau2 = rss / n;
    const double lead = formula == AiccFormula::Standard ? n : 2.0 * n;
    return lead * std::log(tau2) + n * std::log(2.0 * std::numbers::pi) + n * (n + trace_s) / denom;
}

namespace {

double compensated_sum(const Eigen::VectorXd& v) {
    double sum = 0.0;
    double carry = 0.0;
    for (Eigen::Index i = 0; i < v.size(); ++i) {
        const double t = sum + v(i);
        if (std::abs(sum) >= std::abs(v(i))) {
            carry += (sum - t) + v(i);
        } else {
            carry += (v(i) - t) + sum;
        }
        sum = t;
    }
    return sum + carry;
}

Eigen::MatrixXd lattice_kernel(int m, double h) {
    Eigen::MatrixXd k(m, m);
    const double inv = 1.0 / (2.0 * h * h);
    for (int i = 0; i < m; ++i) {
        for (int j = 0; j < m; ++j) {
            const double d = i - j;
            k(i, j) = std::exp(-d * d * inv);
        }
    }
    return k;
}

struct Pass {
    Eigen::MatrixXd beta;
    Eigen::VectorXd fitted;
    Eigen::VectorXd hat;
};

// Per-plot moment fields x^a (a < 2p-1) and y x^b (b < p), laid out as an
// n_rows x (n_fields * n_ranges) matrix so one product applies the row kernel.
class MomentEngine {
public:
    MomentEngine(const FieldGrid& grid, std::span<const double> rates, const Eigen::VectorXd& y,
                 ResponseKind basis)
        : p_(coefficient_count(basis)), n_rows_(grid.n_rows()), n_ranges_(grid.n_ranges()), y_(y) {
        const auto n = static_cast<Eigen::Index>(grid.size());
        if (static_cast<Eigen::Index>(rates.size()) != n || y.size() != n) {
            throw InvalidInput("gwr: rates and responses must have one entry per plot");
        }
        for (double r : rates) scale_ = std::max(scale_, std::abs(r));
        if (!(scale_ > 0.0)) scale_ = 1.0;
        x_.resize(n);
        for (Eigen::Index i = 0; i < n; ++i) x_(i) = rates[static_cast<std::size_t>(i)] / scale_;

        const int n_fields = 3 * p_ - 1;
        fields_.resize(n_rows_, static_cast<Eigen::Index>(n_fields) * n_ranges_);
        for (Eigen::Index i = 0; i < n; ++i) {
            const Eigen::Index row = i % n_rows_;
            const Eigen::Index range = i / n_rows_;
            double power = 1.0;
            for (int a = 0; a < 2 * p_ - 1; ++a) {
                fields_(row, a * n_ranges_ + range) = power;
                if (a < p_) fields_(row, (2 * p_ - 1 + a) * n_ranges_ + range) = power * y(i);
                power *= x_(i);
            }
        }
    }

    Eigen::Index size() const noexcept { return x_.size(); }
    const Eigen::VectorXd& y() const noexcept { return y_; }

    void run(double h, int threads, Pass& out) const {
        const Eigen::MatrixXd kr = lattice_kernel(static_cast<int>(n_rows_), h);
        const Eigen::MatrixXd kc = lattice_kernel(static_cast<int>(n_ranges_), h);
        const Eigen::MatrixXd rowpass = kr * fields_;
        const int n_fields = 3 * p_ - 1;
        Eigen::MatrixXd g(n_rows_, rowpass.cols());
        for (int m = 0; m < n_fields; ++m) {
            g.middleCols(m * n_ranges_, n_ranges_).noalias() = rowpass.middleCols(m * n_ranges_, n_ranges_) * kc;
        }

        const Eigen::Index n = size();
        out.beta.resize(n, p_);
        out.fitted.resize(n);
        out.hat.resize(n);
        const double scale = scale_;
        parallel_for(static_cast<std::size_t>(n_ranges_), threads, [&](std::size_t range) {
            for (Eigen::Index row = 0; row < n_rows_; ++row) {
                const Eigen::Index i = static_cast<Eigen::Index>(range) * n_rows_ + row;
                solve_plot(g, i, row, static_cast<Eigen::Index>(range), h, scale, out);
            }
        });
    }

private:
    void solve_plot(const Eigen::MatrixXd& g, Eigen::Index i, Eigen::Index row, Eigen::Index range, double h,
                    double scale, Pass& out) const {
        const int p = p_;
        std::array<double, 5> mom{};
        std::array<double, 3> rhs{};
        for (int a = 0; a < 2 * p - 1; ++a) mom[a] = g(row, a * n_ranges_ + range);
        for (int b = 0; b < p; ++b) rhs[b] = g(row, (2 * p - 1 + b) * n_ranges_ + range);

        // Jacobi-scaled Gram matrix C = D^-1 A D^-1, then Cholesky C = L L^T
        std::array<double, 3> d{};
        for (int j = 0; j < p; ++j) {
            d[j] = std::sqrt(mom[2 * j]);
            if (!(d[j] > 0.0)) throw singular(i, h);
        }
        std::array<double, 9> l{};
        for (int j = 0; j < p; ++j) {
            for (int c = 0; c <= j; ++c) {
                double s = mom[j + c] / (d[j] * d[c]);
                for (int t = 0; t < c; ++t) s -= l[j * 3 + t] * l[c * 3 + t];
                if (c == j) {
                    if (!(s >= kSingularTolerance)) throw singular(i, h);
                    l[j * 3 + j] = std::sqrt(s);
                } else {
                    l[j * 3 + c] = s / l[c * 3 + c];
                }
            }
        }
        auto forward = [&](std::array<double, 3> v) {
            for (int j = 0; j < p; ++j) {
                for (int t = 0; t < j; ++t) v[j] -= l[j * 3 + t] * v[t];
                v[j] /= l[j * 3 + j];
            }
            return v;
        };
        std::array<double, 3> v{};
        for (int j = 0; j < p; ++j) v[j] = rhs[j] / d[j];
        v = forward(v);
        for (int j = p - 1; j >= 0; --j) {
            for (int t = j + 1; t < p; ++t) v[j] -= l[t * 3 + j] * v[t];
            v[j] /= l[j * 3 + j];
        }

        std::array<double, 3> zq{};
        double power = 1.0;
        double fitted = 0.0;
        double unscale = 1.0;
        for (int j = 0; j < p; ++j) {
            const double coef = v[j] / d[j];
            fitted += coef * power;
            out.beta(i, j) = coef / unscale;
            zq[j] = power / d[j];
            power *= x_(i);
            unscale *= scale;
        }
        const auto q = forward(zq);
        double hat = 0.0;
        for (int j = 0; j < p; ++j) hat += q[j] * q[j];
        out.fitted(i) = fitted;
        out.hat(i) = hat;
    }

    SingularFit singular(Eigen::Index i, double h) const {
        const Eigen::Index row = i % n_rows_ + 1;
        const Eigen::Index range = i / n_rows_ + 1;
        std::ostringstream os;
        os << "singular local fit at plot (row " << row << ", range " << range << ") with bandwidth " << h
           << ": the kernel window does not span " << p_ << " distinct treatment levels";
        return SingularFit(os.str(), static_cast<std::size_t>(i), h);
    }

    int p_;
    Eigen::Index n_rows_;
    Eigen::Index n_ranges_;
    double scale_ = 0.0;
    Eigen::VectorXd x_;
    Eigen::VectorXd y_;
    Eigen::MatrixXd fields_;
};

GwrFit finish(Pass&& pass, const Eigen::VectorXd& y, double h, AiccFormula formula) {
    GwrFit fit;
    const auto n = static_cast<double>(y.size());
    fit.rss = compensated_sum((y - pass.fitted).array().square().matrix());
    fit.trace_s = compensated_sum(pass.hat);
    fit.tau2 = fit.rss / n;
    fit.aicc = aicc_value(n, fit.rss, fit.trace_s, formula);
    fit.bandwidth = h;
    fit.policy = BandwidthPolicy::fixed(h);
    fit.beta_hat = std::move(pass.beta);
    fit.fitted = std::move(pass.fitted);
    fit.hat = std::move(pass.hat);
    return fit;
}

}  // namespace

GwrFit gwr_fit(const FieldGrid& grid, std::span<const double> rates, const Eigen::VectorXd& y,
               ResponseKind basis, const KernelSpec& kernel, const GwrOptions& options) {
    kernel.validate();
    const MomentEngine engine(grid, rates, y, basis);
    Pass pass;
    engine.run(kernel.bandwidth, options.threads, pass);
    return finish(std::move(pass), y, kernel.bandwidth, options.formula);
}

GwrFit gwr_fit(const TrialData& trial, ResponseKind basis, const KernelSpec& kernel, const GwrOptions& options) {
    return gwr_fit(trial.grid(), trial.design.rate, trial.yield, basis, kernel, options);
}

GwrFit gwr_fit_direct(const FieldGrid& grid, std::span<const double> rates, const Eigen::VectorXd& y,
                      ResponseKind basis, const KernelSpec& kernel, const GwrOptions& options) {
    kernel.validate();
    const auto n = static_cast<Eigen::Index>(grid.size());
    if (static_cast<Eigen::Index>(rates.size()) != n || y.size() != n) {
        throw InvalidInput("gwr: rates and responses must have one entry per plot");
    }
    const Eigen::MatrixXd z = design_matrix(rates, basis);
    Pass pass;
    pass.beta.resize(n, z.cols());
    pass.fitted.resize(n);
    pass.hat.resize(n);
    parallel_for(static_cast<std::size_t>(n), options.threads, [&](std::size_t q) {
        const auto i = static_cast<Eigen::Index>(q);
        const Eigen::VectorXd w = gaussian_weights(grid.coord(q), grid.coords(), kernel.bandwidth);
        LocalFit local;
        try {
            local = local_fit(y, z, w, i);
        } catch (const SingularFit& e) {
            throw SingularFit(e.what(), q, kernel.bandwidth);
        }
        pass.beta.row(i) = local.beta.transpose();
        pass.fitted(i) = z.row(i).dot(local.beta);
        pass.hat(i) = local.hat;
    });
    return finish(std::move(pass), y, kernel.bandwidth, options.formula);
}

BandwidthSelection minimise_bandwidth(const std::function<double(double)>& objective,
                                      const BandwidthSearch& search) {
    search.validate();
    constexpr double inf = std::numeric_limits<double>::infinity();
    BandwidthSelection out;
    auto eval = [&](double h) {
        ++out.evaluations;
        const double v = objective(h);
        return std::isnan(v) ? inf : v;
    };

    const int m = search.scan_points;
    std::vector<double> xs(static_cast<std::size_t>(m));
    std::vector<double> fs(static_cast<std::size_t>(m));
    const double log_lo = std::log(search.lower);
    const double log_hi = std::log(search.upper);
    for (int i = 0; i < m; ++i) {
        xs[i] = i == 0 ? search.lower
              : i == m - 1 ? search.upper
                           : std::exp(log_lo + (log_hi - log_lo) * i / (m - 1));
        fs[i] = eval(xs[i]);
    }
    const auto best_it = std::min_element(fs.begin(), fs.end());
    if (*best_it == inf) throw SelectionError("every candidate bandwidth produced a singular or undefined fit");
    const auto best = static_cast<std::size_t>(best_it - fs.begin());

    bool unimodal = true;
    for (std::size_t i = 0; i + 1 < fs.size(); ++i) {
        if (i < best ? fs[i] < fs[i + 1] : fs[i] > fs[i + 1]) {
            unimodal = false;
            break;
        }
    }
    out.bandwidth = xs[best];
    out.aicc = fs[best];
    if (!unimodal) {
        out.used_scan_fallback = true;
        return out;
    }

    double a = xs[best == 0 ? 0 : best - 1];
    double b = xs[std::min(best + 1, xs.size() - 1)];
    const double ratio = (std::sqrt(5.0) - 1.0) / 2.0;
    double c = b - ratio * (b - a);
    double d = a + ratio * (b - a);
    double fc = eval(c);
    double fd = eval(d);
    auto consider = [&](double x, double fx) {
        if (fx < out.aicc) {
            out.aicc = fx;
            out.bandwidth = x;
        }
    };
    while (b - a > search.tolerance) {
        if (fc <= fd) {
            b = d;
            d = c;
            fd = fc;
            c = b - ratio * (b - a);
            fc = eval(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + ratio * (b - a);
            fd = eval(d);
        }
    }
    consider(c, fc);
    consider(d, fd);
    return out;
}

BandwidthSelection select_bandwidth_aicc(const FieldGrid& grid, std::span<const double> rates,
                                         const Eigen::VectorXd& y, ResponseKind basis,
                                         const BandwidthSearch& search, const GwrOptions& options) {
    const MomentEngine engine(grid, rates, y, basis);
    Pass pass;
    const auto n = static_cast<double>(y.size());
    auto objective = [&](double h) {
        try {
            engine.run(h, options.threads, pass);
        } catch (const SingularFit&) {
            return std::numeric_limits<double>::infinity();
        }
        const double rss = compensated_sum((y - pass.fitted).array().square().matrix());
        return aicc_value(n, rss, compensated_sum(pass.hat), options.formula);
    };
    return minimise_bandwidth(objective, search);
}

BandwidthSelection select_bandwidth_aicc(const TrialData& trial, ResponseKind basis,
                                         const BandwidthSearch& search, const GwrOptions& options) {
    return select_bandwidth_aicc(trial.grid(), trial.design.rate, trial.yield, basis, search, options);
}

}  // namespace ofesim
