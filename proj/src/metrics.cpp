#include "ofesim/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "ofesim/errors.hpp"

namespace ofesim {

double ScenarioResult::ln_mse(std::size_t j) const {
    const double v = mse.at(j);
    if (!(v > 0.0)) {
        throw InvalidInput("ln(MSE) undefined: coefficient " + std::to_string(j) + " of scenario " +
                           std::to_string(scenario_id) + " replicate " + std::to_string(replicate) +
                           " has MSE " + std::to_string(v));
    }
    return std::log(v);
}

std::vector<double> coefficient_mse(const CoefficientField& truth, const GwrFit& fit) {
    if (truth.beta.rows() != fit.beta_hat.rows() || truth.beta.cols() != fit.beta_hat.cols()) {
        throw InvalidInput("coefficient_mse: truth is " + std::to_string(truth.beta.rows()) + "x" +
                           std::to_string(truth.beta.cols()) + " but the fit is " +
                           std::to_string(fit.beta_hat.rows()) + "x" + std::to_string(fit.beta_hat.cols()));
    }
    const auto n = static_cast<double>(truth.beta.rows());
    std::vector<double> out(static_cast<std::size_t>(truth.beta.cols()));
    for (Eigen::Index j = 0; j < truth.beta.cols(); ++j) {
        out[static_cast<std::size_t>(j)] = (truth.beta.col(j) - fit.beta_hat.col(j)).squaredNorm() / n;
    }
    return out;
}

double median(std::vector<double> values) {
    if (values.empty()) throw InvalidInput("median of an empty group");
    std::sort(values.begin(), values.end());
    const std::size_t n = values.size();
    return n % 2 == 1 ? values[n / 2] : 0.5 * (values[n / 2 - 1] + values[n / 2]);
}

double quantile_sorted(std::span<const double> sorted, double prob) {
    if (sorted.empty()) throw InvalidInput("quantile of an empty group");
    const double h = (static_cast<double>(sorted.size()) - 1.0) * prob;
    const auto lo = static_cast<std::size_t>(std::floor(h));
    const std::size_t hi = std::min(lo + 1, sorted.size() - 1);
    return sorted[lo] + (h - static_cast<double>(lo)) * (sorted[hi] - sorted[lo]);
}

BoxplotStats boxplot_stats(std::span<const double> values, std::string group) {
    if (values.empty()) throw InvalidInput("boxplot of an empty group");
    std::vector<double> sorted(values.begin(), values.end());
    std::sort(sorted.begin(), sorted.end());
    BoxplotStats s;
    s.group = std::move(group);
    s.count = sorted.size();
    s.q1 = quantile_sorted(sorted, 0.25);
    s.median = quantile_sorted(sorted, 0.5);
    s.q3 = quantile_sorted(sorted, 0.75);
    const double iqr = s.q3 - s.q1;
    const double lo_fence = s.q1 - 1.5 * iqr;
    const double hi_fence = s.q3 + 1.5 * iqr;
    s.min = s.q1;
    s.max = s.q3;
    for (double v : sorted) {
        if (v < lo_fence || v > hi_fence) {
            s.outliers.push_back(v);
        } else {
            s.min = std::min(s.min, v);
            s.max = std::max(s.max, v);
        }
    }
    return s;
}

double coefficient_display_scale(ResponseKind response, std::size_t j) {
    if (j == 1) return response == ResponseKind::Linear ? 1e3 : 1e4;
    if (j == 2) return 1e8;
    return 1.0;
}

std::string coefficient_label(ResponseKind response, std::size_t j) {
    const double scale = coefficient_display_scale(response, j);
    std::string label = "beta" + std::to_string(j);
    if (scale != 1.0) {
        label += "_x1e" + std::to_string(static_cast<int>(std::lround(std::log10(scale))));
    }
    return label;
}

namespace {

std::string format_number(double v) {
    std::ostringstream os;
    os << v;
    return os.str();
}

std::string factor_label(const ScenarioResult& r, GroupFactor f, std::size_t coefficient) {
    switch (f) {
        case GroupFactor::Response: return std::string(to_string(r.response));
        case GroupFactor::Eta: return format_number(r.eta);
        case GroupFactor::Covariance: return std::string(to_string(r.covariance));
        case GroupFactor::Design: return std::string(to_string(r.design));
        case GroupFactor::Policy: return r.policy.label();
        case GroupFactor::Coefficient: return "beta" + std::to_string(coefficient);
    }
    return {};
}

}  // namespace

std::vector<MedianRow> median_table(std::span<const ScenarioResult> results, std::span<const GroupFactor> group_by) {
    const bool per_coefficient =
        std::find(group_by.begin(), group_by.end(), GroupFactor::Coefficient) != group_by.end();
    struct Group {
        std::vector<double> values;
        double scale = 0.0;
        bool mixed = false;
    };
    std::map<std::vector<std::string>, Group> groups;
    for (const auto& r : results) {
        if (!per_coefficient && r.mse.size() != 1) {
            throw InvalidInput("median_table: group by Coefficient when results carry several coefficients");
        }
        for (std::size_t j = 0; j < r.mse.size(); ++j) {
            std::vector<std::string> key;
            key.reserve(group_by.size());
            for (GroupFactor f : group_by) key.push_back(factor_label(r, f, j));
            Group& g = groups[key];
            const double scale = coefficient_display_scale(r.response, j);
            if (g.values.empty()) {
                g.scale = scale;
            } else if (g.scale != scale) {
                g.mixed = true;
            }
            g.values.push_back(r.mse[j]);
        }
    }
    std::vector<MedianRow> rows;
    rows.reserve(groups.size());
    for (auto& [key, g] : groups) {
        MedianRow row;
        row.key = key;
        row.count = g.values.size();
        row.median = median(std::move(g.values));
        row.scale = g.mixed ? 1.0 : g.scale;
        row.scaled_median = row.median * row.scale;
        rows.push_back(std::move(row));
    }
    return rows;
}

double PaperTable::cell(SpatialKind covariance, DesignKind design, std::size_t coefficient,
                        const BandwidthPolicy& policy) const {
    const auto pit = std::find(policies.begin(), policies.end(), policy);
    if (pit == policies.end()) return std::numeric_limits<double>::quiet_NaN();
    const auto col = static_cast<std::size_t>(pit - policies.begin());
    for (const auto& row : rows) {
        if (row.covariance == covariance && row.design == design && row.coefficient == coefficient) {
            return row.values[col];
        }
    }
    return std::numeric_limits<double>::quiet_NaN();
}

PaperTable paper_table(std::span<const ScenarioResult> results, ResponseKind response, double eta,
                       std::span<const BandwidthPolicy> policies) {
    PaperTable table{response, eta, {policies.begin(), policies.end()}, {}};
    const std::size_t k = static_cast<std::size_t>(coefficient_count(response));
    const SpatialKind cov_order[] = {SpatialKind::NoSpatial, SpatialKind::Ar1Ar1, SpatialKind::Matern};
    const DesignKind design_order[] = {DesignKind::Randomised, DesignKind::Systematic};
    for (SpatialKind cov : cov_order) {
        for (DesignKind design : design_order) {
            for (std::size_t j = 0; j < k; ++j) {
                PaperTableRow row{cov, design, j, {}};
                bool any = false;
                for (const auto& policy : policies) {
                    std::vector<double> values;
                    for (const auto& r : results) {
                        if (r.response == response && r.eta == eta && r.covariance == cov && r.design == design &&
                            r.policy == policy && j < r.mse.size()) {
                            values.push_back(r.mse[j]);
                        }
                    }
                    if (values.empty()) {
                        row.values.push_back(std::numeric_limits<double>::quiet_NaN());
                    } else {
                        any = true;
                        row.values.push_back(median(std::move(values)) * coefficient_display_scale(response, j));
                    }
                }
                if (any) table.rows.push_back(std::move(row));
            }
        }
    }
    return table;
}

std::map<int, std::size_t> bandwidth_histogram(std::span<const ScenarioResult> results, int lower, int upper) {
    std::map<int, std::size_t> bins;
    for (const auto& r : results) {
        if (!r.selected_bandwidth) {
            throw InvalidInput("bandwidth_histogram: result without a selected bandwidth");
        }
        const int bin = std::clamp(static_cast<int>(std::floor(*r.selected_bandwidth)), lower, upper);
        ++bins[bin];
    }
    return bins;
}

}  // namespace ofesim
