#include "ofesim/io.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <sstream>

#include "ofesim/errors.hpp"

namespace ofesim {

using nlohmann::json;

namespace {

std::vector<std::string> split(const std::string& line) {
    std::vector<std::string> cells;
    std::string cell;
    std::istringstream in(line);
    while (std::getline(in, cell, ',')) cells.push_back(cell);
    if (!line.empty() && line.back() == ',') cells.emplace_back();
    return cells;
}

std::vector<std::string> trial_header(int k) {
    std::vector<std::string> h{"row", "range", "rate", "yield"};
    for (int j = 0; j < k; ++j) h.push_back("beta" + std::to_string(j));
    return h;
}

std::vector<std::string> fit_header(int k) {
    std::vector<std::string> h{"row", "range"};
    for (int j = 0; j < k; ++j) h.push_back("beta" + std::to_string(j) + "_hat");
    h.emplace_back("fitted");
    return h;
}

const std::vector<std::string>& scores_header() {
    static const std::vector<std::string> h{"scenario_id", "replicate", "seed",      "design",   "response",
                                            "covariance",  "eta",       "policy",    "bandwidth", "mse_beta0",
                                            "mse_beta1",   "mse_beta2"};
    return h;
}

void join(std::string& out, const std::vector<std::string>& cells) {
    for (std::size_t i = 0; i < cells.size(); ++i) {
        if (i) out += ',';
        out += cells[i];
    }
    out += '\n';
}

fs::path sidecar_path(const fs::path& csv_path) {
    fs::path p = csv_path;
    p.replace_extension(".json");
    return p;
}

template <typename F>
auto schema_guard(const std::string& source, F&& body) {
    try {
        return body();
    } catch (const json::exception& e) {
        throw SchemaError(source + ": " + e.what());
    }
}

}  // namespace

std::string format_double(double value) {
    if (std::isnan(value)) return "NA";
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", value);
    return buf;
}

void CsvTable::require_header(std::span<const std::string> expected, const std::string& source) const {
    for (std::size_t c = 0; c < expected.size(); ++c) {
        if (c >= header.size()) {
            throw SchemaError(source + ": missing column '" + expected[c] + "' (column " + std::to_string(c + 1) + ")");
        }
        if (header[c] != expected[c]) {
            throw SchemaError(source + ": column " + std::to_string(c + 1) + " should be '" + expected[c] +
                              "' but is '" + header[c] + "'");
        }
    }
    if (header.size() > expected.size()) {
        throw SchemaError(source + ": unexpected column '" + header[expected.size()] + "'");
    }
    for (std::size_t r = 0; r < rows.size(); ++r) {
        if (rows[r].size() != header.size()) {
            throw SchemaError(source + ": line " + std::to_string(r + 2) + " has " + std::to_string(rows[r].size()) +
                              " cells, expected " + std::to_string(header.size()));
        }
    }
}

double CsvTable::number(std::size_t row, std::size_t col, const std::string& source) const {
    const std::string& text = rows.at(row).at(col);
    if (text == "NA") return std::nan("");
    char* end = nullptr;
    const double v = std::strtod(text.c_str(), &end);
    if (text.empty() || end != text.c_str() + text.size()) {
        throw SchemaError(source + ": column '" + header.at(col) + "' line " + std::to_string(row + 2) +
                          " is not a number ('" + text + "')");
    }
    return v;
}

CsvTable read_csv(const fs::path& path) {
    std::ifstream in(path);
    if (!in) throw InvalidInput("cannot open " + path.string());
    CsvTable t;
    std::string line;
    if (!std::getline(in, line)) return t;
    t.header = split(line);
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        t.rows.push_back(split(line));
    }
    return t;
}

void write_text(const fs::path& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw InvalidInput("cannot write " + path.string());
    out << text;
    if (!out) throw InvalidInput("failed writing " + path.string());
}

std::string read_text(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw InvalidInput("cannot open " + path.string());
    std::ostringstream os;
    os << in.rdbuf();
    return os.str();
}

json read_json(const fs::path& path) {
    const std::string text = read_text(path);
    try {
        return json::parse(text);
    } catch (const json::exception& e) {
        throw SchemaError(path.string() + " is not valid JSON: " + e.what());
    }
}

void write_json(const fs::path& path, const json& j) { write_text(path, j.dump(2) + "\n"); }

std::string design_csv(const FieldGrid& grid, const DesignPlan& plan) {
    if (plan.size() != grid.size()) throw InvalidInput("design does not match the grid");
    std::string out = "row,range,rate\n";
    for (std::size_t i = 0; i < grid.size(); ++i) {
        const auto& c = grid.coord(i);
        join(out, {std::to_string(c.row), std::to_string(c.range), format_double(plan.rate[i])});
    }
    return out;
}

std::string trial_csv(const TrialData& trial) {
    const FieldGrid grid = trial.grid();
    const auto k = static_cast<int>(trial.truth.beta.cols());
    std::string out;
    join(out, trial_header(k));
    for (std::size_t i = 0; i < grid.size(); ++i) {
        const auto& c = grid.coord(i);
        std::vector<std::string> cells{std::to_string(c.row), std::to_string(c.range),
                                       format_double(trial.design.rate[i]),
                                       format_double(trial.yield(static_cast<Eigen::Index>(i)))};
        for (int j = 0; j < k; ++j) cells.push_back(format_double(trial.truth.beta(static_cast<Eigen::Index>(i), j)));
        join(out, cells);
    }
    return out;
}

json trial_sidecar(const TrialData& trial) {
    const auto& l = trial.labels;
    return json{{"design", std::string(to_string(l.design))},
                {"response", std::string(to_string(l.response))},
                {"covariance", std::string(to_string(l.covariance))},
                {"eta", l.eta},
                {"seed", l.seed},
                {"scenario_id", l.scenario_id},
                {"replicate", l.replicate},
                {"grid", {{"rows", trial.design.n_rows}, {"ranges", trial.design.range_rate.size()}}},
                {"replicate_blocks", trial.design.replicate_blocks},
                {"strips_per_block", trial.design.strips_per_block},
                {"range_rate", trial.design.range_rate}};
}

void write_trial(const fs::path& csv_path, const TrialData& trial) {
    write_text(csv_path, trial_csv(trial));
    write_json(sidecar_path(csv_path), trial_sidecar(trial));
}

TrialData read_trial(const fs::path& csv_path) {
    const std::string source = csv_path.string();
    const json side = read_json(sidecar_path(csv_path));
    TrialData t;
    schema_guard(source, [&] {
        t.labels.design = parse_design_kind(side.at("design").get<std::string>());
        t.labels.response = parse_response_kind(side.at("response").get<std::string>());
        t.labels.covariance = parse_spatial_kind(side.at("covariance").get<std::string>());
        t.labels.eta = side.at("eta").get<double>();
        t.labels.seed = side.at("seed").get<std::uint64_t>();
        t.labels.scenario_id = side.at("scenario_id").get<int>();
        t.labels.replicate = side.at("replicate").get<int>();
        t.design.kind = t.labels.design;
        t.design.n_rows = side.at("grid").at("rows").get<int>();
        t.design.replicate_blocks = side.at("replicate_blocks").get<int>();
        t.design.strips_per_block = side.at("strips_per_block").get<int>();
        t.design.range_rate = side.at("range_rate").get<std::vector<double>>();
        return 0;
    });
    const FieldGrid grid = t.grid();
    const int k = coefficient_count(t.labels.response);
    const CsvTable csv = read_csv(csv_path);
    csv.require_header(trial_header(k), source);
    if (csv.rows.size() != grid.size()) {
        throw SchemaError(source + ": expected " + std::to_string(grid.size()) + " plots, found " +
                          std::to_string(csv.rows.size()));
    }
    const auto n = static_cast<Eigen::Index>(grid.size());
    t.design.rate.resize(grid.size());
    t.yield.resize(n);
    t.truth.beta.resize(n, k);
    for (std::size_t r = 0; r < csv.rows.size(); ++r) {
        const int row = static_cast<int>(csv.number(r, 0, source));
        const int range = static_cast<int>(csv.number(r, 1, source));
        const std::size_t i = grid.index(row, range);
        t.design.rate[i] = csv.number(r, 2, source);
        t.yield(static_cast<Eigen::Index>(i)) = csv.number(r, 3, source);
        for (int j = 0; j < k; ++j) {
            t.truth.beta(static_cast<Eigen::Index>(i), j) = csv.number(r, 4 + static_cast<std::size_t>(j), source);
        }
    }
    return t;
}

std::string fit_csv(const FieldGrid& grid, const GwrFit& fit) {
    const auto k = static_cast<int>(fit.beta_hat.cols());
    std::string out;
    join(out, fit_header(k));
    for (std::size_t i = 0; i < grid.size(); ++i) {
        const auto& c = grid.coord(i);
        const auto ii = static_cast<Eigen::Index>(i);
        std::vector<std::string> cells{std::to_string(c.row), std::to_string(c.range)};
        for (int j = 0; j < k; ++j) cells.push_back(format_double(fit.beta_hat(ii, j)));
        cells.push_back(format_double(fit.fitted(ii)));
        join(out, cells);
    }
    return out;
}

json fit_summary(const GwrFit& fit) {
    return json{{"bandwidth", fit.bandwidth},
                {"policy", fit.policy.label()},
                {"trace_s", fit.trace_s},
                {"tau2", fit.tau2},
                {"rss", fit.rss},
                {"aicc", fit.aicc}};
}

void write_fit(const fs::path& csv_path, const FieldGrid& grid, const GwrFit& fit) {
    write_text(csv_path, fit_csv(grid, fit));
    write_json(sidecar_path(csv_path), fit_summary(fit));
}

GwrFit read_fit(const fs::path& csv_path, ResponseKind basis) {
    const std::string source = csv_path.string();
    const json side = read_json(sidecar_path(csv_path));
    GwrFit fit;
    schema_guard(source, [&] {
        fit.bandwidth = side.at("bandwidth").get<double>();
        fit.policy = BandwidthPolicy::parse(side.at("policy").get<std::string>());
        fit.trace_s = side.at("trace_s").get<double>();
        fit.tau2 = side.at("tau2").get<double>();
        fit.rss = side.at("rss").get<double>();
        fit.aicc = side.at("aicc").is_number() ? side.at("aicc").get<double>()
                                               : std::numeric_limits<double>::infinity();
        return 0;
    });
    const int k = coefficient_count(basis);
    const CsvTable csv = read_csv(csv_path);
    csv.require_header(fit_header(k), source);
    const auto n = static_cast<Eigen::Index>(csv.rows.size());
    fit.beta_hat.resize(n, k);
    fit.fitted.resize(n);
    for (Eigen::Index r = 0; r < n; ++r) {
        const auto rr = static_cast<std::size_t>(r);
        for (int j = 0; j < k; ++j) fit.beta_hat(r, j) = csv.number(rr, 2 + static_cast<std::size_t>(j), source);
        fit.fitted(r) = csv.number(rr, 2 + static_cast<std::size_t>(k), source);
    }
    return fit;
}

std::string scores_csv(std::span<const ScenarioResult> results) {
    std::string out;
    join(out, scores_header());
    for (const auto& r : results) {
        std::vector<std::string> cells{std::to_string(r.scenario_id),
                                       std::to_string(r.replicate),
                                       std::to_string(r.seed),
                                       std::string(to_string(r.design)),
                                       std::string(to_string(r.response)),
                                       std::string(to_string(r.covariance)),
                                       format_double(r.eta),
                                       r.policy.label(),
                                       format_double(r.selected_bandwidth ? *r.selected_bandwidth : r.policy.value)};
        for (std::size_t j = 0; j < 3; ++j) cells.push_back(j < r.mse.size() ? format_double(r.mse[j]) : "");
        join(out, cells);
    }
    return out;
}

std::vector<ScenarioResult> read_scores(const fs::path& path) {
    const std::string source = path.string();
    const CsvTable csv = read_csv(path);
    if (csv.header.empty()) throw SchemaError(source + ": empty score file");
    csv.require_header(scores_header(), source);
    std::vector<ScenarioResult> out;
    out.reserve(csv.rows.size());
    for (std::size_t r = 0; r < csv.rows.size(); ++r) {
        const auto& row = csv.rows[r];
        ScenarioResult s;
        try {
            s.scenario_id = std::stoi(row[0]);
            s.replicate = std::stoi(row[1]);
            s.seed = std::stoull(row[2]);
            s.design = parse_design_kind(row[3]);
            s.response = parse_response_kind(row[4]);
            s.covariance = parse_spatial_kind(row[5]);
            s.policy = BandwidthPolicy::parse(row[7]);
        } catch (const std::exception& e) {
            throw SchemaError(source + ": line " + std::to_string(r + 2) + ": " + e.what());
        }
        s.eta = csv.number(r, 6, source);
        const double h = csv.number(r, 8, source);
        if (s.policy.kind == BandwidthPolicy::Kind::AiccOptimal) s.selected_bandwidth = h;
        const int k = coefficient_count(s.response);
        for (int j = 0; j < k; ++j) s.mse.push_back(csv.number(r, 9 + static_cast<std::size_t>(j), source));
        out.push_back(std::move(s));
    }
    return out;
}

std::string paper_table_csv(const PaperTable& table) {
    std::string out;
    std::vector<std::string> header{"covariance", "design", "coefficient"};
    for (const auto& p : table.policies) header.push_back("bw" + p.label());
    join(out, header);
    for (const auto& row : table.rows) {
        std::vector<std::string> cells{std::string(to_string(row.covariance)), std::string(to_string(row.design)),
                                       coefficient_label(table.response, row.coefficient)};
        for (double v : row.values) cells.push_back(format_double(v));
        join(out, cells);
    }
    return out;
}

std::string boxplot_csv(std::span<const BoxplotStats> stats) {
    std::string out = "group,count,min,q1,median,q3,max,outliers\n";
    for (const auto& s : stats) {
        std::string outliers;
        for (std::size_t i = 0; i < s.outliers.size(); ++i) {
            if (i) outliers += ';';
            outliers += format_double(s.outliers[i]);
        }
        join(out, {s.group, std::to_string(s.count), format_double(s.min), format_double(s.q1),
                   format_double(s.median), format_double(s.q3), format_double(s.max), outliers});
    }
    return out;
}

std::string anova_csv(const AnovaTable& table) {
    std::string out = "term,df,sum_sq,pr_f\n";
    for (const auto& row : table.terms) {
        join(out, {row.term, std::to_string(row.df), format_double(row.sum_sq), format_double(row.p_value)});
    }
    join(out, {"Residuals", std::to_string(table.residual.df), format_double(table.residual.sum_sq), "NA"});
    return out;
}

}  // namespace ofesim
