#pragma once

#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "ofesim/anova.hpp"
#include "ofesim/gwr.hpp"
#include "ofesim/metrics.hpp"
#include "ofesim/simulate.hpp"

namespace ofesim {

namespace fs = std::filesystem;

/// Shortest text that round-trips the double exactly ("%.17g"); NaN prints as NA.
std::string format_double(double value);

/// Minimal comma-separated table: a header and rows of unquoted cells.
struct CsvTable {
    std::vector<std::string> header;
    std::vector<std::vector<std::string>> rows;

    /// Throws SchemaError naming the first column that differs from `expected`.
    void require_header(std::span<const std::string> expected, const std::string& source) const;
    double number(std::size_t row, std::size_t col, const std::string& source) const;
};

CsvTable read_csv(const fs::path& path);
void write_text(const fs::path& path, const std::string& text);
std::string read_text(const fs::path& path);
nlohmann::json read_json(const fs::path& path);
void write_json(const fs::path& path, const nlohmann::json& j);

/// `row,range,rate`, one line per plot in rows-within-ranges order.
std::string design_csv(const FieldGrid& grid, const DesignPlan& plan);

/// `row,range,rate,yield,beta0,beta1[,beta2]`.
std::string trial_csv(const TrialData& trial);
nlohmann::json trial_sidecar(const TrialData& trial);
void write_trial(const fs::path& csv_path, const TrialData& trial);

/// Reads a trial CSV and its `.json` sidecar (same stem).
TrialData read_trial(const fs::path& csv_path);

/// `row,range,beta0_hat,beta1_hat[,beta2_hat],fitted`.
std::string fit_csv(const FieldGrid& grid, const GwrFit& fit);
nlohmann::json fit_summary(const GwrFit& fit);
void write_fit(const fs::path& csv_path, const FieldGrid& grid, const GwrFit& fit);

/// Estimates and summary of a stored fit; `hat` is not stored and stays empty.
GwrFit read_fit(const fs::path& csv_path, ResponseKind basis);

/// One line per (trial, policy): labels, the bandwidth used, and per-coefficient MSE.
std::string scores_csv(std::span<const ScenarioResult> results);
std::vector<ScenarioResult> read_scores(const fs::path& path);

/// `covariance,design,coefficient,bw5,bw9,bwAicc` with scaled medians.
std::string paper_table_csv(const PaperTable& table);

std::string boxplot_csv(std::span<const BoxplotStats> stats);

/// `term,df,sum_sq,pr_f`, terms followed by the residual row.
std::string anova_csv(const AnovaTable& table);

}  // namespace ofesim
