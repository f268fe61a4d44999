#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include <json.hpp>

#include "ofesim/metrics.hpp"
#include "ofesim/scenario.hpp"

namespace ofesim {

inline constexpr const char* kVersion = "0.1.0";

/// File stem of a trial, e.g. "s003_r042".
std::string trial_stem(int scenario_id, int replicate);

/// File stem of a fit, e.g. "s003_r042_bw9" or "s003_r042_bwAICc".
std::string fit_stem(int scenario_id, int replicate, const BandwidthPolicy& policy);

/// Fits one trial under one policy; AICc-optimal policies select the bandwidth first.
GwrFit fit_policy(const TrialData& trial, const BandwidthPolicy& policy, const ScenarioConfig& config);

ScenarioResult score_fit(const TrialData& trial, const GwrFit& fit, const BandwidthPolicy& policy);

/// Every trial fitted under every policy, ordered by (scenario id, replicate, policy).
/// When `emit_dir` is non-empty, trial and fit files go to emit_dir/trials and emit_dir/fits.
std::vector<ScenarioResult> run_experiment(const ScenarioConfig& config,
                                           const std::filesystem::path& emit_dir = {});

/// Config, config hash, seed, versions and the derived seeds of every trial.
nlohmann::json manifest_json(const ScenarioConfig& config);

/// Config stored in a manifest; `threads` keeps the caller's choice.
ScenarioConfig config_from_manifest(const std::filesystem::path& dir, int threads);

/// Median tables, boxplot statistics and figures, ANOVA tables and the bandwidth histogram.
void write_report(std::span<const ScenarioResult> results, const ScenarioConfig& config,
                  const std::filesystem::path& dir);

/// Whole experiment into config.out_dir, which must already exist. Files appear only
/// once everything succeeded.
void run_pipeline(const ScenarioConfig& config);

/// The same work split into stages that exchange files inside `dir`:
/// simulate writes manifest.json and trials/, fit writes fits/, score writes scores.csv,
/// report writes the tables and figures.
void stage_simulate(const ScenarioConfig& config);
void stage_fit(const std::filesystem::path& dir, int threads);
void stage_score(const std::filesystem::path& dir, int threads);
void stage_report(const std::filesystem::path& dir);

}  // namespace ofesim
