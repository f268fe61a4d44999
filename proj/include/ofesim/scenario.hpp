#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <memory>
#include <string>
#include <vector>

#include "ofesim/gwr.hpp"
#include "ofesim/simulate.hpp"

namespace ofesim {

/// Full experiment description. Every default reproduces the published setup:
/// 93 x 20 grid, rates {0, 35, 70, 105, 140}, both designs and responses,
/// eta in {1, 0.1}, NS / AR1(0.15) x AR1(0.5) / Matern(1, 1, 3/2), bandwidths 5, 9 and AICc,
/// 100 replicates.
struct ScenarioConfig {
    int n_rows = 93;
    int n_ranges = 20;
    TreatmentLevels levels;
    std::vector<DesignKind> designs{DesignKind::Randomised, DesignKind::Systematic};
    std::vector<ResponseKind> responses{ResponseKind::Linear, ResponseKind::Quadratic};
    std::vector<SpatialCovSpec> spatial{SpatialCovSpec::none(), SpatialCovSpec::ar1(), SpatialCovSpec::matern()};
    std::vector<double> etas{1.0, 0.1};
    std::vector<double> sigma_u{5.0, 0.01, 0.0001};
    double sigma_e = 1.0;
    std::vector<double> b_linear{65.0, 0.05};
    std::vector<double> b_quadratic{65.0, 0.05, -0.0003};
    std::vector<BandwidthPolicy> policies{BandwidthPolicy::fixed(5.0), BandwidthPolicy::fixed(9.0),
                                          BandwidthPolicy::aicc()};
    BandwidthSearch search;
    AiccFormula formula = AiccFormula::Standard;
    int replicates = 100;
    std::uint64_t seed = 20230601;
    int threads = 0;
    bool emit_trials = false;
    std::string out_dir = "out";

    void validate() const;
    ResponseSpec response_spec(ResponseKind kind) const;
    WithinGridCovSpec within_spec(double eta) const;
};

/// One (response, eta, spatial) combination; both designs of a replicate share its field.
struct FieldScenario {
    int id = 0;
    ResponseKind response = ResponseKind::Linear;
    double eta = 1.0;
    std::size_t spatial_index = 0;
};

/// Identity of one simulated trial.
struct TrialKey {
    int scenario_id = 0;  ///< field_scenario * n_designs + design_index
    int field_scenario = 0;
    std::size_t design_index = 0;
    int replicate = 0;
    std::uint64_t field_seed = 0;
    std::uint64_t trial_seed = 0;
};

/// Scenario enumeration order: response, then eta, then spatial kind.
std::vector<FieldScenario> field_scenarios(const ScenarioConfig& config);

/// All trials ordered by (scenario id, replicate). Seeds come from derive_seed:
/// the field seed uses (master, field scenario, replicate, 0), the design/noise seed
/// uses (master, scenario id, replicate, 1).
std::vector<TrialKey> enumerate_trials(const ScenarioConfig& config);

/// Lazily built Vs factors, one per spatial spec; safe to share across threads once built.
class SpatialFactorCache {
public:
    explicit SpatialFactorCache(const ScenarioConfig& config);
    const SpatialFactor& get(std::size_t spatial_index) const { return *factors_.at(spatial_index); }

private:
    std::vector<std::unique_ptr<SpatialFactor>> factors_;
};

/// Draws the coefficient field of (field scenario, replicate) and simulates every
/// design on it. The returned trials follow config.designs order.
std::vector<TrialData> simulate_replicate(const ScenarioConfig& config, const SpatialFactorCache& cache,
                                          int field_scenario, int replicate);

/// Every trial of the batch, ordered by (scenario id, replicate).
std::vector<TrialData> scenario_batch(const ScenarioConfig& config, std::uint64_t master_seed);

}  // namespace ofesim
