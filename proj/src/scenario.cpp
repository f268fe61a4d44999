#include "ofesim/scenario.hpp"

#include "ofesim/errors.hpp"
#include "ofesim/parallel.hpp"

namespace ofesim {

namespace {

template <typename T>
bool has_duplicates(const std::vector<T>& values) {
    for (std::size_t i = 0; i < values.size(); ++i) {
        for (std::size_t j = i + 1; j < values.size(); ++j) {
            if (values[i] == values[j]) return true;
        }
    }
    return false;
}

}  // namespace

void ScenarioConfig::validate() const {
    if (n_rows < 1 || n_ranges < 1) throw InvalidInput("grid dimensions must be positive");
    levels.validate();
    if (n_ranges % static_cast<int>(levels.size()) != 0) {
        throw InvalidInput("number of ranges must be a multiple of the number of treatment levels");
    }
    if (designs.empty() || has_duplicates(designs)) throw InvalidInput("designs must be a non-empty set");
    if (responses.empty() || has_duplicates(responses)) throw InvalidInput("responses must be a non-empty set");
    if (spatial.empty()) throw InvalidInput("at least one spatial covariance is required");
    std::vector<SpatialKind> kinds;
    for (const auto& s : spatial) {
        s.validate();
        kinds.push_back(s.kind);
    }
    if (has_duplicates(kinds)) throw InvalidInput("each spatial covariance kind may appear only once");
    if (etas.empty() || has_duplicates(etas)) throw InvalidInput("eta levels must be a non-empty set");
    for (double e : etas) {
        if (!(e > 0.0)) throw InvalidInput("eta levels must be positive");
    }
    if (policies.empty() || has_duplicates(policies)) throw InvalidInput("bandwidth policies must be a non-empty set");
    for (const auto& p : policies) {
        if (p.kind == BandwidthPolicy::Kind::Fixed) KernelSpec{p.value}.validate();
    }
    search.validate();
    if (replicates < 1) throw InvalidInput("replicate count must be at least 1");
    for (ResponseKind r : responses) {
        response_spec(r).validate();
        if (static_cast<int>(sigma_u.size()) < coefficient_count(r)) {
            throw InvalidInput("sigma_u needs one entry per coefficient of the " + std::string(to_string(r)) +
                               " response");
        }
    }
    WithinGridCovSpec{sigma_u, etas.front()}.validate();
}

ResponseSpec ScenarioConfig::response_spec(ResponseKind kind) const {
    ResponseSpec r;
    r.kind = kind;
    r.b = kind == ResponseKind::Linear ? b_linear : b_quadratic;
    r.sigma_e = sigma_e;
    return r;
}

WithinGridCovSpec ScenarioConfig::within_spec(double eta) const {
    return WithinGridCovSpec{sigma_u, eta};
}

std::vector<FieldScenario> field_scenarios(const ScenarioConfig& config) {
    std::vector<FieldScenario> out;
    int id = 0;
    for (ResponseKind r : config.responses) {
        for (double eta : config.etas) {
            for (std::size_t s = 0; s < config.spatial.size(); ++s) {
                out.push_back({id++, r, eta, s});
            }
        }
    }
    return out;
}

std::vector<TrialKey> enumerate_trials(const ScenarioConfig& config) {
    std::vector<TrialKey> keys;
    const auto scenarios = field_scenarios(config);
    const auto n_designs = static_cast<int>(config.designs.size());
    for (const auto& fs : scenarios) {
        for (int d = 0; d < n_designs; ++d) {
            const int scenario_id = fs.id * n_designs + d;
            for (int rep = 0; rep < config.replicates; ++rep) {
                TrialKey key;
                key.scenario_id = scenario_id;
                key.field_scenario = fs.id;
                key.design_index = static_cast<std::size_t>(d);
                key.replicate = rep;
                key.field_seed = derive_seed(config.seed, static_cast<std::uint64_t>(fs.id),
                                             static_cast<std::uint64_t>(rep), 0);
                key.trial_seed = derive_seed(config.seed, static_cast<std::uint64_t>(scenario_id),
                                             static_cast<std::uint64_t>(rep), 1);
                keys.push_back(key);
            }
        }
    }
    return keys;
}

SpatialFactorCache::SpatialFactorCache(const ScenarioConfig& config) {
    const FieldGrid grid(config.n_rows, config.n_ranges);
    for (const auto& spec : config.spatial) {
        factors_.push_back(std::make_unique<SpatialFactor>(grid, spec));
    }
}

std::vector<TrialData> simulate_replicate(const ScenarioConfig& config, const SpatialFactorCache& cache,
                                          int field_scenario, int replicate) {
    const auto scenarios = field_scenarios(config);
    if (field_scenario < 0 || field_scenario >= static_cast<int>(scenarios.size())) {
        throw InvalidInput("field scenario index out of range");
    }
    if (replicate < 0 || replicate >= config.replicates) throw InvalidInput("replicate index out of range");
    const FieldScenario& fs = scenarios[static_cast<std::size_t>(field_scenario)];
    const FieldGrid grid(config.n_rows, config.n_ranges);
    const ResponseSpec response = config.response_spec(fs.response);

    Rng field_rng(derive_seed(config.seed, static_cast<std::uint64_t>(fs.id), static_cast<std::uint64_t>(replicate), 0));
    const CoefficientField truth = sample_coefficient_field(grid, response, config.within_spec(fs.eta),
                                                            cache.get(fs.spatial_index), field_rng);

    std::vector<TrialData> out;
    const auto n_designs = static_cast<int>(config.designs.size());
    for (int d = 0; d < n_designs; ++d) {
        const int scenario_id = fs.id * n_designs + d;
        const std::uint64_t seed =
            derive_seed(config.seed, static_cast<std::uint64_t>(scenario_id), static_cast<std::uint64_t>(replicate), 1);
        Rng rng(seed);
        const DesignPlan plan = allocate_treatments(grid, config.levels, config.designs[static_cast<std::size_t>(d)], rng);
        TrialData trial = simulate_yield(plan, truth, response, rng);
        trial.labels.covariance = config.spatial[fs.spatial_index].kind;
        trial.labels.eta = fs.eta;
        trial.labels.seed = seed;
        trial.labels.scenario_id = scenario_id;
        trial.labels.replicate = replicate;
        out.push_back(std::move(trial));
    }
    return out;
}

std::vector<TrialData> scenario_batch(const ScenarioConfig& base, std::uint64_t master_seed) {
    ScenarioConfig config = base;
    config.seed = master_seed;
    config.validate();
    const SpatialFactorCache cache(config);
    const auto scenarios = field_scenarios(config);
    const std::size_t units = scenarios.size() * static_cast<std::size_t>(config.replicates);
    std::vector<std::vector<TrialData>> produced(units);
    parallel_for(units, config.threads, [&](std::size_t u) {
        const auto fs = static_cast<int>(u / static_cast<std::size_t>(config.replicates));
        const auto rep = static_cast<int>(u % static_cast<std::size_t>(config.replicates));
        produced[u] = simulate_replicate(config, cache, fs, rep);
    });

    // reorder from (field scenario, replicate, design) to (scenario id, replicate)
    std::vector<TrialData> out;
    out.reserve(units * config.designs.size());
    for (std::size_t fs = 0; fs < scenarios.size(); ++fs) {
        for (std::size_t d = 0; d < config.designs.size(); ++d) {
            for (int rep = 0; rep < config.replicates; ++rep) {
                out.push_back(produced[fs * static_cast<std::size_t>(config.replicates) + static_cast<std::size_t>(rep)][d]);
            }
        }
    }
    return out;
}

}  // namespace ofesim
