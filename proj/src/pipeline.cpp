#include "ofesim/pipeline.hpp"

#include <Eigen/Core>
#include <cstdio>
#include <iostream>
#include <unistd.h>

#include "ofesim/anova.hpp"
#include "ofesim/config.hpp"
#include "ofesim/errors.hpp"
#include "ofesim/io.hpp"
#include "ofesim/parallel.hpp"
#include "ofesim/svg.hpp"

namespace ofesim {

using nlohmann::json;

namespace {

/// Collects output inside a hidden directory and moves it into place on commit;
/// an uncommitted staging area is removed.
class Staging {
public:
    explicit Staging(const fs::path& out) : out_(out) {
        if (!fs::is_directory(out)) throw InvalidInput("output directory " + out.string() + " does not exist");
        tmp_ = out / (".ofesim-staging-" + std::to_string(::getpid()));
        fs::remove_all(tmp_);
        fs::create_directory(tmp_);
    }
    ~Staging() {
        std::error_code ec;
        fs::remove_all(tmp_, ec);
    }
    Staging(const Staging&) = delete;
    Staging& operator=(const Staging&) = delete;

    const fs::path& path() const { return tmp_; }

    void commit() {
        for (const auto& entry : fs::directory_iterator(tmp_)) {
            const fs::path target = out_ / entry.path().filename();
            if (fs::is_directory(target) && fs::is_directory(entry.path())) {
                // merge so earlier stages' files survive
                for (const auto& inner : fs::directory_iterator(entry.path())) {
                    fs::rename(inner.path(), target / inner.path().filename());
                }
            } else {
                fs::remove_all(target);
                fs::rename(entry.path(), target);
            }
        }
    }

private:
    fs::path out_;
    fs::path tmp_;
};

std::string eta_tag(double eta) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%g", eta);
    return buf;
}

json config_record(const ScenarioConfig& config) {
    json j = config_to_json(config);
    j.erase("threads");
    j.erase("out");
    j.erase("emit_trials");
    return j;
}

std::vector<ScenarioResult> flatten(const ScenarioConfig& config,
                                    const std::vector<std::vector<std::vector<ScenarioResult>>>& per_unit) {
    // per_unit[field scenario * R + replicate][design][policy]
    std::vector<ScenarioResult> out;
    for (const auto& key : enumerate_trials(config)) {
        const auto u = static_cast<std::size_t>(key.field_scenario) * static_cast<std::size_t>(config.replicates) +
                       static_cast<std::size_t>(key.replicate);
        for (const auto& r : per_unit[u][key.design_index]) out.push_back(r);
    }
    return out;
}

std::string group_name(const ScenarioResult& r, std::size_t j) {
    return std::string(to_string(r.covariance)) + "/" + std::string(to_string(r.design)) + "/" + r.policy.label() +
           "/beta" + std::to_string(j);
}

}  // namespace

std::string trial_stem(int scenario_id, int replicate) {
    char buf[48];
    std::snprintf(buf, sizeof buf, "s%03d_r%03d", scenario_id, replicate);
    return buf;
}

std::string fit_stem(int scenario_id, int replicate, const BandwidthPolicy& policy) {
    return trial_stem(scenario_id, replicate) + "_bw" + policy.label();
}

GwrFit fit_policy(const TrialData& trial, const BandwidthPolicy& policy, const ScenarioConfig& config) {
    const GwrOptions options{config.formula, 1};
    const ResponseKind basis = trial.labels.response;
    double h = policy.value;
    if (policy.kind == BandwidthPolicy::Kind::AiccOptimal) {
        h = select_bandwidth_aicc(trial, basis, config.search, options).bandwidth;
    }
    GwrFit fit = gwr_fit(trial, basis, KernelSpec{h}, options);
    fit.policy = policy;
    return fit;
}

ScenarioResult score_fit(const TrialData& trial, const GwrFit& fit, const BandwidthPolicy& policy) {
    ScenarioResult r;
    r.design = trial.labels.design;
    r.response = trial.labels.response;
    r.covariance = trial.labels.covariance;
    r.eta = trial.labels.eta;
    r.policy = policy;
    r.scenario_id = trial.labels.scenario_id;
    r.replicate = trial.labels.replicate;
    r.seed = trial.labels.seed;
    r.mse = coefficient_mse(trial.truth, fit);
    if (policy.kind == BandwidthPolicy::Kind::AiccOptimal) r.selected_bandwidth = fit.bandwidth;
    return r;
}

std::vector<ScenarioResult> run_experiment(const ScenarioConfig& config, const fs::path& emit_dir) {
    config.validate();
    const SpatialFactorCache cache(config);
    const auto n_fields = field_scenarios(config).size();
    const auto units = n_fields * static_cast<std::size_t>(config.replicates);
    if (!emit_dir.empty()) {
        fs::create_directories(emit_dir / "trials");
        fs::create_directories(emit_dir / "fits");
    }
    std::vector<std::vector<std::vector<ScenarioResult>>> per_unit(units);
    parallel_for(units, config.threads, [&](std::size_t u) {
        const auto fs_id = static_cast<int>(u / static_cast<std::size_t>(config.replicates));
        const auto rep = static_cast<int>(u % static_cast<std::size_t>(config.replicates));
        const auto trials = simulate_replicate(config, cache, fs_id, rep);
        auto& slot = per_unit[u];
        slot.resize(trials.size());
        for (std::size_t d = 0; d < trials.size(); ++d) {
            const TrialData& trial = trials[d];
            const FieldGrid grid = trial.grid();
            if (!emit_dir.empty()) {
                write_trial(emit_dir / "trials" / (trial_stem(trial.labels.scenario_id, rep) + ".csv"), trial);
            }
            for (const auto& policy : config.policies) {
                const GwrFit fit = fit_policy(trial, policy, config);
                if (!emit_dir.empty()) {
                    write_fit(emit_dir / "fits" / (fit_stem(trial.labels.scenario_id, rep, policy) + ".csv"), grid,
                              fit);
                }
                slot[d].push_back(score_fit(trial, fit, policy));
            }
        }
    });
    return flatten(config, per_unit);
}

json manifest_json(const ScenarioConfig& config) {
    json trials = json::array();
    const auto fields = field_scenarios(config);
    for (const auto& key : enumerate_trials(config)) {
        const auto& f = fields[static_cast<std::size_t>(key.field_scenario)];
        trials.push_back({{"scenario_id", key.scenario_id},
                          {"replicate", key.replicate},
                          {"field_scenario", key.field_scenario},
                          {"design", std::string(to_string(config.designs[key.design_index]))},
                          {"response", std::string(to_string(f.response))},
                          {"covariance", std::string(to_string(config.spatial[f.spatial_index].kind))},
                          {"eta", f.eta},
                          {"field_seed", key.field_seed},
                          {"trial_seed", key.trial_seed}});
    }
    return json{{"version", kVersion},
                {"versions",
                 {{"ofesim", kVersion},
                  {"eigen", std::to_string(EIGEN_WORLD_VERSION) + "." + std::to_string(EIGEN_MAJOR_VERSION) + "." +
                                std::to_string(EIGEN_MINOR_VERSION)},
                  {"nlohmann_json", std::to_string(NLOHMANN_JSON_VERSION_MAJOR) + "." +
                                        std::to_string(NLOHMANN_JSON_VERSION_MINOR) + "." +
                                        std::to_string(NLOHMANN_JSON_VERSION_PATCH)}}},
                {"config", config_record(config)},
                {"config_hash", config_hash(config)},
                {"seed", config.seed},
                {"trials", trials}};
}

ScenarioConfig config_from_manifest(const fs::path& dir, int threads) {
    const fs::path path = dir / "manifest.json";
    if (!fs::exists(path)) throw InvalidInput("no manifest.json in " + dir.string() + "; run the simulate stage first");
    const json m = read_json(path);
    if (!m.contains("config")) throw SchemaError(path.string() + ": missing key 'config'");
    ScenarioConfig config = config_from_json(m.at("config"));
    config.threads = threads;
    config.out_dir = dir.string();
    return config;
}

void write_report(std::span<const ScenarioResult> results, const ScenarioConfig& config, const fs::path& dir) {
    if (results.empty()) throw InvalidInput("no scored results to report");
    fs::create_directories(dir / "tables");
    fs::create_directories(dir / "figures");

    // median tables, one per (response, eta)
    for (ResponseKind response : config.responses) {
        for (double eta : config.etas) {
            const PaperTable table = paper_table(results, response, eta, config.policies);
            const std::string tag = std::string(to_string(response)) + "_eta" + eta_tag(eta);
            write_text(dir / "tables" / ("median_mse_" + tag + ".csv"), paper_table_csv(table));
        }
    }

    // boxplots of ln(MSE): one stats file, one figure per (response, eta)
    std::vector<BoxplotStats> all_stats;
    for (ResponseKind response : config.responses) {
        for (double eta : config.etas) {
            const int k = coefficient_count(response);
            std::vector<BoxplotPanel> panels;
            for (int j = 0; j < k; ++j) {
                BoxplotPanel panel;
                panel.title = "beta" + std::to_string(j);
                for (const auto& spatial : config.spatial) {
                    for (DesignKind design : config.designs) {
                        for (const auto& policy : config.policies) {
                            std::vector<double> values;
                            std::string name;
                            for (const auto& r : results) {
                                if (r.response != response || r.eta != eta || r.covariance != spatial.kind ||
                                    r.design != design || !(r.policy == policy)) {
                                    continue;
                                }
                                values.push_back(r.ln_mse(static_cast<std::size_t>(j)));
                                if (name.empty()) name = group_name(r, static_cast<std::size_t>(j));
                            }
                            if (values.empty()) continue;
                            BoxplotStats s = boxplot_stats(values, std::string(to_string(response)) + "/eta" +
                                                                       eta_tag(eta) + "/" + name);
                            all_stats.push_back(s);
                            s.group = std::string(to_string(spatial.kind)) + " " +
                                      std::string(to_string(design)).substr(0, 3) + " " + policy.label();
                            panel.boxes.push_back(std::move(s));
                        }
                    }
                }
                panels.push_back(std::move(panel));
            }
            const std::string tag = std::string(to_string(response)) + "_eta" + eta_tag(eta);
            write_text(dir / "figures" / ("boxplot_" + tag + ".svg"),
                       boxplot_svg("ln(MSE), " + std::string(to_string(response)) + " response, eta = " + eta_tag(eta),
                                   panels));
        }
    }
    write_text(dir / "tables" / "boxplot_stats.csv", boxplot_csv(all_stats));

    // factorial ANOVA per response
    for (ResponseKind response : config.responses) {
        try {
            const FactorFrame frame = build_frame(results, response);
            write_text(dir / "tables" / ("anova_" + std::string(to_string(response)) + ".csv"),
                       anova_csv(anova_fit(frame)));
        } catch (const InvalidInput& e) {
            std::cerr << "ofesim: skipping ANOVA for the " << to_string(response) << " response: " << e.what()
                      << "\n";
        }
    }

    // AICc-selected bandwidths
    std::vector<ScenarioResult> selected;
    for (const auto& r : results) {
        if (r.selected_bandwidth) selected.push_back(r);
    }
    if (!selected.empty()) {
        const int upper = static_cast<int>(std::floor(config.search.upper));
        const int lower = static_cast<int>(std::floor(config.search.lower));
        std::string csv = "response,eta,covariance,design,bin,count\n";
        std::vector<HistogramPanel> panels;
        for (const auto& spatial : config.spatial) {
            HistogramPanel panel;
            panel.title = std::string(to_string(spatial.kind));
            for (ResponseKind response : config.responses) {
                for (double eta : config.etas) {
                    for (DesignKind design : config.designs) {
                        std::vector<ScenarioResult> group;
                        for (const auto& r : selected) {
                            if (r.response == response && r.eta == eta && r.covariance == spatial.kind &&
                                r.design == design) {
                                group.push_back(r);
                            }
                        }
                        for (const auto& [bin, count] : bandwidth_histogram(group, lower, upper)) {
                            csv += std::string(to_string(response)) + "," + format_double(eta) + "," +
                                   std::string(to_string(spatial.kind)) + "," + std::string(to_string(design)) + "," +
                                   std::to_string(bin) + "," + std::to_string(count) + "\n";
                            panel.bins[bin] += count;
                        }
                    }
                }
            }
            panels.push_back(std::move(panel));
        }
        write_text(dir / "tables" / "bandwidth_histogram.csv", csv);
        write_text(dir / "figures" / "bandwidth_histogram.svg",
                   histogram_svg("AICc-selected bandwidths", panels, lower, upper));
    }
}

void run_pipeline(const ScenarioConfig& config) {
    config.validate();
    Staging staging(config.out_dir);
    const auto results = run_experiment(config, config.emit_trials ? staging.path() : fs::path{});
    write_json(staging.path() / "manifest.json", manifest_json(config));
    write_text(staging.path() / "scores.csv", scores_csv(results));
    write_report(results, config, staging.path());
    staging.commit();
}

void stage_simulate(const ScenarioConfig& config) {
    config.validate();
    Staging staging(config.out_dir);
    const SpatialFactorCache cache(config);
    const auto units = field_scenarios(config).size() * static_cast<std::size_t>(config.replicates);
    fs::create_directories(staging.path() / "trials");
    parallel_for(units, config.threads, [&](std::size_t u) {
        const auto fs_id = static_cast<int>(u / static_cast<std::size_t>(config.replicates));
        const auto rep = static_cast<int>(u % static_cast<std::size_t>(config.replicates));
        for (const auto& trial : simulate_replicate(config, cache, fs_id, rep)) {
            write_trial(staging.path() / "trials" / (trial_stem(trial.labels.scenario_id, rep) + ".csv"), trial);
        }
    });
    write_json(staging.path() / "manifest.json", manifest_json(config));
    staging.commit();
}

void stage_fit(const fs::path& dir, int threads) {
    const ScenarioConfig config = config_from_manifest(dir, threads);
    const auto keys = enumerate_trials(config);
    Staging staging(dir);
    fs::create_directories(staging.path() / "fits");
    parallel_for(keys.size(), threads, [&](std::size_t i) {
        const auto& key = keys[i];
        const TrialData trial = read_trial(dir / "trials" / (trial_stem(key.scenario_id, key.replicate) + ".csv"));
        const FieldGrid grid = trial.grid();
        for (const auto& policy : config.policies) {
            write_fit(staging.path() / "fits" / (fit_stem(key.scenario_id, key.replicate, policy) + ".csv"), grid,
                      fit_policy(trial, policy, config));
        }
    });
    staging.commit();
}

void stage_score(const fs::path& dir, int threads) {
    const ScenarioConfig config = config_from_manifest(dir, threads);
    const auto keys = enumerate_trials(config);
    std::vector<std::vector<ScenarioResult>> per_trial(keys.size());
    parallel_for(keys.size(), threads, [&](std::size_t i) {
        const auto& key = keys[i];
        const TrialData trial = read_trial(dir / "trials" / (trial_stem(key.scenario_id, key.replicate) + ".csv"));
        for (const auto& policy : config.policies) {
            const fs::path path = dir / "fits" / (fit_stem(key.scenario_id, key.replicate, policy) + ".csv");
            if (!fs::exists(path)) throw InvalidInput("missing fit " + path.string() + "; run the fit stage first");
            GwrFit fit = read_fit(path, trial.labels.response);
            if (fit.beta_hat.rows() != static_cast<Eigen::Index>(trial.size())) {
                throw SchemaError(path.string() + ": fit covers " + std::to_string(fit.beta_hat.rows()) +
                                  " plots but the trial has " + std::to_string(trial.size()));
            }
            per_trial[i].push_back(score_fit(trial, fit, policy));
        }
    });
    std::vector<ScenarioResult> results;
    for (auto& v : per_trial) {
        for (auto& r : v) results.push_back(std::move(r));
    }
    Staging staging(dir);
    write_text(staging.path() / "scores.csv", scores_csv(results));
    staging.commit();
}

void stage_report(const fs::path& dir) {
    const ScenarioConfig config = config_from_manifest(dir, 1);
    const fs::path path = dir / "scores.csv";
    if (!fs::exists(path)) throw InvalidInput("no scores.csv in " + dir.string() + "; run the score stage first");
    const auto results = read_scores(path);
    if (results.empty()) throw InvalidInput(path.string() + " holds no scored results");
    Staging staging(dir);
    write_report(results, config, staging.path());
    staging.commit();
}

}  // namespace ofesim
