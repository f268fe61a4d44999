// ofesim: simulate on-farm trials, fit GWR, score and report.

#include <CLI11.hpp>
#include <iostream>
#include <optional>

#include <json.hpp>

#include "ofesim/config.hpp"
#include "ofesim/errors.hpp"
#include "ofesim/io.hpp"
#include "ofesim/pipeline.hpp"

using namespace ofesim;

namespace {

struct CommonFlags {
    std::string config;
    std::optional<std::uint64_t> seed;
    std::optional<int> threads;
    std::optional<std::string> out;
    bool emit_trials = false;
    std::optional<std::string> formula;

    void attach(CLI::App* app, bool emit) {
        app->add_option("--config", config, "JSON configuration (defaults reproduce the published experiment)");
        app->add_option("--seed", seed, "master seed");
        app->add_option("--threads", threads, "worker threads, 0 = all cores");
        app->add_option("--out", out, "existing output directory");
        app->add_option("--aicc-formula", formula, "standard | paper-literal")
            ->check(CLI::IsMember({"standard", "paper-literal"}));
        if (emit) app->add_flag("--emit-trials", emit_trials, "also write per-trial and per-fit CSVs");
    }

    ScenarioConfig resolve() const {
        ScenarioConfig c = config.empty() ? ScenarioConfig{} : load_config(config);
        if (seed) c.seed = *seed;
        if (threads) c.threads = *threads;
        if (out) c.out_dir = *out;
        if (emit_trials) c.emit_trials = true;
        if (formula) c.formula = parse_aicc_formula(*formula);
        c.validate();
        return c;
    }
};

const char* error_type(const std::exception& e) {
    if (dynamic_cast<const SchemaError*>(&e)) return "SchemaError";
    if (dynamic_cast<const InvalidInput*>(&e)) return "InvalidInput";
    if (dynamic_cast<const SingularFit*>(&e)) return "SingularFit";
    if (dynamic_cast<const FactorizationError*>(&e)) return "FactorizationError";
    if (dynamic_cast<const SelectionError*>(&e)) return "SelectionError";
    if (dynamic_cast<const std::filesystem::filesystem_error*>(&e)) return "FilesystemError";
    return "Error";
}

int report_error(const std::string& command, const std::exception& e) {
    nlohmann::json record{{"error", {{"command", command}, {"type", error_type(e)}, {"message", e.what()}}}};
    if (const auto* s = dynamic_cast<const SingularFit*>(&e)) {
        record["error"]["query"] = s->query();
        record["error"]["bandwidth"] = s->bandwidth();
    }
    std::cerr << record.dump() << std::endl;
    return 1;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"On-farm experiment simulation with geographically weighted regression"};
    app.require_subcommand(1);
    app.set_version_flag("--version", kVersion);

    CommonFlags run_flags, sim_flags;
    auto* run = app.add_subcommand("run", "simulate, fit, score and report in one go");
    run_flags.attach(run, true);
    auto* sim = app.add_subcommand("simulate", "write manifest.json and trials/ into the output directory");
    sim_flags.attach(sim, false);

    std::string fit_dir, trial_path, fit_output, fit_formula = "standard";
    std::string fit_bandwidth;
    int fit_threads = 0;
    auto* fit = app.add_subcommand("fit", "fit every stored trial, or a single trial file");
    fit->add_option("--out", fit_dir, "directory holding manifest.json and trials/");
    fit->add_option("--threads", fit_threads, "worker threads, 0 = all cores");
    fit->add_option("--trial", trial_path, "single trial CSV (with its JSON sidecar)");
    fit->add_option("--bandwidth", fit_bandwidth, "bandwidth for --trial: a number or 'aicc'");
    fit->add_option("--output", fit_output, "fit CSV to write for --trial (default: stdout)");
    fit->add_option("--aicc-formula", fit_formula, "standard | paper-literal for --trial")
        ->check(CLI::IsMember({"standard", "paper-literal"}));

    std::string score_dir;
    int score_threads = 0;
    auto* score = app.add_subcommand("score", "score stored fits into scores.csv");
    score->add_option("--out", score_dir, "directory holding the earlier stages")->required();
    score->add_option("--threads", score_threads, "worker threads, 0 = all cores");

    std::string report_dir;
    auto* report = app.add_subcommand("report", "tables, ANOVA and figures from scores.csv");
    report->add_option("--out", report_dir, "directory holding manifest.json and scores.csv")->required();

    std::string design_output, design_kind = "systematic";
    int design_rows = 93, design_ranges = 20;
    std::uint64_t design_seed = 1;
    auto* design = app.add_subcommand("design", "write one treatment layout as row,range,rate");
    design->add_option("--rows", design_rows);
    design->add_option("--ranges", design_ranges);
    design->add_option("--kind", design_kind)->check(CLI::IsMember({"systematic", "randomised"}));
    design->add_option("--seed", design_seed);
    design->add_option("--output", design_output, "CSV path (default: stdout)");

    CLI11_PARSE(app, argc, argv);

    const std::string command = app.get_subcommands().front()->get_name();
    try {
        if (*run) {
            run_pipeline(run_flags.resolve());
        } else if (*sim) {
            stage_simulate(sim_flags.resolve());
        } else if (*fit) {
            if (!trial_path.empty()) {
                if (fit_bandwidth.empty()) throw InvalidInput("--trial needs --bandwidth");
                ScenarioConfig c;
                c.formula = parse_aicc_formula(fit_formula);
                const TrialData trial = read_trial(trial_path);
                const GwrFit g = fit_policy(trial, BandwidthPolicy::parse(fit_bandwidth), c);
                if (fit_output.empty()) {
                    std::cout << fit_csv(trial.grid(), g);
                } else {
                    write_fit(fit_output, trial.grid(), g);
                }
            } else {
                if (fit_dir.empty()) throw InvalidInput("fit needs --out DIR or --trial FILE");
                stage_fit(fit_dir, fit_threads);
            }
        } else if (*score) {
            stage_score(score_dir, score_threads);
        } else if (*report) {
            stage_report(report_dir);
        } else if (*design) {
            const FieldGrid grid(design_rows, design_ranges);
            Rng rng(design_seed);
            const DesignPlan plan = allocate_treatments(grid, TreatmentLevels{}, parse_design_kind(design_kind), rng);
            if (design_output.empty()) {
                std::cout << design_csv(grid, plan);
            } else {
                write_text(design_output, design_csv(grid, plan));
            }
        }
    } catch (const std::exception& e) {
        return report_error(command, e);
    }
    return 0;
}
