#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <json.hpp>

#include "ofesim/anova.hpp"
#include "ofesim/config.hpp"
#include "ofesim/errors.hpp"
#include "ofesim/io.hpp"
#include "ofesim/pipeline.hpp"

namespace py = pybind11;
using namespace ofesim;

namespace {

ScenarioConfig parse_config(const std::string& text) {
    return config_from_json(text.empty() ? nlohmann::json::object() : nlohmann::json::parse(text));
}

py::dict fit_dict(const GwrFit& f) {
    py::dict d;
    d["beta_hat"] = f.beta_hat;
    d["fitted"] = f.fitted;
    d["hat"] = f.hat;
    d["rss"] = f.rss;
    d["trace_s"] = f.trace_s;
    d["tau2"] = f.tau2;
    d["aicc"] = f.aicc;
    d["bandwidth"] = f.bandwidth;
    return d;
}

py::dict trial_dict(const TrialData& t) {
    py::dict d;
    d["rows"] = t.design.n_rows;
    d["ranges"] = static_cast<int>(t.design.range_rate.size());
    d["rate"] = t.design.rate;
    d["yield"] = t.yield;
    d["beta"] = t.truth.beta;
    d["design"] = std::string(to_string(t.labels.design));
    d["response"] = std::string(to_string(t.labels.response));
    d["covariance"] = std::string(to_string(t.labels.covariance));
    d["eta"] = t.labels.eta;
    d["seed"] = t.labels.seed;
    d["scenario_id"] = t.labels.scenario_id;
    d["replicate"] = t.labels.replicate;
    return d;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
    m.doc() = "Strip-trial simulation and geographically weighted regression";
    m.attr("__version__") = kVersion;

    py::register_exception<SchemaError>(m, "SchemaError", PyExc_ValueError);
    py::register_exception<InvalidInput>(m, "InvalidInput", PyExc_ValueError);
    py::register_exception<SingularFit>(m, "SingularFit", PyExc_ArithmeticError);
    py::register_exception<FactorizationError>(m, "FactorizationError", PyExc_ArithmeticError);
    py::register_exception<SelectionError>(m, "SelectionError", PyExc_RuntimeError);

    m.def(
        "design",
        [](int rows, int ranges, const std::string& kind, std::uint64_t seed) {
            const FieldGrid grid(rows, ranges);
            Rng rng(seed);
            return allocate_treatments(grid, TreatmentLevels{}, parse_design_kind(kind), rng).rate;
        },
        py::arg("rows") = 93, py::arg("ranges") = 20, py::arg("kind") = "systematic", py::arg("seed") = 1,
        "Per-plot rates, rows within ranges.");

    m.def(
        "simulate_replicate",
        [](const std::string& config_json, int field_scenario, int replicate) {
            const ScenarioConfig config = parse_config(config_json);
            const SpatialFactorCache cache(config);
            py::list out;
            for (const auto& t : simulate_replicate(config, cache, field_scenario, replicate)) out.append(trial_dict(t));
            return out;
        },
        py::arg("config_json"), py::arg("field_scenario"), py::arg("replicate"));

    m.def(
        "gwr_fit",
        [](int rows, int ranges, const std::vector<double>& rates, const Eigen::VectorXd& y, const std::string& basis,
           double bandwidth, const std::string& formula) {
            return fit_dict(gwr_fit(FieldGrid(rows, ranges), rates, y, parse_response_kind(basis),
                                    KernelSpec{bandwidth}, GwrOptions{parse_aicc_formula(formula), 1}));
        },
        py::arg("rows"), py::arg("ranges"), py::arg("rates"), py::arg("y"), py::arg("basis") = "linear",
        py::arg("bandwidth") = 5.0, py::arg("formula") = "standard");

    m.def(
        "select_bandwidth",
        [](int rows, int ranges, const std::vector<double>& rates, const Eigen::VectorXd& y, const std::string& basis,
           double lower, double upper, double tolerance, int scan_points, const std::string& formula) {
            BandwidthSearch s{lower, upper, tolerance, scan_points};
            const auto sel = select_bandwidth_aicc(FieldGrid(rows, ranges), rates, y, parse_response_kind(basis), s,
                                                   GwrOptions{parse_aicc_formula(formula), 1});
            py::dict d;
            d["bandwidth"] = sel.bandwidth;
            d["aicc"] = sel.aicc;
            d["used_scan_fallback"] = sel.used_scan_fallback;
            d["evaluations"] = sel.evaluations;
            return d;
        },
        py::arg("rows"), py::arg("ranges"), py::arg("rates"), py::arg("y"), py::arg("basis") = "linear",
        py::arg("lower") = 1.0, py::arg("upper") = 93.0, py::arg("tolerance") = 0.01, py::arg("scan_points") = 40,
        py::arg("formula") = "standard");

    m.def(
        "coefficient_mse",
        [](const Eigen::MatrixXd& truth, const Eigen::MatrixXd& beta_hat) {
            GwrFit f;
            f.beta_hat = beta_hat;
            return coefficient_mse(CoefficientField{truth}, f);
        },
        py::arg("truth"), py::arg("beta_hat"));

    m.def("f_upper_tail", &f_upper_tail, py::arg("f"), py::arg("d1"), py::arg("d2"));

    m.def(
        "run_experiment",
        [](const std::string& config_json) {
            const ScenarioConfig config = parse_config(config_json);
            std::string csv;
            {
                py::gil_scoped_release release;
                csv = scores_csv(run_experiment(config));
            }
            return csv;
        },
        py::arg("config_json"), "Scores of every trial and policy as CSV text.");

    m.def(
        "run_pipeline",
        [](const std::string& config_json, const std::string& out) {
            ScenarioConfig config = parse_config(config_json);
            config.out_dir = out;
            py::gil_scoped_release release;
            run_pipeline(config);
        },
        py::arg("config_json"), py::arg("out"));
}
