#include "ofesim/config.hpp"

#include <cstdio>
#include <fstream>
#include <set>

#include "ofesim/errors.hpp"

namespace ofesim {

using nlohmann::json;

namespace {

void reject_unknown(const json& j, const std::set<std::string>& allowed, const std::string& where) {
    for (const auto& [key, value] : j.items()) {
        if (!allowed.count(key)) throw SchemaError("unknown key '" + key + "' in " + where);
    }
}

std::vector<double> doubles(const json& j, const char* key) {
    if (!j.is_array()) throw SchemaError(std::string("'") + key + "' must be an array of numbers");
    std::vector<double> out;
    for (const auto& v : j) {
        if (!v.is_number()) throw SchemaError(std::string("'") + key + "' must be an array of numbers");
        out.push_back(v.get<double>());
    }
    return out;
}

SpatialCovSpec spatial_from_json(const json& j) {
    if (!j.is_object() || !j.contains("kind")) throw SchemaError("spatial entries need a 'kind'");
    reject_unknown(j, {"kind", "rho_col", "rho_row", "sigma2", "range", "nu"}, "spatial entry");
    SpatialCovSpec s;
    s.kind = parse_spatial_kind(j.at("kind").get<std::string>());
    s.rho_col = j.value("rho_col", s.rho_col);
    s.rho_row = j.value("rho_row", s.rho_row);
    s.sigma2 = j.value("sigma2", s.sigma2);
    s.range_scale = j.value("range", s.range_scale);
    s.nu = j.value("nu", s.nu);
    return s;
}

json spatial_to_json(const SpatialCovSpec& s) {
    json j{{"kind", std::string(to_string(s.kind))}};
    if (s.kind == SpatialKind::Ar1Ar1) {
        j["rho_col"] = s.rho_col;
        j["rho_row"] = s.rho_row;
    } else if (s.kind == SpatialKind::Matern) {
        j["sigma2"] = s.sigma2;
        j["range"] = s.range_scale;
        j["nu"] = s.nu;
    }
    return j;
}

}  // namespace

ScenarioConfig config_from_json(const json& j) {
    if (!j.is_object()) throw SchemaError("configuration must be a JSON object");
    reject_unknown(j,
                   {"grid", "levels", "designs", "responses", "spatial", "eta", "sigma_u", "sigma_e", "b_linear",
                    "b_quadratic", "bandwidths", "aicc_search", "aicc_formula", "replicates", "seed", "threads",
                    "emit_trials", "out"},
                   "configuration");
    ScenarioConfig c;
    try {
        if (j.contains("grid")) {
            const auto& g = j.at("grid");
            reject_unknown(g, {"rows", "ranges"}, "grid");
            c.n_rows = g.value("rows", c.n_rows);
            c.n_ranges = g.value("ranges", c.n_ranges);
        }
        if (j.contains("levels")) c.levels.rates = doubles(j.at("levels"), "levels");
        if (j.contains("designs")) {
            c.designs.clear();
            for (const auto& d : j.at("designs")) c.designs.push_back(parse_design_kind(d.get<std::string>()));
        }
        if (j.contains("responses")) {
            c.responses.clear();
            for (const auto& r : j.at("responses")) c.responses.push_back(parse_response_kind(r.get<std::string>()));
        }
        if (j.contains("spatial")) {
            c.spatial.clear();
            for (const auto& s : j.at("spatial")) c.spatial.push_back(spatial_from_json(s));
        }
        if (j.contains("eta")) c.etas = doubles(j.at("eta"), "eta");
        if (j.contains("sigma_u")) c.sigma_u = doubles(j.at("sigma_u"), "sigma_u");
        if (j.contains("sigma_e")) c.sigma_e = j.at("sigma_e").get<double>();
        if (j.contains("b_linear")) c.b_linear = doubles(j.at("b_linear"), "b_linear");
        if (j.contains("b_quadratic")) c.b_quadratic = doubles(j.at("b_quadratic"), "b_quadratic");
        if (j.contains("bandwidths")) {
            c.policies.clear();
            for (const auto& b : j.at("bandwidths")) {
                c.policies.push_back(b.is_number() ? BandwidthPolicy::fixed(b.get<double>())
                                                   : BandwidthPolicy::parse(b.get<std::string>()));
            }
        }
        if (j.contains("aicc_search")) {
            const auto& s = j.at("aicc_search");
            reject_unknown(s, {"lower", "upper", "tolerance", "scan_points"}, "aicc_search");
            c.search.lower = s.value("lower", c.search.lower);
            c.search.upper = s.value("upper", c.search.upper);
            c.search.tolerance = s.value("tolerance", c.search.tolerance);
            c.search.scan_points = s.value("scan_points", c.search.scan_points);
        }
        if (j.contains("aicc_formula")) c.formula = parse_aicc_formula(j.at("aicc_formula").get<std::string>());
        if (j.contains("replicates")) c.replicates = j.at("replicates").get<int>();
        if (j.contains("seed")) c.seed = j.at("seed").get<std::uint64_t>();
        if (j.contains("threads")) c.threads = j.at("threads").get<int>();
        if (j.contains("emit_trials")) c.emit_trials = j.at("emit_trials").get<bool>();
        if (j.contains("out")) c.out_dir = j.at("out").get<std::string>();
    } catch (const json::exception& e) {
        throw SchemaError(std::string("malformed configuration: ") + e.what());
    }
    c.validate();
    return c;
}

json config_to_json(const ScenarioConfig& c) {
    json j;
    j["grid"] = {{"rows", c.n_rows}, {"ranges", c.n_ranges}};
    j["levels"] = c.levels.rates;
    j["designs"] = json::array();
    for (auto d : c.designs) j["designs"].push_back(std::string(to_string(d)));
    j["responses"] = json::array();
    for (auto r : c.responses) j["responses"].push_back(std::string(to_string(r)));
    j["spatial"] = json::array();
    for (const auto& s : c.spatial) j["spatial"].push_back(spatial_to_json(s));
    j["eta"] = c.etas;
    j["sigma_u"] = c.sigma_u;
    j["sigma_e"] = c.sigma_e;
    j["b_linear"] = c.b_linear;
    j["b_quadratic"] = c.b_quadratic;
    j["bandwidths"] = json::array();
    for (const auto& p : c.policies) {
        if (p.kind == BandwidthPolicy::Kind::Fixed) {
            j["bandwidths"].push_back(p.value);
        } else {
            j["bandwidths"].push_back("aicc");
        }
    }
    j["aicc_search"] = {{"lower", c.search.lower},
                        {"upper", c.search.upper},
                        {"tolerance", c.search.tolerance},
                        {"scan_points", c.search.scan_points}};
    j["aicc_formula"] = std::string(to_string(c.formula));
    j["replicates"] = c.replicates;
    j["seed"] = c.seed;
    j["threads"] = c.threads;
    j["emit_trials"] = c.emit_trials;
    j["out"] = c.out_dir;
    return j;
}

ScenarioConfig load_config(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw InvalidInput("cannot open configuration file " + path.string());
    json j;
    try {
        in >> j;
    } catch (const json::exception& e) {
        throw SchemaError("configuration " + path.string() + " is not valid JSON: " + e.what());
    }
    return config_from_json(j);
}

std::string config_hash(const ScenarioConfig& config) {
    // threads and output location do not change any numeric result
    json j = config_to_json(config);
    j.erase("threads");
    j.erase("out");
    j.erase("emit_trials");
    const std::string text = j.dump();
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char ch : text) {
        h ^= ch;
        h *= 0x100000001b3ULL;
    }
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

}  // namespace ofesim
