#include "kahler/harness.hpp"

#include "kahler/error.hpp"
#include "internal.hpp"

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <regex>

namespace kahler {

using nlohmann::json;

namespace detail {

namespace {
void require(bool ok, const std::string& what) {
    if (!ok) throw ConfigError("config: " + what);
}
}  // namespace

int as_int(const json& j, const std::string& where) {
    require(j.is_number_integer() || (j.is_number() && j.get<double>() == std::floor(j.get<double>())),
            where + " must be an integer");
    return static_cast<int>(j.get<double>());
}

SolverConfig solver_from(const json& s) {
    SolverConfig c;
    const int steps = as_int(s["steps"], "solver.steps");
    require(steps >= 1 && steps <= 40, "solver.steps must lie in [1, 40]");
    c.schedule = SolverConfig::geometric_schedule(steps);
    c.newton_tolerance = s["newton_tolerance"];
    c.max_newton_iterations = as_int(s["max_newton_iterations"], "solver.max_newton_iterations");
    c.linear_tolerance = s["linear_tolerance"];
    c.max_linear_iterations = as_int(s["max_linear_iterations"], "solver.max_linear_iterations");
    c.gmres_restart = as_int(s["gmres_restart"], "solver.gmres_restart");
    c.validate();
    return c;
}

FitWindow window_from(const json& w) {
    FitWindow fw{w["inner"].get<double>(), w["outer"].get<double>(), as_int(w["skip"], "window.skip")};
    fw.validate();
    return fw;
}

}  // namespace detail

namespace {

using detail::as_int;
using detail::solver_from;
using detail::window_from;

void require(bool ok, const std::string& what) {
    if (!ok) throw ConfigError("config: " + what);
}

const char* type_name(const json& v) {
    if (v.is_null()) return "null";
    if (v.is_boolean()) return "boolean";
    if (v.is_number()) return "number";
    if (v.is_string()) return "string";
    if (v.is_array()) return "array";
    return "object";
}

// A null default accepts a number or null.
bool same_type(const json& def, const json& v) {
    if (def.is_null()) return v.is_null() || v.is_number();
    if (def.is_number()) return v.is_number();
    return std::string(type_name(def)) == type_name(v);
}

// Overlay `given` on `defaults`. Keys absent from defaults are rejected,
// keys in `required` must be present, nested objects merge recursively.
json overlay(const json& given, const json& defaults, const std::string& where,
          const std::vector<std::string>& required = {}) {
    require(given.is_object(), where + " must be an object");
    for (const auto& key : required) require(given.contains(key), where + "." + key + " is required");
    json out = defaults;
    for (const auto& [key, v] : given.items()) {
        require(defaults.contains(key), "unknown key " + where + "." + key);
        const json& def = defaults[key];
        require(same_type(def, v), where + "." + key + " must be " + (def.is_null() ? "a number" : type_name(def)));
        out[key] = def.is_object() && !def.empty() ? overlay(v, def, where + "." + key) : v;
    }
    return out;
}

void require_choice(const json& v, std::initializer_list<const char*> allowed, const std::string& where) {
    const std::string s = v.get<std::string>();
    for (const char* a : allowed)
        if (s == a) return;
    std::string msg = where + " must be one of";
    for (const char* a : allowed) msg += std::string(" ") + a;
    throw ConfigError("config: " + msg);
}

bool torus_chart(ExperimentKind k) {
    return k == ExperimentKind::solve_calabi || k == ExperimentKind::solve_perturbed;
}

json torus_defaults() { return {{"type", "torus"}, {"n", 1}, {"resolution", 0}, {"period", 1.0}}; }

json model_defaults() {
    return {{"type", "model"},
            {"n", 1},
            {"k", 0},
            {"r_min", 1e-6},
            {"r_max", 0.5},
            {"radial", 0},
            {"angular", 0},
            {"fiber_resolution", 32},
            {"fiber_kind", "patch"},
            {"fiber_extent", 1.0},
            {"fiber_weight", "none"},
            {"kappa", 1.0},
            {"phi_shift", 0.0},
            {"phi_amplitude", 0.0},
            {"fiber_scale", 1.0},
            {"reference", "euclidean"},
            {"fd_order", 8}};
}

json source_defaults() { return {{"type", "cosine"}, {"amplitude", 0.5}, {"max_mode", 2}}; }

json solver_defaults() {
    const SolverConfig d;
    return {{"steps", 8},
            {"newton_tolerance", d.newton_tolerance},
            {"max_newton_iterations", d.max_newton_iterations},
            {"linear_tolerance", d.linear_tolerance},
            {"max_linear_iterations", d.max_linear_iterations},
            {"gmres_restart", d.gmres_restart}};
}

json window_defaults() {
    const FitWindow w;
    return {{"inner", w.inner}, {"outer", w.outer}, {"skip", w.skip}};
}

json payload_defaults(ExperimentKind k) {
    switch (k) {
        case ExperimentKind::solve_calabi:
            return {{"source", source_defaults()},
                    {"initial_guess", {{"type", "zero"}, {"amplitude", 0.0}, {"max_mode", 2}}},
                    {"uniqueness", false},
                    {"second_guess", {{"type", "random-trig"}, {"amplitude", 5e-4}, {"max_mode", 2}}},
                    {"solver", solver_defaults()},
                    {"write_fields", true},
                    {"criteria",
                     {{"max_residual", 1e-8}, {"max_cohomology_defect", 1e-8}, {"max_uniqueness_defect", 1e-7}}}};
        case ExperimentKind::solve_perturbed:
            return {{"source", source_defaults()},
                    {"epsilons", {1.0, 0.1, 0.01}},
                    {"solver", solver_defaults()},
                    {"write_fields", true},
                    {"criteria", {{"bound_slack", 1e-8}}}};
        case ExperimentKind::model_metric:
            return {{"closedness_skip", 8},
                    {"write_fields", true},
                    {"criteria",
                     {{"closed_form_tolerance", 1e-8},
                      {"curvature_tolerance", 1e-6},
                      {"closedness_tolerance", 1e-8},
                      {"agreement_tolerance", 1e-6},
                      {"top_power_tolerance", 1e-6}}}};
        case ExperimentKind::barrier:
            return {{"i", 1},
                    {"j", 1},
                    {"k", 1},
                    {"amplitude", 1e-2},
                    {"theta", "constant"},
                    {"coefficients", "model"},
                    {"drop_constant", false},
                    {"window", window_defaults()},
                    {"write_fields", true},
                    {"expect", "pass"}};
        case ExperimentKind::decay:
            return {{"m", 1},
                    {"power", nullptr},
                    {"amplitude", 1.0},
                    {"angular_noise", 0.1},
                    {"write_fields", true},
                    {"expect", "pass"}};
        case ExperimentKind::curvature_profile:
            return {{"window", window_defaults()},
                    {"write_fields", true},
                    {"criteria",
                     {{"claimed_a", 0.0},
                      {"claimed_b", nullptr},
                      {"tolerance_a", 0.05},
                      {"tolerance_b", 0.1},
                      {"zero_tolerance", 1e-6}}}};
        case ExperimentKind::growth_profile:
            return {{"metric", "model"},
                    {"window", window_defaults()},
                    {"criteria",
                     {{"expect_bounded", false},
                      {"exponent", nullptr},
                      {"exponent_tolerance", 0.05},
                      {"alpha", nullptr},
                      {"alpha_tolerance", 0.1},
                      {"alpha_max", nullptr}}}};
    }
    return json::object();
}

void check_window(const json& w) { window_from(w); }

void check_source(const json& s, const std::string& where, std::initializer_list<const char*> kinds) {
    require_choice(s["type"], kinds, where + ".type");
    require(std::isfinite(s["amplitude"].get<double>()), where + ".amplitude must be finite");
    require(as_int(s["max_mode"], where + ".max_mode") >= 1, where + ".max_mode must be >= 1");
}

void resolve_payload(ExperimentConfig& c) {
    json& p = c.payload;
    const int n = as_int(c.chart["n"], "chart.n");
    switch (c.kind) {
        case ExperimentKind::solve_calabi:
            check_source(p["source"], "payload.source", {"zero", "cosine", "cos-product", "random-trig"});
            check_source(p["initial_guess"], "payload.initial_guess", {"zero", "random-trig"});
            check_source(p["second_guess"], "payload.second_guess", {"zero", "random-trig"});
            solver_from(p["solver"]);
            break;
        case ExperimentKind::solve_perturbed:
            check_source(p["source"], "payload.source", {"zero", "cosine", "cos-product", "random-trig"});
            require(!p["epsilons"].empty(), "payload.epsilons must not be empty");
            for (const auto& e : p["epsilons"])
                require(e.is_number() && e.get<double>() > 0.0, "payload.epsilons must be positive numbers");
            solver_from(p["solver"]);
            break;
        case ExperimentKind::model_metric:
            require(as_int(p["closedness_skip"], "payload.closedness_skip") >= 0, "payload.closedness_skip must be >= 0");
            break;
        case ExperimentKind::barrier: {
            const int i = as_int(p["i"], "payload.i"), j = as_int(p["j"], "payload.j");
            require(i >= 0 && j >= 0 && i + j >= 1, "payload needs i, j >= 0 and i + j >= 1");
            require(as_int(p["k"], "payload.k") >= 1, "payload.k must be >= 1");
            require(p["amplitude"].get<double>() > 0.0, "payload.amplitude must be positive");
            require_choice(p["theta"], {"constant", "linear"}, "payload.theta");
            require_choice(p["coefficients"], {"model", "as_printed"}, "payload.coefficients");
            require_choice(p["expect"], {"pass", "fail"}, "payload.expect");
            check_window(p["window"]);
            break;
        }
        case ExperimentKind::decay: {
            const int m = as_int(p["m"], "payload.m");
            require(m >= 1, "payload.m must be >= 1");
            if (p["power"].is_null()) p["power"] = m + 2;
            require(p["power"].get<double>() >= 0.0, "payload.power must be non-negative");
            require(p["amplitude"].get<double>() > 0.0, "payload.amplitude must be positive");
            const double noise = p["angular_noise"];
            require(noise >= 0.0 && noise < 1.0, "payload.angular_noise must lie in [0, 1)");
            require_choice(p["expect"], {"pass", "fail"}, "payload.expect");
            break;
        }
        case ExperimentKind::curvature_profile:
            check_window(p["window"]);
            if (p["criteria"]["claimed_b"].is_null()) p["criteria"]["claimed_b"] = -1.0 / n;
            break;
        case ExperimentKind::growth_profile: {
            require_choice(p["metric"], {"model", "euclidean"}, "payload.metric");
            check_window(p["window"]);
            const json& cr = p["criteria"];
            require(cr["expect_bounded"].get<bool>() || !cr["exponent"].is_null() || !cr["alpha"].is_null() ||
                        !cr["alpha_max"].is_null(),
                    "payload.criteria checks nothing");
            break;
        }
    }
}

}  // namespace

std::string to_string(ExperimentKind k) {
    switch (k) {
        case ExperimentKind::solve_calabi: return "solve-calabi";
        case ExperimentKind::solve_perturbed: return "solve-perturbed";
        case ExperimentKind::model_metric: return "model-metric";
        case ExperimentKind::barrier: return "barrier";
        case ExperimentKind::decay: return "decay";
        case ExperimentKind::curvature_profile: return "curvature-profile";
        case ExperimentKind::growth_profile: return "growth-profile";
    }
    return "?";
}

ExperimentKind parse_kind(const std::string& s) {
    for (auto k : {ExperimentKind::solve_calabi, ExperimentKind::solve_perturbed, ExperimentKind::model_metric,
                   ExperimentKind::barrier, ExperimentKind::decay, ExperimentKind::curvature_profile,
                   ExperimentKind::growth_profile})
        if (to_string(k) == s) return k;
    throw ConfigError("config: unknown experiment kind '" + s + "'");
}

ExperimentConfig ExperimentConfig::from_json(const json& j) {
    const json top = overlay(j,
                          {{"name", ""},
                           {"description", ""},
                           {"kind", ""},
                           {"chart", json::object()},
                           {"payload", json::object()},
                           {"output_dir", ""},
                           {"seed", 0}},
                          "config", {"name", "kind", "chart"});
    ExperimentConfig c;
    c.name = top["name"];
    c.description = top["description"];
    require(std::regex_match(c.name, std::regex("[A-Za-z0-9._-]+")) && c.name != "." && c.name != "..",
            "name must be a plain file name");
    c.kind = parse_kind(top["kind"]);
    const json& seed = top["seed"];
    require(seed.is_number_unsigned() || (seed.is_number_integer() && seed.get<long long>() >= 0),
            "seed must be a non-negative integer");
    c.seed = seed.get<std::uint64_t>();
    c.output_dir = top["output_dir"].get<std::string>().empty() ? "runs/" + c.name : top["output_dir"].get<std::string>();

    if (torus_chart(c.kind)) {
        c.chart = overlay(top["chart"], torus_defaults(), "chart", {"n", "resolution"});
        require(c.chart["type"] == "torus", to_string(c.kind) + " needs a torus chart");
        const int n = as_int(c.chart["n"], "chart.n");
        const int res = as_int(c.chart["resolution"], "chart.resolution");
        require(n >= 1 && n <= 3, "chart.n must lie in [1, 3]");
        require(res >= 4 && res % 2 == 0, "chart.resolution must be even and >= 4");
        require(c.chart["period"].get<double>() > 0.0, "chart.period must be positive");
    } else {
        c.chart = overlay(top["chart"], model_defaults(), "chart", {"n", "radial", "angular"});
        require(c.chart["type"] == "model", to_string(c.kind) + " needs a model chart");
        require_choice(c.chart["fiber_kind"], {"torus", "patch"}, "chart.fiber_kind");
        require_choice(c.chart["fiber_weight"], {"none", "flat", "spherical"}, "chart.fiber_weight");
        require_choice(c.chart["reference"], {"euclidean", "self"}, "chart.reference");
        const ModelSpec s = c.model_spec();
        s.validate();
        if (s.k == 0) c.chart["k"] = s.n;
    }
    c.payload = overlay(top["payload"], payload_defaults(c.kind), "payload");
    resolve_payload(c);
    return c;
}

ModelSpec ExperimentConfig::model_spec() const {
    require(chart.value("type", "") == "model", "not a model chart");
    ModelSpec s;
    s.n = as_int(chart["n"], "chart.n");
    s.k = as_int(chart["k"], "chart.k");
    s.r_min = chart["r_min"];
    s.r_max = chart["r_max"];
    s.radial = as_int(chart["radial"], "chart.radial");
    s.angular = as_int(chart["angular"], "chart.angular");
    s.fiber_resolution = as_int(chart["fiber_resolution"], "chart.fiber_resolution");
    s.fiber_kind = chart["fiber_kind"] == "torus" ? FiberKind::torus : FiberKind::patch;
    s.fiber_extent = chart["fiber_extent"];
    const std::string w = chart["fiber_weight"];
    s.fiber_weight = w == "flat" ? FiberWeight::flat : w == "spherical" ? FiberWeight::spherical : FiberWeight::none;
    s.kappa = chart["kappa"];
    s.phi_shift = chart["phi_shift"];
    s.phi_amplitude = chart["phi_amplitude"];
    s.fiber_scale = chart["fiber_scale"];
    s.reference = chart["reference"] == "self" ? Reference::self : Reference::euclidean;
    s.fd_order = as_int(chart["fd_order"], "chart.fd_order");
    require(s.fd_order >= 2 && s.fd_order <= 8 && s.fd_order % 2 == 0, "chart.fd_order must be 2, 4, 6 or 8");
    return s;
}

json ExperimentConfig::to_json() const {
    return {{"name", name},       {"description", description}, {"kind", kahler::to_string(kind)},
            {"chart", chart},     {"payload", payload},         {"output_dir", output_dir},
            {"seed", seed}};
}

ExperimentConfig load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("config: cannot open " + path);
    json j;
    try {
        j = json::parse(in);
    } catch (const json::parse_error& e) {
        throw ConfigError("config: " + path + ": " + e.what());
    }
    if (j.is_object() && j.contains("config") && j.contains("artifacts")) j = j["config"];
    if (j.is_object() && !j.contains("name")) j["name"] = std::filesystem::path(path).stem().string();
    return ExperimentConfig::from_json(j);
}

std::string resolve_output_dir(const ExperimentConfig& c) {
    const char* root = std::getenv(kOutputRootVar);
    if (root && *root) return (std::filesystem::path(root) / c.name).string();
    return c.output_dir;
}

}  // namespace kahler
