#include "kahler/harness.hpp"

#include "kahler/barrier.hpp"
#include "kahler/error.hpp"
#include "kahler/serialize.hpp"
#include "kahler/solver.hpp"
#include "kahler/tensor.hpp"
#include "internal.hpp"

#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <limits>
#include <random>
#include <sstream>

namespace kahler {

using nlohmann::json;
namespace fs = std::filesystem;

namespace {

constexpr double kPi = 3.14159265358979323846;

// ------------------------------------------------------------------ inputs

// Uniform on [-1, 1] straight from the engine bits, so the stream does not
// depend on the standard library's distribution code.
double unit(std::mt19937_64& g) { return static_cast<double>(g() >> 11) * 0x1p-53 * 2.0 - 1.0; }

std::mt19937_64 engine(std::uint64_t seed, std::uint64_t salt) {
    std::seed_seq s{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(salt)};
    return std::mt19937_64(s);
}

// Sum over axes of random cosine/sine modes 1..max_mode, scaled so that the
// sup never exceeds amplitude.
ScalarField seeded_trig(const ChartPtr& c, double amplitude, int max_mode, std::mt19937_64 g) {
    const int axes = c->axis_count();
    std::vector<double> a(axes * max_mode), b(axes * max_mode);
    double total = 0.0;
    for (std::size_t q = 0; q < a.size(); ++q) {
        a[q] = unit(g) / (1 + q % max_mode);
        b[q] = unit(g) / (1 + q % max_mode);
        total += std::abs(a[q]) + std::abs(b[q]);
    }
    return ScalarField::sample(c, [&](std::size_t i) {
        double s = 0.0;
        for (int ax = 0; ax < axes; ++ax) {
            const Axis& A = c->axis(ax);
            const double x = 2 * kPi * (c->coordinate(i, ax) - A.lo) / (A.hi - A.lo);
            for (int m = 1; m <= max_mode; ++m)
                s += a[ax * max_mode + m - 1] * std::cos(m * x) + b[ax * max_mode + m - 1] * std::sin(m * x);
        }
        return amplitude * s / total;
    });
}

ScalarField torus_field(const ChartPtr& c, const json& src, std::uint64_t seed, std::uint64_t salt) {
    const std::string type = src["type"];
    const double amp = src["amplitude"];
    const double period = c->axis(0).hi - c->axis(0).lo;
    if (type == "zero") return ScalarField::constant(c, 0.0);
    if (type == "cosine")
        return ScalarField::sample(c, [&](std::size_t i) { return amp * std::cos(2 * kPi * c->coordinate(i, 0) / period); });
    if (type == "cos-product")
        return ScalarField::sample(c, [&](std::size_t i) {
            double v = amp;
            for (int z = 0; z < c->n(); ++z) v *= std::cos(2 * kPi * c->coordinate(i, 2 * z) / period);
            return v;
        });
    return seeded_trig(c, amp, detail::as_int(src["max_mode"], "max_mode"), engine(seed, salt));
}

ChartPtr torus_chart(const ExperimentConfig& cfg) {
    return share(GridChart::torus(cfg.chart["n"].get<int>(), cfg.chart["resolution"].get<int>(),
                                  cfg.chart["period"].get<double>()));
}

// ------------------------------------------------------------------ outputs

struct Outcome {
    bool pass = false;
    json result = json::object();
    json summary = json::object();  // flat name -> number, printed to stdout
    json params = json::object();
    std::string headline;
    double headline_value = 0.0;
    json timing = json::object();
};

class Artifacts {
public:
    explicit Artifacts(fs::path dir) : dir_(std::move(dir)) {}
    void text(const std::string& name, const std::string& content) {
        std::ofstream out(dir_ / name, std::ios::binary);
        out << content;
        if (!out) throw KahlerError("cannot write " + (dir_ / name).string());
        names_.push_back(name);
    }
    template <class F>
    void field(const std::string& name, const F& f) {
        write_field((dir_ / name).string(), f);
        names_.push_back(name);
    }
    json list() const {
        std::vector<std::string> s = names_;
        std::sort(s.begin(), s.end());
        return s;
    }

private:
    fs::path dir_;
    std::vector<std::string> names_;
};

std::string csv(const std::string& header, const std::vector<std::vector<double>>& cols) {
    std::ostringstream out;
    out.precision(17);
    out << header << '\n';
    const std::size_t rows = cols.empty() ? 0 : cols[0].size();
    for (std::size_t r = 0; r < rows; ++r) {
        for (std::size_t c = 0; c < cols.size(); ++c) out << (c ? "," : "") << cols[c][r];
        out << '\n';
    }
    return out.str();
}

json fit_json(const DecayFit& f) {
    return {{"a", f.a},         {"b", f.b},         {"constant", f.constant}, {"residual", f.residual},
            {"row_lo", f.row_lo}, {"row_hi", f.row_hi}, {"r_lo", f.r_lo},         {"r_hi", f.r_hi},
            {"excluded_rows", f.excluded_rows}, {"identically_zero", f.identically_zero}, {"resolved", f.resolved}};
}

// Angular max of |field| per radial row.
std::vector<double> row_max(const ScalarField& f) {
    const GridChart& c = f.chart();
    std::vector<double> out(c.radial_count(), 0.0);
    for (std::size_t i = 0; i < f.size(); ++i) {
        const int r = c.index(i, 0);
        out[r] = std::max(out[r], std::abs(f.value(i)));
    }
    return out;
}

std::vector<double> radii(const GridChart& c) {
    std::vector<double> r;
    for (int i = 0; i < c.radial_count(); ++i) r.push_back(c.radius_at(i));
    return r;
}

SolverConfig solver(const ExperimentConfig& cfg) { return detail::solver_from(cfg.payload["solver"]); }

json model_params(const ExperimentConfig& cfg) {
    const json& c = cfg.chart;
    json p = {{"n", c["n"]}, {"radial", c["radial"]}, {"angular", c["angular"]}};
    if (c["n"].get<int>() > 1) {
        p["k"] = c["k"];
        p["fiber_resolution"] = c["fiber_resolution"];
        p["fiber_weight"] = c["fiber_weight"];
    }
    return p;
}

// ------------------------------------------------------------------ kinds

Outcome run_solve_calabi(const ExperimentConfig& cfg, Artifacts& art) {
    const json& p = cfg.payload;
    const json& cr = p["criteria"];
    auto c = torus_chart(cfg);
    auto omega = MetricField::flat(c);
    const ScalarField f = torus_field(c, p["source"], cfg.seed, 1);
    const auto problem = CalabiProblem::normalized(omega, f);
    const SolverConfig sc = solver(cfg);
    std::optional<ScalarField> guess;
    if (p["initial_guess"]["type"] != "zero") guess = torus_field(c, p["initial_guess"], cfg.seed, 2);
    const SolveReport r = solve_calabi(problem, sc, guess);

    Outcome o;
    o.result = to_json(r);
    o.timing["solve_seconds"] = r.seconds;
    o.pass = r.status == SolveStatus::success && r.final_residual < cr["max_residual"].get<double>() &&
             r.cohomology_defect < cr["max_cohomology_defect"].get<double>();
    o.summary = {{"final_residual", r.final_residual}, {"cohomology_defect", r.cohomology_defect}, {"c", r.c},
                 {"margin", r.margin}};
    o.params = {{"n", cfg.chart["n"]}, {"resolution", cfg.chart["resolution"]}, {"source", p["source"]["type"]}};
    o.headline = "final_residual";
    o.headline_value = r.final_residual;

    if (p["uniqueness"].get<bool>()) {
        const ScalarField g2 = torus_field(c, p["second_guess"], cfg.seed, 3);
        const SolveReport r2 = solve_calabi(problem, sc, g2);
        const auto u = uniqueness_defect(r.u, r2.u, problem, sc.newton_tolerance);
        o.result["uniqueness"] = {{"defect", u.defect},
                                  {"energy_identity", u.energy_identity},
                                  {"gradient_energy", u.gradient_energy},
                                  {"second", to_json(r2)}};
        o.timing["second_solve_seconds"] = r2.seconds;
        o.pass = o.pass && r2.status == SolveStatus::success && u.defect < cr["max_uniqueness_defect"].get<double>();
        o.summary["uniqueness_defect"] = u.defect;
        o.headline = "uniqueness_defect";
        o.headline_value = u.defect;
        if (p["write_fields"].get<bool>()) art.field("u_second.field", r2.u);
    }
    art.text("residuals.csv", residual_csv(r));
    if (p["write_fields"].get<bool>()) {
        art.field("u.field", r.u);
        art.field("f.field", f);
    }
    return o;
}

Outcome run_solve_perturbed(const ExperimentConfig& cfg, Artifacts& art) {
    const json& p = cfg.payload;
    const double slack = p["criteria"]["bound_slack"];
    auto c = torus_chart(cfg);
    auto omega = MetricField::flat(c);
    const ScalarField f = torus_field(c, p["source"], cfg.seed, 1);
    const auto [fn, cn] = normalize_source(f, omega);
    const SolverConfig sc = solver(cfg);
    const SolveReport r0 = solve_calabi(CalabiProblem::normalized(omega, f), sc);

    Outcome o;
    o.pass = r0.status == SolveStatus::success;
    json runs = json::array();
    std::vector<double> eps_col, sup_col, bound_col, dist_col;
    double worst_excess = -std::numeric_limits<double>::infinity();
    double last = std::numeric_limits<double>::infinity();
    bool monotone = true;
    int idx = 0;
    for (const auto& e : p["epsilons"]) {
        const double eps = e;
        const SolveReport r = solve_perturbed(omega, fn, eps, sc);
        const double bound = -fn.min() / eps;
        const double m = gauge_mean(r.u, omega);
        const double dist = (r.u + (-m) - r0.u).sup_abs();
        const bool holds = r.u.max() <= bound + slack;
        if (!(dist < last)) monotone = false;
        last = dist;
        worst_excess = std::max(worst_excess, r.u.max() - bound);
        o.pass = o.pass && r.status == SolveStatus::success && holds;
        runs.push_back({{"epsilon", eps},
                        {"sup_u", r.u.max()},
                        {"bound", bound},
                        {"bound_holds", holds},
                        {"distance_to_unperturbed", dist},
                        {"report", to_json(r)}});
        o.timing["solve_seconds_" + std::to_string(idx)] = r.seconds;
        eps_col.push_back(eps);
        sup_col.push_back(r.u.max());
        bound_col.push_back(bound);
        dist_col.push_back(dist);
        if (p["write_fields"].get<bool>()) art.field("u_eps" + std::to_string(idx) + ".field", r.u);
        ++idx;
    }
    o.pass = o.pass && monotone;
    o.result = {{"unperturbed", to_json(r0)}, {"c", cn}, {"runs", runs}, {"monotone", monotone},
                {"max_bound_excess", worst_excess}};
    o.summary = {{"max_bound_excess", worst_excess}, {"monotone", monotone ? 1 : 0},
                 {"final_distance", dist_col.back()}};
    o.params = {{"n", cfg.chart["n"]}, {"resolution", cfg.chart["resolution"]}, {"epsilons", eps_col.size()}};
    o.headline = "max_bound_excess";
    o.headline_value = worst_excess;
    art.text("perturbed.csv", csv("epsilon,sup_u,bound,distance", {eps_col, sup_col, bound_col, dist_col}));
    if (p["write_fields"].get<bool>()) art.field("u0.field", r0.u);
    return o;
}

Outcome run_model_metric(const ExperimentConfig& cfg, Artifacts& art) {
    const json& p = cfg.payload;
    const json& cr = p["criteria"];
    const DivisorModel m = make_model(cfg.model_spec());
    const double inf = std::numeric_limits<double>::infinity();
    Outcome o;
    o.params = model_params(cfg);
    o.result["k_outside_stated_range"] = m.k_outside_stated_range();
    const bool write = p["write_fields"].get<bool>();

    if (m.n == 1) {
        const MetricField g = omega_phi(m);
        double err = 0.0;
        for (std::size_t i = 0; i < g.form().size(); ++i) {
            const double r = m.chart->radius(i);
            err = std::max(err, std::abs(g.form().diag(0)[i] * r * r - 1.0));
        }
        const double curv = curvature_norm(g).sup_abs();
        const bool closed_form = cfg.chart["phi_amplitude"].get<double>() == 0.0;
        o.result["closed_form_checked"] = closed_form;
        o.result["closed_form_error"] = err;
        o.result["curvature_sup"] = curv;
        o.pass = (!closed_form || err < cr["closed_form_tolerance"].get<double>()) &&
                 curv < cr["curvature_tolerance"].get<double>();
        o.summary = {{"closed_form_error", err}, {"curvature_sup", curv}};
        o.headline = "closed_form_error";
        o.headline_value = err;
        std::vector<double> coeff;
        for (int r = 0; r < m.chart->radial_count(); ++r) {
            const double rad = m.chart->radius_at(r);
            coeff.push_back(g.form().diag(0)[r * m.chart->row_size()] * rad * rad);
        }
        art.text("profile.csv", csv("radius,h_r2", {radii(*m.chart), coeff}));
        if (write) art.field("omega_phi.field", g.form());
    } else if (m.ample()) {
        const MetricField g = omega_phi(m);
        const SemiAmpleForm sa = omega_phi_semiample(m, inf);
        const double reduction = Form11Field::max_difference(sa.form, g.form());
        const double eta = Form11Field::max_difference(eta_phi(m).form(), g.form());
        const double closed = closedness_defect(g.form(), p["closedness_skip"].get<int>());
        o.result["reduction_defect"] = reduction;
        o.result["eta_defect"] = eta;
        o.result["closedness_defect"] = closed;
        o.result["agreement"] = sa.agreement;
        o.result["rank"] = sa.rank;
        o.result["margin"] = g.margin();
        o.pass = reduction == 0.0 && eta == 0.0 && sa.rank == m.n && g.margin() > 0.0 &&
                 closed < cr["closedness_tolerance"].get<double>();
        o.summary = {{"reduction_defect", reduction}, {"eta_defect", eta}, {"closedness_defect", closed},
                     {"rank", sa.rank}};
        o.headline = "reduction_defect";
        o.headline_value = reduction;
        if (write) art.field("omega_phi.field", g.form());
    } else {
        const SemiAmpleForm sa = omega_phi_semiample(m, inf);
        const TopPowerCheck tp = eta_top_power_check(m);
        o.result["agreement"] = sa.agreement;
        o.result["rank"] = sa.rank;
        o.result["small_eigenvalue"] = sa.small_eigenvalue;
        o.result["top_power_defect"] = tp.max_relative_defect;
        o.result["top_power_nodes"] = tp.nodes_checked;
        o.pass = sa.agreement < cr["agreement_tolerance"].get<double>() && sa.rank == m.k &&
                 tp.nodes_checked > 0 && tp.max_relative_defect < cr["top_power_tolerance"].get<double>();
        o.summary = {{"agreement", sa.agreement}, {"rank", sa.rank}, {"top_power_defect", tp.max_relative_defect}};
        o.headline = "agreement";
        o.headline_value = sa.agreement;
        if (write) art.field("omega_phi.field", sa.form);
    }
    return o;
}

Outcome run_barrier(const ExperimentConfig& cfg, Artifacts& art) {
    const json& p = cfg.payload;
    BarrierSpec s;
    s.model = make_model(cfg.model_spec());
    s.amplitude = p["amplitude"];
    s.i = p["i"];
    s.j = p["j"];
    s.k = p["k"];
    s.theta = p["theta"] == "linear" ? theta_linear(s.model.chart) : theta_constant(s.model.chart);
    s.coefficients = p["coefficients"] == "as_printed" ? BarrierCoefficients::as_printed : BarrierCoefficients::model;
    s.drop_constant = p["drop_constant"];
    s.window = detail::window_from(p["window"]);
    const BarrierReport r = verify_barrier(s);

    Outcome o;
    const bool expect_pass = p["expect"] == "pass";
    o.result = to_json(r);
    o.result["expect"] = p["expect"];
    o.pass = expect_pass ? r.status == BarrierStatus::pass : r.status == BarrierStatus::fail;
    o.summary = {{"order", r.order}, {"expected_order", r.expected_order}, {"amplitude", r.amplitude},
                 {"crossover_radius", r.crossover_radius}};
    o.params = model_params(cfg);
    o.params["i"] = s.i;
    o.params["j"] = s.j;
    o.params["barrier_k"] = s.k;
    o.params["coefficients"] = p["coefficients"];
    if (s.drop_constant) o.params["drop_constant"] = true;
    if (!expect_pass) o.params["expect"] = "fail";
    o.headline = "order";
    o.headline_value = r.order;
    art.text("residual.csv", residual_csv(r));
    if (p["write_fields"].get<bool>()) {
        s.amplitude = r.amplitude;
        art.field("potential.field", barrier_potential(s));
    }
    return o;
}

Outcome run_decay(const ExperimentConfig& cfg, Artifacts& art) {
    const json& p = cfg.payload;
    const DivisorModel m = make_model(cfg.model_spec());
    const int order = p["m"];
    const double power = p["power"], amp = p["amplitude"], noise = p["angular_noise"];
    const ScalarField s = m.section_norm();
    const ScalarField g = seeded_trig(m.chart, 1.0, 3, engine(cfg.seed, 4));
    // only the angular part of g: sample it on the first row
    const std::size_t row = m.chart->row_size();
    const ScalarField u = ScalarField::sample(m.chart, [&](std::size_t i) {
        return amp * std::pow(s[i], power) * (1.0 + noise * g[i % row]);
    });
    const DecayBound d = decay_bound_check(u, order, m);

    Outcome o;
    const bool expect_pass = p["expect"] == "pass";
    o.pass = d.pass == expect_pass;
    o.result = {{"constant", d.constant}, {"shells", d.shells}, {"check_pass", d.pass}, {"expect", p["expect"]}};
    o.summary = {{"constant", d.constant}, {"check_pass", d.pass ? 1 : 0}};
    o.params = model_params(cfg);
    o.params["m"] = order;
    o.params["power"] = power;
    if (!expect_pass) o.params["expect"] = "fail";
    o.headline = "constant";
    o.headline_value = d.constant;
    std::vector<double> idx;
    for (std::size_t i = 0; i < d.shells.size(); ++i) idx.push_back(static_cast<double>(i));
    art.text("shells.csv", csv("shell,max_ratio", {idx, d.shells}));
    if (p["write_fields"].get<bool>()) {
        art.field("u.field", u);
        art.field("ratio.field", d.ratio);
    }
    return o;
}

MetricField model_metric(const DivisorModel& m) { return m.ample() ? omega_phi(m) : eta_phi(m); }

Outcome run_curvature_profile(const ExperimentConfig& cfg, Artifacts& art) {
    const json& p = cfg.payload;
    const json& cr = p["criteria"];
    const DivisorModel m = make_model(cfg.model_spec());
    const ScalarField R = curvature_norm(model_metric(m));
    const double sup = R.sup_abs();
    const bool zero = sup < cr["zero_tolerance"].get<double>();

    Outcome o;
    o.params = model_params(cfg);
    o.result["curvature_sup"] = sup;
    o.result["identically_zero"] = zero;
    if (m.n == 1) {
        o.pass = zero;
        o.summary = {{"curvature_sup", sup}};
        o.headline = "curvature_sup";
        o.headline_value = sup;
    } else {
        const DecayFit fit = decay_fit(R, m, detail::window_from(p["window"]));
        const double da = std::abs(fit.a - cr["claimed_a"].get<double>());
        const double db = std::abs(fit.b - cr["claimed_b"].get<double>());
        o.result["fit"] = fit_json(fit);
        o.result["delta_a"] = da;
        o.result["delta_b"] = db;
        o.pass = !zero && fit.resolved && da <= cr["tolerance_a"].get<double>() && db <= cr["tolerance_b"].get<double>();
        o.summary = {{"a", fit.a}, {"b", fit.b}, {"claimed_b", cr["claimed_b"]}, {"delta_b", db}, {"fit_residual", fit.residual}};
        o.params["claimed_b"] = cr["claimed_b"];
        o.params["fitted_b"] = fit.b;
        o.params["delta_b"] = db;
        o.headline = "b";
        o.headline_value = fit.b;
    }
    art.text("curvature.csv", csv("radius,max_norm", {radii(*m.chart), row_max(R)}));
    if (p["write_fields"].get<bool>()) art.field("curvature_norm.field", R);
    return o;
}

Outcome run_growth_profile(const ExperimentConfig& cfg, Artifacts& art) {
    const json& p = cfg.payload;
    const json& cr = p["criteria"];
    const DivisorModel m = make_model(cfg.model_spec());
    const MetricField g = p["metric"] == "euclidean" ? MetricField::flat(m.chart) : model_metric(m);
    const FitWindow w = detail::window_from(p["window"]);
    const RadialProfile cp = completeness_profile(g, m, w);
    const VolumeProfile vp = volume_growth_profile(g, m, w);

    Outcome o;
    o.params = model_params(cfg);
    o.params["metric"] = p["metric"];
    o.result["completeness"] = {{"exponent", cp.exponent}, {"coefficient", cp.coefficient}, {"offset", cp.offset},
                                {"residual", cp.residual},  {"bounded", cp.bounded},         {"length_at_inner", cp.length.front()}};
    o.result["volume"] = {{"alpha", vp.alpha}, {"residual", vp.residual}, {"bounded", vp.bounded}};
    o.pass = cp.bounded == cr["expect_bounded"].get<bool>();
    if (!cr["exponent"].is_null())
        o.pass = o.pass && std::abs(cp.exponent - cr["exponent"].get<double>()) <= cr["exponent_tolerance"].get<double>();
    if (!cr["alpha"].is_null())
        o.pass = o.pass && std::abs(vp.alpha - cr["alpha"].get<double>()) <= cr["alpha_tolerance"].get<double>();
    if (!cr["alpha_max"].is_null()) o.pass = o.pass && vp.alpha <= cr["alpha_max"].get<double>();
    o.summary = {{"exponent", cp.exponent}, {"alpha", vp.alpha}, {"bounded", cp.bounded ? 1 : 0},
                 {"length_at_inner", cp.length.front()}};
    if (!cr["exponent"].is_null()) {
        o.headline = "exponent";
        o.headline_value = cp.exponent;
    } else if (!cr["alpha"].is_null() || !cr["alpha_max"].is_null()) {
        o.headline = "alpha";
        o.headline_value = vp.alpha;
    } else {
        o.headline = "length_at_inner";
        o.headline_value = cp.length.front();
    }
    art.text("length.csv", csv("r,length", {cp.r, cp.length}));
    art.text("volume.csv", csv("metric_radius,volume", {vp.radius, vp.volume}));
    return o;
}

Outcome dispatch(const ExperimentConfig& cfg, Artifacts& art) {
    switch (cfg.kind) {
        case ExperimentKind::solve_calabi: return run_solve_calabi(cfg, art);
        case ExperimentKind::solve_perturbed: return run_solve_perturbed(cfg, art);
        case ExperimentKind::model_metric: return run_model_metric(cfg, art);
        case ExperimentKind::barrier: return run_barrier(cfg, art);
        case ExperimentKind::decay: return run_decay(cfg, art);
        case ExperimentKind::curvature_profile: return run_curvature_profile(cfg, art);
        case ExperimentKind::growth_profile: return run_growth_profile(cfg, art);
    }
    throw ConfigError("unknown experiment kind");
}

json sanitize(const json& j) {
    if (j.is_number_float()) {
        const double v = j.get<double>();
        if (std::isnan(v)) return "nan";
        if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
        return j;
    }
    if (j.is_object()) {
        json out = json::object();
        for (const auto& [k, v] : j.items()) out[k] = sanitize(v);
        return out;
    }
    if (j.is_array()) {
        json out = json::array();
        for (const auto& v : j) out.push_back(sanitize(v));
        return out;
    }
    return j;
}

void print_summary(const std::string& name, const json& summary, bool pass, const std::string& dir, std::ostream& out) {
    std::size_t w = 6;
    for (const auto& [k, v] : summary.items()) w = std::max(w, k.size());
    out << name << '\n';
    for (const auto& [k, v] : summary.items()) {
        out << "  " << std::left << std::setw(static_cast<int>(w)) << k << "  ";
        if (v.is_number_float()) out << std::setprecision(6) << v.get<double>();
        else out << v.dump();
        out << '\n';
    }
    out << "  " << std::left << std::setw(static_cast<int>(w)) << "status" << "  " << (pass ? "PASS" : "FAIL") << '\n';
    out << "  " << std::left << std::setw(static_cast<int>(w)) << "output" << "  " << dir << '\n';
}

}  // namespace

std::string dump_report(const json& j) { return sanitize(j).dump(2) + "\n"; }

RunResult run_in(const ExperimentConfig& config, const std::string& directory, std::ostream& out) {
    RunResult res;
    res.directory = directory;
    const fs::path dir(res.directory);
    const fs::path scratch = dir.string() + ".partial";
    const auto t0 = std::chrono::steady_clock::now();
    try {
        fs::remove_all(scratch);
        fs::create_directories(scratch);
        Artifacts art(scratch);
        Outcome o = dispatch(config, art);
        const double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();

        json report = {{"name", config.name},
                       {"experiment", to_string(config.kind)},
                       {"pass", o.pass},
                       {"headline", {{"name", o.headline}, {"value", o.headline_value}}},
                       {"params", o.params},
                       {"summary", o.summary},
                       {"result", o.result}};
        art.text("report.json", dump_report(report));
        json timing = o.timing;
        timing["seconds"] = seconds;
        art.text("timing.json", dump_report(timing));
        json artifacts = art.list();
        artifacts.push_back("manifest.json");
        const json manifest = {{"config", config.to_json()}, {"artifacts", artifacts}};
        std::ofstream(scratch / "manifest.json", std::ios::binary) << dump_report(manifest);

        fs::remove_all(dir);
        if (dir.has_parent_path()) fs::create_directories(dir.parent_path());
        fs::rename(scratch, dir);
        res.pass = o.pass;
        res.exit_status = o.pass ? 0 : 1;
        res.report = std::move(report);
        print_summary(config.name, o.summary, o.pass, res.directory, out);
    } catch (const std::exception& e) {
        std::error_code ec;
        fs::remove_all(scratch, ec);
        res.exit_status = 2;
        res.error = e.what();
        out << config.name << ": error: " << e.what() << '\n';
    }
    return res;
}

RunResult run(const ExperimentConfig& config, std::ostream& out) {
    return run_in(config, resolve_output_dir(config), out);
}

SuiteResult run_suite(const std::string& config_dir, const std::string& output_root, std::ostream& out) {
    std::vector<fs::path> files;
    for (const auto& e : fs::directory_iterator(config_dir))
        if (e.is_regular_file() && e.path().extension() == ".json") files.push_back(e.path());
    std::sort(files.begin(), files.end());
    if (files.empty()) throw ConfigError("suite: no *.json configs in " + config_dir);

    SuiteResult s;
    std::vector<std::string> dirs;
    for (const auto& f : files) {
        RunResult r;
        try {
            const ExperimentConfig c = load_config(f.string());
            r = run_in(c, (fs::path(output_root) / c.name).string(), out);
        } catch (const std::exception& e) {
            r.exit_status = 2;
            r.error = e.what();
            r.directory = (fs::path(output_root) / f.stem()).string();
            out << f.filename().string() << ": error: " << e.what() << '\n';
        }
        dirs.push_back(r.directory);
        s.exit_status = std::max(s.exit_status, r.exit_status);
        s.runs.push_back(std::move(r));
    }
    s.rows = report_table(dirs);
    fs::create_directories(output_root);
    std::ofstream(fs::path(output_root) / "report.csv", std::ios::binary) << report_csv(s.rows);
    std::ofstream(fs::path(output_root) / "report.json", std::ios::binary) << dump_report(report_json(s.rows));
    out << '\n';
    print_table(s.rows, out);
    return s;
}

}  // namespace kahler
