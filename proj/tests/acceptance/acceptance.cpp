// Acceptance gate: one PASS/FAIL line per criterion.
//
// Runs the shipped preset suite twice (configs/), reads the criteria off the
// first run's artifacts, recomputes what can be recomputed from the written
// fields, and compares the two runs byte for byte.

#include "kahler/harness.hpp"
#include "kahler/serialize.hpp"
#include "kahler/solver.hpp"
#include "kahler/spectral.hpp"
#include "kahler/tensor.hpp"
#include "oracles.hpp"

#include <cmath>
#include <cstdarg>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>

using namespace kahler;
using nlohmann::json;
namespace fs = std::filesystem;

namespace {

fs::path first_root, second_root;
int failures = 0;

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::stringstream s;
    s << in.rdbuf();
    return s.str();
}

json report(const std::string& name) {
    const fs::path p = first_root / name / "report.json";
    if (!fs::exists(p)) throw std::runtime_error("missing report for " + name);
    return json::parse(slurp(p));
}

double seconds(const std::string& name) {
    return json::parse(slurp(first_root / name / "timing.json"))["seconds"].get<double>();
}

double num(const json& v) {
    if (v.is_number()) return v.get<double>();
    if (v == "inf") return INFINITY;
    return NAN;
}

template <class F>
void criterion(int id, const char* title, F&& body) {
    std::string detail;
    bool ok = false;
    try {
        ok = body(detail);
    } catch (const std::exception& e) {
        detail = std::string("error: ") + e.what();
    }
    std::printf("AC%02d %s  %s: %s\n", id, ok ? "PASS" : "FAIL", title, detail.c_str());
    std::fflush(stdout);
    if (!ok) ++failures;
}

std::string fmt(const char* f, ...) __attribute__((format(printf, 1, 2)));
std::string fmt(const char* f, ...) {
    char buf[512];
    va_list ap;
    va_start(ap, f);
    std::vsnprintf(buf, sizeof buf, f, ap);
    va_end(ap);
    return buf;
}

// 1 + u''/4 = e^{f + c} on the unit circle, f = amp cos(2 pi x).
std::vector<double> poisson_reduction(int N, double amp) {
    const double c = -std::log(std::cyl_bessel_i(0.0, amp));
    std::vector<double> rhs(N);
    double mean = 0;
    for (int j = 0; j < N; ++j) mean += rhs[j] = 4 * (std::exp(amp * std::cos(2 * oracle::pi * j / N) + c) - 1);
    for (double& v : rhs) v -= mean / N;
    return oracle::periodic_poisson_1d(rhs);
}

ScalarField trig(const ChartPtr& c, const oracle::RandomTrig& t) {
    return ScalarField::sample(c, [&](std::size_t i) {
        std::vector<double> x(c->axis_count());
        for (int a = 0; a < c->axis_count(); ++a) x[a] = c->coordinate(i, a);
        return t(x);
    });
}

// Every artifact except timing.json, relative path -> bytes.
std::map<std::string, std::string> artifacts(const fs::path& root) {
    std::map<std::string, std::string> out;
    for (const auto& e : fs::recursive_directory_iterator(root)) {
        if (!e.is_regular_file()) continue;
        const auto rel = fs::relative(e.path(), root);
        if (e.path().filename() == "timing.json" || rel.parent_path().empty()) continue;
        out[rel.string()] = slurp(e.path());
    }
    return out;
}

}  // namespace

int main() {
    const fs::path configs = KAHLER_CONFIG_DIR;
    const fs::path base = fs::current_path() / "acceptance_runs";
    first_root = base / "first";
    second_root = base / "second";
    fs::remove_all(base);
    fs::create_directories(base);

    std::printf("running preset suite from %s\n", configs.c_str());
    std::fflush(stdout);
    SuiteResult suite;
    {
        std::ofstream log(base / "suite_first.log");
        suite = run_suite(configs.string(), first_root.string(), log);
    }
    std::printf("suite: %d runs, exit status %d (log in %s)\n\n", static_cast<int>(suite.runs.size()),
                suite.exit_status, (base / "suite_first.log").c_str());

    criterion(1, "dim-1 oracle equivalence", [](std::string& d) {
        const json r = report("torus1d-cosine");
        const ScalarField u = read_scalar_field((first_root / "torus1d-cosine" / "u.field").string());
        const int N = u.chart().count(0);
        const auto ref = poisson_reduction(N, 0.5);
        double err = 0;
        for (std::size_t i = 0; i < u.size(); ++i) err = std::max(err, std::abs(u[i] - ref[u.chart().index(i, 0)]));
        const double t = seconds("torus1d-cosine");
        d = fmt("%dx%d grid, max error %.3g (< 1e-8), %.1f s (< 30 s)", N, u.chart().count(1), err, t);
        return N == 256 && u.chart().count(1) == 256 && err < 1e-8 && t < 30.0 &&
               r["result"]["status"] == "success";
    });

    criterion(2, "dim-2 residual and cohomology", [](std::string& d) {
        const json r = report("torus2d-cos-product");
        const ScalarField u = read_scalar_field((first_root / "torus2d-cos-product" / "u.field").string());
        const ScalarField f = read_scalar_field((first_root / "torus2d-cos-product" / "f.field").string());
        const MetricField omega = MetricField::flat(u.chart_ptr());
        const auto [fn, c] = normalize_source(f, omega);
        const double res = ma_residual(omega, u, fn);
        // int omega_u^n = int omega^n
        const double v0 = chart_volume(omega);
        const double v1 = integrate(ma_density(omega, u), omega);
        const double coh = std::abs(v1 - v0) / v0;
        const double t = seconds("torus2d-cos-product");
        d = fmt("32 per axis: residual %.3g (< 1e-6), cohomology %.3g (< 1e-8), %.1f s (< 600 s)", res, coh, t);
        return u.chart().count(0) == 32 && res < 1e-6 && coh < 1e-8 && t < 600.0 &&
               r["result"]["final_residual"].get<double>() < 1e-6;
    });

    criterion(3, "uniqueness up to constants", [](std::string& d) {
        const json r = report("torus2d-uniqueness");
        const fs::path dir = first_root / "torus2d-uniqueness";
        const ScalarField u1 = read_scalar_field((dir / "u.field").string());
        const ScalarField u2 = read_scalar_field((dir / "u_second.field").string());
        const double defect = uniqueness_defect(u1, u2, MetricField::flat(u1.chart_ptr()));
        const double guesses_apart = (u1 - u2).sup_abs();
        d = fmt("defect %.3g (< 1e-7), reported %.3g, solutions differ by %.3g in sup", defect,
                r["result"]["uniqueness"]["defect"].get<double>(), guesses_apart);
        return defect < 1e-7 && r["result"]["uniqueness"]["defect"].get<double>() < 1e-7;
    });

    criterion(4, "linearization is the metric laplacian", [](std::string& d) {
        auto c = share(GridChart::torus({16, 8, 16, 8}, {1, 1, 1, 1}));
        const MetricField g(MetricField::flat(c).form() + ddbar(trig(c, oracle::RandomTrig(4, 1, 4, 0.002, 5))));
        const ScalarField v = trig(c, oracle::RandomTrig(4, 1, 4, 0.01, 6));
        const ScalarField lap = metric_laplacian(g, v);
        std::vector<double> lt, le;
        std::string errs;
        for (double t : {1e-2, 1e-3, 1e-4}) {
            const ScalarField dens = ma_density(g, t * v);
            double e = 0;
            for (std::size_t i = 0; i < dens.size(); ++i) e = std::max(e, std::abs(std::log(dens[i]) / t - lap[i]));
            lt.push_back(std::log(t));
            le.push_back(std::log(e));
            errs += fmt(" %.2g", e);
        }
        const double slope = oracle::slope(lt, le);
        d = fmt("log-log slope %.4f (>= 0.9), errors%s", slope, errs.c_str());
        return slope >= 0.9;
    });

    criterion(5, "perturbed maximum principle and convergence", [](std::string& d) {
        const json r = report("torus1d-perturbed");
        bool ok = r["result"]["runs"].size() == 3;
        double last = INFINITY;
        std::string parts;
        for (const auto& run : r["result"]["runs"]) {
            const double sup = run["sup_u"], bound = run["bound"], dist = run["distance_to_unperturbed"];
            ok = ok && sup <= bound + 1e-8 && dist < last;
            last = dist;
            parts += fmt(" eps=%g: sup %.4g <= %.4g, |u-u0| %.3g;", run["epsilon"].get<double>(), sup, bound, dist);
        }
        d = parts;
        return ok;
    });

    criterion(6, "n = 1 closed form and flat curvature", [](std::string& d) {
        const json r = report("cylinder-closed-form");
        const Form11Field h = read_form_field((first_root / "cylinder-closed-form" / "omega_phi.field").string());
        double err = 0;
        for (std::size_t i = 0; i < h.size(); ++i) {
            const double rr = h.chart().radius(i);
            err = std::max(err, std::abs(h.diag(0)[i] * rr * rr - 1.0));
        }
        const double curv = r["result"]["curvature_sup"];
        d = fmt("max |h |z|^2 - 1| %.3g (< 1e-8), sup |R| %.3g (< 1e-6)", err, curv);
        return err < 1e-8 && curv < 1e-6;
    });

    criterion(7, "curvature decay of the n = 2 product model", [](std::string& d) {
        const json r = report("n2-curvature-decay");
        const json& fit = r["result"]["fit"];
        const double a = fit["a"], b = fit["b"];
        const double t = seconds("n2-curvature-decay");
        const json cfg = json::parse(slurp(first_root / "n2-curvature-decay" / "manifest.json"))["config"]["chart"];
        d = fmt("%dx%dx%d^2: b = %.4f (-0.5 +- 0.1), a = %.4f (0 +- 0.05), fit residual %.2g, %.1f s (< 300 s)",
                cfg["radial"].get<int>(), cfg["angular"].get<int>(), cfg["fiber_resolution"].get<int>(), b, a,
                fit["residual"].get<double>(), t);
        return cfg["radial"] == 256 && cfg["angular"] == 64 && cfg["fiber_resolution"] == 32 &&
               std::abs(b + 0.5) <= 0.1 && std::abs(a) <= 0.05 && fit["resolved"] == true && t < 300.0;
    });

    criterion(8, "completeness exponent", [](std::string& d) {
        const json r = report("n2-growth");
        const json e = report("n2-growth-euclidean");
        const double p = r["result"]["completeness"]["exponent"];
        const bool model_bounded = r["result"]["completeness"]["bounded"];
        const bool eucl_bounded = e["result"]["completeness"]["bounded"];
        d = fmt("length ~ (-log r)^%.4f (0.75 +- 0.05); Euclidean control bounded = %s (length %.4g)", p,
                eucl_bounded ? "yes" : "no", e["result"]["completeness"]["length_at_inner"].get<double>());
        return std::abs(p - 0.75) <= 0.05 && !model_bounded && eucl_bounded;
    });

    criterion(9, "volume growth", [](std::string& d) {
        const double a2 = report("n2-growth")["result"]["volume"]["alpha"];
        const double a1 = report("cylinder-growth")["result"]["volume"]["alpha"];
        d = fmt("n = 2 alpha %.4f (<= 2.1); cylinder alpha %.4f (1 +- 0.1)", a2, a1);
        return a2 <= 2.1 && std::abs(a1 - 1.0) <= 0.1;
    });

    criterion(10, "semi-ample identities", [](std::string& d) {
        const json red = report("n2-k2-reduction")["result"];
        const json sa = report("n2-k1-semiample")["result"];
        const double rd = red["reduction_defect"], ed = red["eta_defect"];
        const double ag = sa["agreement"], tp = sa["top_power_defect"];
        d = fmt("k = n: form defect %.3g, eta defect %.3g (exact); k = 1, n = 2: agreement %.3g (< 1e-6), "
                "top power %.3g (< 1e-6), rank %d",
                rd, ed, ag, tp, sa["rank"].get<int>());
        return rd == 0.0 && ed == 0.0 && ag < 1e-6 && tp < 1e-6 && sa["top_power_nodes"].get<long>() > 0;
    });

    criterion(11, "barrier expansion order", [](std::string& d) {
        const json h = report("n2-i1j1k1")["result"];
        const json m = report("n2-i1j1k1-drop-constant")["result"];
        const double oh = num(h["order"]), om = num(m["order"]);
        const double o2 = num(report("cylinder-i1j1k1")["result"]["order"]);
        const double o3a = num(report("cylinder-i2j1k1")["result"]["order"]);
        const double o3b = num(report("cylinder-i1j2k1")["result"]["order"]);
        d = fmt("(1,1,1) n = 2 order %.3f (>= 2.85); mutation %.3f (< 2.5); i+j = 2: %.3f, i+j = 3: %.3f, %.3f", oh,
                om, o2, o3a, o3b);
        const bool mono = o2 >= 2.85 && o3a >= 3.85 && o3b >= 3.85 && o3a > o2 && o3b > o2;
        return h["status"] == "pass" && oh >= 2.85 && om < 2.5 && mono;
    });
    {
        const double op = num(report("n2-i1j1k1-as-printed")["result"]["order"]);
        std::printf("INFO        printed coefficient set, (1,1,1) n = 2: order %.3f (%s the 2.85 bar)\n", op,
                    op >= 2.85 ? "meets" : "misses");
    }

    criterion(12, "decay bound machinery", [](std::string& d) {
        bool ok = true;
        for (int m = 1; m <= 3; ++m) {
            const json p = report("decay-m" + std::to_string(m) + "-pass")["result"];
            const json f = report("decay-m" + std::to_string(m) + "-fail")["result"];
            ok = ok && p["check_pass"] == true && f["check_pass"] == false;
            d += fmt(" m=%d: ||S||^%d %s (C* %.3g), ||S||^%d %s;", m, m + 2, p["check_pass"] == true ? "passes" : "fails",
                     p["constant"].get<double>(), m, f["check_pass"] == true ? "passes" : "fails");
        }
        return ok;
    });

    criterion(13, "determinism", [&](std::string& d) {
        {
            std::ofstream log(base / "suite_second.log");
            run_suite(configs.string(), second_root.string(), log);
        }
        const auto a = artifacts(first_root), b = artifacts(second_root);
        int reports = 0, differing = 0;
        for (const auto& [k, v] : a) {
            reports += fs::path(k).filename() == "report.json";
            auto it = b.find(k);
            if (it == b.end() || it->second != v) ++differing;
        }
        d = fmt("%d files (%d reports) compared across two suite runs, %d differ", static_cast<int>(a.size()), reports,
                differing + static_cast<int>(b.size() != a.size()));
        return !a.empty() && a.size() == b.size() && differing == 0 &&
               reports == static_cast<int>(suite.runs.size());
    });

    std::printf("\n%d/13 criteria passed\n", 13 - failures);
    return failures == 0 ? 0 : 1;
}
