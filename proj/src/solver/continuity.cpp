#include "kahler/solver.hpp"

#include "../core/node_algebra.hpp"
#include "gmres.hpp"
#include "kahler/spectral.hpp"
#include "kahler/tensor.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <deque>
#include <limits>
#include <sstream>

namespace kahler {

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
    return std::chrono::duration<double>(Clock::now() - t0).count();
}

void require_torus(const MetricField& omega, const char* where) {
    if (!omega.chart().all_periodic()) throw ChartError(std::string(where) + ": needs a torus chart");
}

double weighted_sum(const std::vector<double>& f, const std::vector<double>& w) {
    double s = 0.0;
    for (std::size_t i = 0; i < f.size(); ++i) s += f[i] * w[i];
    return s;
}

/// Spectral machinery for one omega: fast ddbar, metric-dependent
/// operators and the constant-coefficient preconditioner.
class TorusOps {
public:
    explicit TorusOps(const MetricField& omega)
        : omega_(omega), fft_(omega.chart()), n_(omega.n()), N_(omega.chart().node_count()), spec_(N_), work_(N_),
          out_(N_) {
        sym_.resize(2 * n_, std::vector<cd>(N_));
        for (int c = 0; c < n_; ++c)
            for (std::size_t k = 0; k < N_; ++k) {
                sym_[2 * c][k] = fft_.dz_symbol(k, c, false);
                sym_[2 * c + 1][k] = fft_.dz_symbol(k, c, true);
            }
        det_omega_.resize(N_);
        for (std::size_t i = 0; i < N_; ++i) det_omega_[i] = detail::det_at(omega.form(), i);
    }

    std::size_t size() const { return N_; }
    int n() const { return n_; }
    const std::vector<double>& det_omega() const { return det_omega_; }

    void ddbar(const double* v, Form11Field& h) {
        fft_.forward(v, spec_.data());
        for (int c = 0; c < n_; ++c)
            for (int d = c; d < n_; ++d) {
                const auto& a = sym_[2 * c];
                const auto& b = sym_[2 * d + 1];
                for (std::size_t k = 0; k < N_; ++k) work_[k] = spec_[k] * a[k] * b[k];
                fft_.inverse(work_.data(), out_.data());
                if (c == d) {
                    auto& dst = h.mutable_diag(c);
                    for (std::size_t k = 0; k < N_; ++k) dst[k] = out_[k].real();
                } else {
                    std::copy(out_.begin(), out_.end(), h.mutable_off(c, d).begin());
                }
            }
    }

    /// z = (Lbar - eps)^{-1} r with Lbar the constant-coefficient laplacian of gbar.
    void set_preconditioner(const SmallMatrix& gbar, double eps) {
        const SmallMatrix gi = gbar.inverse();
        pre_.assign(N_, 0.0);
        for (std::size_t k = 0; k < N_; ++k) {
            cd s = 0.0;
            for (int i = 0; i < n_; ++i)
                for (int j = 0; j < n_; ++j) s += gi(j, i) * sym_[2 * i][k] * sym_[2 * j + 1][k];
            const double sigma = s.real() - eps;
            pre_[k] = std::abs(sigma) > 1e-12 ? 1.0 / sigma : 0.0;
        }
    }

    void precondition(const std::vector<double>& r, std::vector<double>& z) {
        fft_.forward(r.data(), spec_.data());
        for (std::size_t k = 0; k < N_; ++k) spec_[k] *= pre_[k];
        fft_.inverse(spec_.data(), out_.data());
        z.resize(N_);
        for (std::size_t k = 0; k < N_; ++k) z[k] = out_[k].real();
    }

    const MetricField& omega() const { return omega_; }

private:
    const MetricField& omega_;
    TorusSpectral fft_;
    int n_;
    std::size_t N_;
    std::vector<std::vector<cd>> sym_;
    std::vector<cd> spec_, work_, out_;
    std::vector<double> pre_;
    std::vector<double> det_omega_;
};

/// State of omega + ddbar u and the residual of the (perturbed) equation.
struct Evaluation {
    Form11Field gu;
    std::vector<double> residual;
    double sup = 0.0;
    double margin = 0.0;
};

Evaluation evaluate(TorusOps& ops, const std::vector<double>& u, const std::vector<double>& target, double eps) {
    const MetricField& omega = ops.omega();
    Evaluation e;
    Form11Field du(omega.chart_ptr(), ops.n());
    ops.ddbar(u.data(), du);
    e.gu = omega.form() + du;
    e.residual.resize(ops.size());
    e.margin = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < ops.size(); ++i) {
        double ratio, margin;
        detail::perturbed_at(omega.form(), du, i, ratio, margin);
        e.margin = std::min(e.margin, margin);
        e.residual[i] = std::log(ratio) - target[i] - eps * u[i];
        e.sup = std::max(e.sup, std::abs(e.residual[i]));
    }
    if (!(e.margin >= kMinMargin)) e.sup = std::numeric_limits<double>::infinity();
    return e;
}

void regauge(std::vector<double>& u, const std::vector<double>& det_omega) {
    double vol = 0.0;
    for (double d : det_omega) vol += d;
    const double m = weighted_sum(u, det_omega) / vol;
    for (double& v : u) v -= m;
}

struct StepOutcome {
    bool ok = false;
    std::vector<double> u;
    Evaluation eval;
    double damping = 1.0;
    int halvings = 0;
    int linear_iterations = 0;
    double linear_residual = 0.0;
};

StepOutcome damped_step(TorusOps& ops, const std::vector<double>& u, const Evaluation& cur,
                        const std::vector<double>& target, const SolverConfig& cfg, double eps) {
    const std::size_t N = ops.size();
    const int n = ops.n();
    // current metric determinant (weights for the range projection)
    std::vector<double> det_u(N);
    SmallMatrix gbar = SmallMatrix::Zero(n, n);
    for (std::size_t i = 0; i < N; ++i) {
        det_u[i] = detail::det_at(cur.gu, i);
        gbar += cur.gu.matrix(i);
    }
    gbar /= static_cast<double>(N);
    ops.set_preconditioner(gbar, eps);

    std::vector<double> rhs(N);
    for (std::size_t i = 0; i < N; ++i) rhs[i] = -cur.residual[i];
    const bool gauge = eps == 0.0;
    if (gauge) {
        double vol = 0.0;
        for (double d : det_u) vol += d;
        const double m = weighted_sum(rhs, det_u) / vol;
        for (double& v : rhs) v -= m;
    }

    Form11Field dd(cur.gu.chart_ptr(), n);
    detail::LinearMap A = [&](const std::vector<double>& x, std::vector<double>& y) {
        ops.ddbar(x.data(), dd);
        y.resize(N);
        for (std::size_t i = 0; i < N; ++i) y[i] = detail::trace_at(cur.gu, dd, i) - eps * x[i];
    };
    detail::LinearMap M = [&](const std::vector<double>& x, std::vector<double>& y) {
        ops.precondition(x, y);
        if (gauge) {
            double m = 0.0;
            for (double v : y) m += v;
            m /= static_cast<double>(N);
            for (double& v : y) v -= m;
        }
    };
    // no point solving far below the Newton target
    double rnorm = 0.0;
    for (double v : rhs) rnorm += v * v;
    rnorm = std::sqrt(rnorm);
    const double floor = 1e-2 * cfg.newton_tolerance * std::sqrt(static_cast<double>(N));
    const double tol = rnorm > 0.0 ? std::max(cfg.linear_tolerance, floor / rnorm) : cfg.linear_tolerance;
    std::vector<double> delta(N, 0.0);
    auto lin = detail::gmres(A, M, rhs, delta, tol, cfg.max_linear_iterations, cfg.gmres_restart);

    StepOutcome out;
    out.linear_iterations = lin.iterations;
    out.linear_residual = lin.relative_residual;
    double lambda = 1.0;
    for (int h = 0; h <= cfg.max_halvings; ++h, lambda *= 0.5) {
        std::vector<double> trial(u);
        for (std::size_t i = 0; i < N; ++i) trial[i] += lambda * delta[i];
        if (gauge) regauge(trial, ops.det_omega());
        Evaluation e = evaluate(ops, trial, target, eps);
        if (e.margin >= kMinMargin && e.sup < cur.sup) {
            out.ok = true;
            out.u = std::move(trial);
            out.eval = std::move(e);
            out.damping = lambda;
            out.halvings = h;
            return out;
        }
    }
    out.halvings = cfg.max_halvings;
    return out;
}

struct NewtonSolve {
    bool ok = false;
    std::vector<double> u;
    Evaluation eval;
    StepRecord record;
};

NewtonSolve newton_solve(TorusOps& ops, std::vector<double> u, const std::vector<double>& target,
                         const SolverConfig& cfg, double eps) {
    NewtonSolve s;
    Evaluation e = evaluate(ops, u, target, eps);
    for (int it = 0;; ++it) {
        s.record.residuals.push_back(e.sup);
        if (e.sup <= cfg.newton_tolerance) {
            s.ok = true;
            break;
        }
        if (it >= cfg.max_newton_iterations || !std::isfinite(e.sup)) break;
        StepOutcome st = damped_step(ops, u, e, target, cfg, eps);
        s.record.halvings += st.halvings;
        s.record.linear_iterations.push_back(st.linear_iterations);
        if (!st.ok) break;
        s.record.dampings.push_back(st.damping);
        u = std::move(st.u);
        e = std::move(st.eval);
    }
    s.record.margin = e.margin;
    s.u = std::move(u);
    s.eval = std::move(e);
    return s;
}

double log_integral_exp(const std::vector<double>& f, double s, const MetricField& omega) {
    const GridChart& c = omega.chart();
    double fmax = -std::numeric_limits<double>::infinity();
    for (double v : f) fmax = std::max(fmax, s * v);
    double acc = 0.0;
    for (std::size_t i = 0; i < f.size(); ++i)
        acc += c.node_weight(i) * detail::det_at(omega.form(), i) * std::exp(s * f[i] - fmax);
    return fmax + std::log(acc);
}

double cohomology_defect(const MetricField& omega, const Form11Field& gu) {
    double a = 0.0, b = 0.0;
    const GridChart& c = omega.chart();
    for (std::size_t i = 0; i < gu.size(); ++i) {
        const double w = c.node_weight(i);
        a += w * detail::det_at(gu, i);
        b += w * detail::det_at(omega.form(), i);
    }
    return std::abs(a - b) / b;
}

}  // namespace

// ------------------------------------------------------------------ config

std::vector<double> SolverConfig::geometric_schedule(int steps) {
    if (steps < 1) throw ConfigError("schedule needs at least one step");
    std::vector<double> s{0.0};
    for (int k = steps - 1; k >= 0; --k) s.push_back(std::ldexp(1.0, -k));
    return s;
}

void SolverConfig::validate() const {
    if (schedule.size() < 2 || schedule.front() != 0.0 || schedule.back() != 1.0)
        throw ConfigError("schedule must start at 0 and end at 1");
    for (std::size_t i = 1; i < schedule.size(); ++i)
        if (!(schedule[i] > schedule[i - 1])) throw ConfigError("schedule must be strictly increasing");
    if (!(newton_tolerance > 0.0) || !(linear_tolerance > 0.0)) throw ConfigError("tolerances must be positive");
    if (max_newton_iterations < 1 || max_linear_iterations < 1 || gmres_restart < 1)
        throw ConfigError("iteration limits must be positive");
    if (max_halvings < 0 || max_bisections < 0) throw ConfigError("damping limits must be non-negative");
}

// ------------------------------------------------------------------ sources

CalabiProblem CalabiProblem::normalized(MetricField omega, ScalarField f) {
    auto [fn, c] = normalize_source(f, omega);
    return CalabiProblem{std::move(omega), std::move(f), c};
}

std::pair<ScalarField, double> normalize_source(const ScalarField& f, const MetricField& omega) {
    return continuity_source(f, omega, 1.0);
}

std::pair<ScalarField, double> continuity_source(const ScalarField& f, const MetricField& omega, double s) {
    require_same_chart(f.chart(), omega.chart(), "continuity_source");
    if (!f.is_real()) throw FieldError("source must be real-tagged");
    if (!(s >= 0.0 && s <= 1.0)) throw FieldError("continuity parameter must lie in [0, 1]");
    if (s == 0.0) return {ScalarField::constant(f.chart_ptr(), 0.0), 0.0};
    // c_s = log V - log int e^{s f}: the root of the increasing map
    // c -> int e^{s f + c} omega^n - V.
    const double log_vol = std::log(chart_volume(omega));
    const double c = log_vol - log_integral_exp(f.re(), s, omega);
    std::vector<double> v(f.size());
    for (std::size_t i = 0; i < v.size(); ++i) v[i] = s * f[i] + c;
    return {ScalarField::real(f.chart_ptr(), std::move(v)), c};
}

// ------------------------------------------------------------------ Newton

double ma_residual(const MetricField& omega, const ScalarField& u, const ScalarField& target, double epsilon) {
    require_same_chart(omega.chart(), u.chart(), "ma_residual");
    require_same_chart(omega.chart(), target.chart(), "ma_residual");
    auto d = ma_density(omega, u);
    double sup = 0.0;
    for (std::size_t i = 0; i < d.size(); ++i)
        sup = std::max(sup, std::abs(std::log(d[i]) - target[i] - epsilon * u[i]));
    return sup;
}

NewtonStep newton_step_detailed(const MetricField& omega, const ScalarField& u, const ScalarField& target,
                                const SolverConfig& config, double epsilon) {
    require_torus(omega, "newton_step");
    require_same_chart(omega.chart(), u.chart(), "newton_step");
    require_same_chart(omega.chart(), target.chart(), "newton_step");
    TorusOps ops(omega);
    Evaluation cur = evaluate(ops, u.re(), target.re(), epsilon);
    if (!(cur.margin >= kMinMargin))
        throw PositivityError("newton_step: omega + ddbar u is not positive", 0, cur.margin, {});
    NewtonStep r;
    r.residual_before = cur.sup;
    if (cur.sup == 0.0) {
        r.u = u;
        r.margin = cur.margin;
        return r;
    }
    StepOutcome st = damped_step(ops, u.re(), cur, target.re(), config, epsilon);
    r.linear_iterations = st.linear_iterations;
    r.linear_residual = st.linear_residual;
    r.halvings = st.halvings;
    if (!st.ok) {
        std::ostringstream msg;
        msg << "newton_step: no admissible decrease after " << config.max_halvings
            << " halvings (residual " << cur.sup << ", linear residual " << st.linear_residual << ")";
        throw KahlerError(msg.str());
    }
    r.u = ScalarField::real(u.chart_ptr(), std::move(st.u));
    r.residual_after = st.eval.sup;
    r.damping = st.damping;
    r.margin = st.eval.margin;
    return r;
}

ScalarField newton_step(const MetricField& omega, const ScalarField& u, const ScalarField& target,
                        const SolverConfig& config) {
    return newton_step_detailed(omega, u, target, config).u;
}

// ------------------------------------------------------------------ paths

namespace {

SolveReport run_path(const MetricField& omega, const ScalarField& f, double eps, const SolverConfig& config,
                     const std::optional<ScalarField>& guess) {
    config.validate();
    require_torus(omega, eps > 0 ? "solve_perturbed" : "solve_calabi");
    require_same_chart(omega.chart(), f.chart(), "solve");
    if (!f.is_real()) throw FieldError("source must be real-tagged");
    const auto t0 = Clock::now();
    TorusOps ops(omega);
    const std::size_t N = ops.size();

    SolveReport report;
    report.epsilon = eps;
    ContinuityState good{0.0, ScalarField::constant(f.chart_ptr(), 0.0), 0.0, 0.0};
    std::vector<double> u(N, 0.0);
    std::deque<double> pending(config.schedule.begin() + 1, config.schedule.end());
    bool first = true;
    Evaluation last;
    int depth = 0;
    while (!pending.empty()) {
        const double s = pending.front();
        const auto ts = Clock::now();
        std::vector<double> target(N);
        double c_s = 0.0;
        if (eps > 0.0) {
            for (std::size_t i = 0; i < N; ++i) target[i] = s * f[i];
        } else {
            auto [fs, c] = continuity_source(f, omega, s);
            target = fs.re();
            c_s = c;
        }
        std::vector<double> start = (first && guess) ? guess->re() : u;
        if (first && guess && eps == 0.0) regauge(start, ops.det_omega());
        NewtonSolve ns = newton_solve(ops, std::move(start), target, config, eps);
        ns.record.s = s;
        ns.record.c_s = c_s;
        ns.record.seconds = seconds_since(ts);
        if (!ns.ok) {
            if (depth >= config.max_bisections) {
                report.status = SolveStatus::failed;
                report.u = good.u;
                report.steps.push_back(ns.record);
                report.seconds = seconds_since(t0);
                std::ostringstream msg;
                msg << "continuity path failed at s = " << s << " after " << depth
                    << " bisections (last good s = " << good.s << ", residual " << ns.record.residuals.back() << ")";
                report.message = msg.str();
                throw SolveError(msg.str(), good, report);
            }
            ++depth;
            ++report.bisections;
            pending.push_front(0.5 * (good.s + s));
            continue;
        }
        first = false;
        depth = 0;
        pending.pop_front();
        u = std::move(ns.u);
        last = std::move(ns.eval);
        good = ContinuityState{s, ScalarField::real(f.chart_ptr(), u), c_s, last.sup};
        report.steps.push_back(std::move(ns.record));
    }
    report.status = SolveStatus::success;
    report.u = ScalarField::real(f.chart_ptr(), std::move(u));
    report.c = good.c;
    report.final_residual = last.sup;
    report.margin = last.margin;
    report.cohomology_defect = cohomology_defect(omega, last.gu);
    report.seconds = seconds_since(t0);
    report.message = "converged";
    return report;
}

}  // namespace

SolveReport solve_calabi(const CalabiProblem& problem, const SolverConfig& config,
                         const std::optional<ScalarField>& initial_guess) {
    require_torus(problem.omega, "solve_calabi");
    // the problem must be normalized: int (e^{f+c} - 1) omega^n = 0
    const double vol = chart_volume(problem.omega);
    const double lie = std::exp(log_integral_exp(problem.f.re(), 1.0, problem.omega) + problem.c) - vol;
    if (std::abs(lie) > 1e-10 * vol) throw FieldError("solve_calabi: problem is not normalized");
    if (initial_guess) require_same_chart(initial_guess->chart(), problem.omega.chart(), "solve_calabi");
    return run_path(problem.omega, problem.f, 0.0, config, initial_guess);
}

SolveReport solve_perturbed(const MetricField& omega, const ScalarField& f, double epsilon,
                            const SolverConfig& config) {
    if (!(epsilon > 0.0)) throw FieldError("solve_perturbed: epsilon must be positive");
    return run_path(omega, f, epsilon, config, std::nullopt);
}

// ------------------------------------------------------------------ uniqueness

double gauge_mean(const ScalarField& u, const MetricField& omega) {
    return integrate(u, omega) / chart_volume(omega);
}

double uniqueness_defect(const ScalarField& u1, const ScalarField& u2, const MetricField& omega) {
    const ScalarField d = u1 - u2;
    const double m = gauge_mean(d, omega);
    std::vector<double> sq(d.size());
    for (std::size_t i = 0; i < sq.size(); ++i) sq[i] = (d[i] - m) * (d[i] - m);
    return std::sqrt(std::max(0.0, integrate(ScalarField::real(d.chart_ptr(), std::move(sq)), omega) /
                                       chart_volume(omega)));
}

UniquenessReport uniqueness_defect(const ScalarField& u1, const ScalarField& u2, const CalabiProblem& problem,
                                   double tolerance) {
    const MetricField& omega = problem.omega;
    std::vector<double> target(problem.f.re());
    for (double& v : target) v += problem.c;
    const auto tgt = ScalarField::real(problem.f.chart_ptr(), std::move(target));
    for (const ScalarField* u : {&u1, &u2}) {
        const double r = ma_residual(omega, *u, tgt);
        if (r > 10.0 * tolerance) {
            std::ostringstream msg;
            msg << "uniqueness_defect: input is not a solution (residual " << r << " > 10 x " << tolerance << ")";
            throw FieldError(msg.str());
        }
    }
    UniquenessReport rep;
    rep.defect = uniqueness_defect(u1, u2, omega);
    const ScalarField d = u1 - u2;
    const auto d1 = ma_density(omega, u1), d2 = ma_density(omega, u2);
    std::vector<double> e(d.size());
    for (std::size_t i = 0; i < e.size(); ++i) e[i] = d[i] * (d1[i] - d2[i]);
    rep.energy_identity = integrate(ScalarField::real(d.chart_ptr(), std::move(e)), omega);
    // |d w|^2_g = g^{i jbar} d_i w conj(d_j w)
    const GridChart& c = omega.chart();
    const int n = omega.n();
    std::vector<std::vector<cd>> grad;
    {
        TorusSpectral fft(c);
        std::vector<cd> spec(fft.size()), work(fft.size()), out(fft.size());
        fft.forward(d.re().data(), spec.data());
        for (int k = 0; k < n; ++k) {
            for (std::size_t q = 0; q < spec.size(); ++q) work[q] = spec[q] * fft.dz_symbol(q, k, false);
            fft.inverse(work.data(), out.data());
            grad.push_back(out);
        }
    }
    std::vector<double> g2(d.size());
    for (std::size_t i = 0; i < g2.size(); ++i) {
        const SmallMatrix gi = omega.matrix(i).inverse();
        cd s = 0.0;
        for (int a = 0; a < n; ++a)
            for (int b = 0; b < n; ++b) s += gi(b, a) * grad[a][i] * std::conj(grad[b][i]);
        g2[i] = s.real();
    }
    rep.gradient_energy = integrate(ScalarField::real(d.chart_ptr(), std::move(g2)), omega) / n;
    return rep;
}

// ------------------------------------------------------------------ output

nlohmann::json to_json(const SolveReport& r) {
    nlohmann::json steps = nlohmann::json::array();
    for (const auto& s : r.steps)
        steps.push_back({{"s", s.s},
                         {"c_s", s.c_s},
                         {"residuals", s.residuals},
                         {"dampings", s.dampings},
                         {"linear_iterations", s.linear_iterations},
                         {"margin", s.margin},
                         {"halvings", s.halvings}});
    return {{"status", r.status == SolveStatus::success ? "success" : "failed"},
            {"c", r.c},
            {"epsilon", r.epsilon},
            {"final_residual", r.final_residual},
            {"margin", r.margin},
            {"cohomology_defect", r.cohomology_defect},
            {"bisections", r.bisections},
            {"message", r.message},
            {"steps", steps}};
}

std::string residual_csv(const SolveReport& r) {
    std::ostringstream out;
    out.precision(17);
    out << "s,newton_iteration,residual\n";
    for (const auto& s : r.steps)
        for (std::size_t k = 0; k < s.residuals.size(); ++k) out << s.s << ',' << k << ',' << s.residuals[k] << '\n';
    return out.str();
}

}  // namespace kahler
