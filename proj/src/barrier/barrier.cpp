#include "kahler/barrier.hpp"

#include "core/node_algebra.hpp"
#include "kahler/tensor.hpp"

#include <Eigen/Eigenvalues>

#include <cmath>
#include <limits>
#include <sstream>

namespace kahler {

namespace {

struct Coefficients {
    double m1, m2, c0;
};

Coefficients coefficients(const BarrierSpec& s) {
    const double n = s.model.n, k = s.k, i = s.i, j = s.j;
    Coefficients c{};
    if (s.coefficients == BarrierCoefficients::model) {
        c.m1 = c.m2 = n * k * (i + j) + 0.5 * (i + j) * (n - 1);
        c.c0 = n * k * (n * k - 1);
    } else {
        c.m1 = k * (i + j) + j * (n - 1);
        c.m2 = k * (i + j) + i * (n - 1);
        c.c0 = k * (k - n);
    }
    if (s.drop_constant) c.c0 = 0.0;
    return c;
}

// y = -n log||S||_phi^2 = n L
std::vector<double> y_values(const DivisorModel& m) {
    const ScalarField L = m.log_term();
    std::vector<double> y(L.size());
    for (std::size_t q = 0; q < y.size(); ++q) y[q] = m.n * L[q];
    return y;
}

/// det(G + A) / det(G) - 1 with the C-linear part kept separate from the
/// cancellation against 1.
double excess_at(const Form11Field& g, const Form11Field& a, std::size_t q) {
    switch (g.n()) {
        case 1: return a.diag(0)[q] / g.diag(0)[q];
        case 2: {
            const double p = g.diag(0)[q], r = g.diag(1)[q];
            const double ap = a.diag(0)[q], ar = a.diag(1)[q];
            const cd b = g.off(0, 1)[q], ab = a.off(0, 1)[q];
            const double lin = p * ar + r * ap - 2.0 * (b * std::conj(ab)).real();
            const double quad = ap * ar - std::norm(ab);
            return (lin + quad) / (p * r - std::norm(b));
        }
        default: {
            const SmallMatrix G = g.matrix(q);
            const SmallMatrix M = G.llt().solve(a.matrix(q));
            // det(I + M) - 1 via the eigenvalues of M
            Eigen::ComplexEigenSolver<SmallMatrix> es(M, false);
            cd prod = 1.0;
            for (int e = 0; e < M.rows(); ++e) prod *= 1.0 + es.eigenvalues()(e);
            return (prod - 1.0).real();
        }
    }
}

}  // namespace

void BarrierSpec::validate() const {
    model.validate();
    if (i < 0 || j < 0 || i + j < 1) throw ConfigError("barrier: need i, j >= 0 and i + j >= 1");
    if (k < 0) throw ConfigError("barrier: log power k must be >= 0");
    if (!std::isfinite(amplitude) || amplitude < 0.0) throw ConfigError("barrier: amplitude must be finite and >= 0");
    if (!model.ample()) throw ConfigError("barrier: needs the ample model k = n");
    if (theta.size() != model.chart->node_count()) throw ConfigError("barrier: theta must live on the model chart");
    require_same_chart(theta.chart(), *model.chart, "barrier theta");
    window.validate();
}

ScalarField theta_constant(const ChartPtr& chart) { return ScalarField::constant(chart, 1.0); }

ScalarField theta_linear(const ChartPtr& chart) {
    return ScalarField::sample_complex(chart, [&](std::size_t q) { return 1.0 + 0.5 * chart->z(q, 0); });
}

ScalarField barrier_section(const BarrierSpec& spec) {
    spec.validate();
    const GridChart& c = *spec.model.chart;
    const ScalarField L = spec.model.log_term();
    return ScalarField::sample_complex(spec.model.chart, [&](std::size_t q) {
        const double arg = std::arg(c.z(q, 0));
        return std::exp(-0.5 * (spec.i + spec.j) * L[q]) * std::polar(1.0, (spec.i - spec.j) * arg) *
               spec.theta.value(q);
    });
}

ScalarField barrier_potential(const BarrierSpec& spec) {
    const ScalarField T = barrier_section(spec);
    const std::vector<double> y = y_values(spec.model);
    return ScalarField::sample(spec.model.chart, [&](std::size_t q) {
        return spec.amplitude * 2.0 * T.value(q).real() * std::pow(y[q], spec.k);
    });
}

BarrierDensity barrier_density(const BarrierSpec& spec) {
    spec.validate();
    const MetricField omega = omega_phi(spec.model);
    BarrierSpec s = spec;
    BarrierDensity out;
    constexpr int kMaxHalvings = 60;
    for (;;) {
        const Form11Field a = ddbar(barrier_potential(s));
        const std::size_t N = a.size();
        std::vector<double> dens(N), excess(N);
        double margin = std::numeric_limits<double>::infinity();
        for (std::size_t q = 0; q < N; ++q) {
            double m = 0.0;
            detail::perturbed_at(omega.form(), a, q, dens[q], m);
            margin = std::min(margin, m);
            excess[q] = excess_at(omega.form(), a, q);
        }
        if (margin > kBarrierMargin || s.amplitude == 0.0) {
            out.density = ScalarField::real(spec.model.chart, std::move(dens));
            out.excess = ScalarField::real(spec.model.chart, std::move(excess));
            out.amplitude = s.amplitude;
            out.margin = margin;
            return out;
        }
        if (out.halvings == kMaxHalvings) {
            std::ostringstream msg;
            msg << "barrier: no admissible amplitude after " << kMaxHalvings << " halvings (margin " << margin << ")";
            throw PositivityError(msg.str(), 0, margin, {});
        }
        s.amplitude *= 0.5;
        ++out.halvings;
    }
}

ScalarField barrier_lhs(const BarrierSpec& spec) { return barrier_density(spec).density; }

RhsTerms barrier_rhs_terms(const BarrierSpec& spec) {
    const ScalarField T = barrier_section(spec);
    const std::vector<double> y = y_values(spec.model);
    const Coefficients c = coefficients(spec);
    const double ij = static_cast<double>(spec.i) * spec.j;
    const ChartPtr& ch = spec.model.chart;
    RhsTerms t;
    t.leading = ScalarField::sample(ch, [&](std::size_t q) { return ij * y[q] * y[q] * 2.0 * T.value(q).real(); });
    t.middle = ScalarField::sample_complex(ch, [&](std::size_t q) {
        const cd v = T.value(q);
        return -y[q] * (c.m1 * v + c.m2 * std::conj(v));
    });
    t.constant = ScalarField::sample(ch, [&](std::size_t q) { return c.c0 * 2.0 * T.value(q).real(); });
    return t;
}

namespace {

std::vector<double> rhs_excess(const BarrierSpec& spec, double amplitude) {
    const RhsTerms t = barrier_rhs_terms(spec);
    const std::vector<double> y = y_values(spec.model);
    const double e = spec.k - (spec.model.n + 1.0) / spec.model.n;
    std::vector<double> out(y.size());
    for (std::size_t q = 0; q < y.size(); ++q)
        out[q] = amplitude * std::pow(y[q], e) * (t.leading[q] + t.middle.value(q).real() + t.constant[q]);
    return out;
}

}  // namespace

ScalarField barrier_rhs(const BarrierSpec& spec) {
    std::vector<double> v = rhs_excess(spec, spec.amplitude);
    for (double& x : v) x += 1.0;
    return ScalarField::real(spec.model.chart, std::move(v));
}

double dominance_crossover(const BarrierSpec& spec) {
    const RhsTerms t = barrier_rhs_terms(spec);
    const GridChart& c = *spec.model.chart;
    const std::size_t S = c.row_size();
    double crossover = 0.0;
    for (int r = 0; r < c.radial_count(); ++r) {
        double lead = 0.0, rest = 0.0;
        for (std::size_t q = r * S; q < (r + 1) * S; ++q) {
            lead = std::max(lead, std::abs(t.leading[q]));
            rest = std::max(rest, std::abs(t.middle.value(q)) + std::abs(t.constant[q]));
        }
        if (!(lead > rest)) break;
        crossover = c.radius_at(r);
    }
    return crossover;
}

std::string to_string(BarrierStatus s) {
    switch (s) {
        case BarrierStatus::pass: return "pass";
        case BarrierStatus::fail: return "fail";
        case BarrierStatus::inconclusive: return "inconclusive";
    }
    return "?";
}

BarrierReport verify_barrier(const BarrierSpec& spec) {
    const BarrierDensity d = barrier_density(spec);
    const std::vector<double> rhs = rhs_excess(spec, d.amplitude);
    const GridChart& c = *spec.model.chart;
    std::vector<double> res(rhs.size());
    for (std::size_t q = 0; q < res.size(); ++q) res[q] = std::abs(d.excess[q] - rhs[q]) / std::abs(1.0 + rhs[q]);

    BarrierReport rep;
    rep.amplitude = d.amplitude;
    rep.halvings = d.halvings;
    rep.margin = d.margin;
    rep.expected_order = spec.i + spec.j + 1;
    rep.crossover_radius = dominance_crossover(spec);
    const std::size_t S = c.row_size();
    for (int r = 0; r < c.radial_count(); ++r) {
        double m = 0.0;
        for (std::size_t q = r * S; q < (r + 1) * S; ++q) m = std::max(m, res[q]);
        rep.radius.push_back(c.radius_at(r));
        rep.residual.push_back(m);
    }
    rep.fit = decay_fit(ScalarField::real(spec.model.chart, std::move(res)), spec.model, spec.window);
    if (rep.fit.identically_zero) {
        rep.order = std::numeric_limits<double>::infinity();
        rep.status = BarrierStatus::pass;
        return rep;
    }
    rep.order = rep.fit.a;
    if (!rep.fit.resolved)
        rep.status = BarrierStatus::inconclusive;
    else
        rep.status = rep.order >= rep.expected_order - 0.15 ? BarrierStatus::pass : BarrierStatus::fail;
    return rep;
}

DecayBound decay_bound_check(const ScalarField& u, int m, const DivisorModel& model) {
    if (m < 1) throw ConfigError("decay_bound_check: m must be a positive integer");
    if (!u.is_real()) throw FieldError("decay_bound_check: u must be real");
    require_same_chart(u.chart(), *model.chart, "decay_bound_check");
    const ScalarField s = model.section_norm();
    const GridChart& c = *model.chart;
    DecayBound out;
    out.ratio = ScalarField::sample(model.chart, [&](std::size_t q) { return std::abs(u[q]) / std::pow(s[q], m + 1); });
    const int R = c.radial_count();
    const std::size_t S = c.row_size();
    bool finite = true;
    for (int sh = 0; sh < kDecayShells; ++sh) {
        // shell 0 holds the outermost rows
        const int hi = R - sh * R / kDecayShells, lo = R - (sh + 1) * R / kDecayShells;
        double mx = 0.0;
        for (std::size_t q = lo * S; q < hi * S; ++q) {
            if (!std::isfinite(out.ratio[q])) finite = false;
            mx = std::max(mx, out.ratio[q]);
        }
        out.shells.push_back(mx);
        out.constant = std::max(out.constant, mx);
    }
    out.pass = finite && std::isfinite(out.constant);
    for (int sh = 1; sh < kDecayShells && out.pass; ++sh)
        if (out.shells[sh] > out.shells[sh - 1] * (1.0 + 1e-9)) out.pass = false;
    return out;
}

nlohmann::json to_json(const BarrierReport& r) {
    nlohmann::json j;
    j["status"] = to_string(r.status);
    j["order"] = std::isfinite(r.order) ? nlohmann::json(r.order) : nlohmann::json("inf");
    j["expected_order"] = r.expected_order;
    j["amplitude"] = r.amplitude;
    j["halvings"] = r.halvings;
    j["margin"] = r.margin;
    j["crossover_radius"] = r.crossover_radius;
    j["fit"] = {{"a", r.fit.a},
                {"b", r.fit.b},
                {"constant", r.fit.constant},
                {"residual", r.fit.residual},
                {"row_lo", r.fit.row_lo},
                {"row_hi", r.fit.row_hi},
                {"r_lo", r.fit.r_lo},
                {"r_hi", r.fit.r_hi},
                {"resolved", r.fit.resolved},
                {"identically_zero", r.fit.identically_zero}};
    j["radius"] = r.radius;
    j["residual"] = r.residual;
    return j;
}

std::string residual_csv(const BarrierReport& r) {
    std::ostringstream out;
    out.precision(17);
    out << "radius,residual\n";
    for (std::size_t i = 0; i < r.radius.size(); ++i) out << r.radius[i] << ',' << r.residual[i] << '\n';
    return out.str();
}

}  // namespace kahler
