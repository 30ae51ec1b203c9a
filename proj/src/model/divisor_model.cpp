#include "kahler/model.hpp"

#include <cmath>
#include <sstream>

namespace kahler {

namespace {

void require(bool ok, const std::string& what) {
    if (!ok) throw ConfigError(what);
}

}  // namespace

// ------------------------------------------------------------------ model

ScalarField DivisorModel::section_norm() const {
    return ScalarField::sample(chart, [&](std::size_t i) { return chart->radius(i) * std::exp(-0.5 * psi[i]); });
}

ScalarField DivisorModel::log_term() const {
    return ScalarField::sample(chart,
                               [&](std::size_t i) { return -2.0 * std::log(chart->radius(i)) + psi[i] + phi[i]; });
}

void DivisorModel::validate() const {
    require(chart != nullptr, "model: missing chart");
    require(chart->log_polar(), "model: chart must be a log-polar annulus or product");
    require(chart->n() == n, "model: chart dimension differs from n");
    require(k >= 1 && k <= n, "model: rank k must satisfy 1 <= k <= n");
    for (const ScalarField* f : {&psi, &phi, &Psi}) {
        require(f->size() == chart->node_count(), "model: psi, phi and Psi must live on the chart");
        require_same_chart(f->chart(), *chart, "model");
        if (!f->is_real()) throw FieldError("model: psi, phi and Psi must be real");
    }
    const ScalarField s = section_norm();
    if (!(s.max() < 1.0)) {
        std::ostringstream msg;
        msg << "model: ||S|| must stay below 1 (max " << s.max() << ")";
        throw FieldError(msg.str());
    }
    if (omega_ref) require_same_chart(omega_ref->chart(), *chart, "model reference");
    if (k < n) {
        if (!omega_fiber) throw ConfigError("model: semi-ample case needs a fiber form");
        const Form11Field& F = *omega_fiber;
        require(F.n() == n, "model: fiber form must be n x n");
        require_same_chart(F.chart(), *chart, "model fiber form");
        const std::size_t row = chart->row_size();
        const std::size_t slice = row / static_cast<std::size_t>(chart->axis(1).count);
        for (std::size_t node = 0; node < F.size(); ++node) {
            for (int j = 0; j < n; ++j)
                if (F.coeff(node, 0, j) != cd(0.0)) throw FieldError("model: fiber form has a z_1 component");
        }
        // every (radius, angle) slice carries the same fiber form
        const int R = chart->radial_count();
        for (int r = 0; r < R; r += std::max(1, R / 7))
            for (std::size_t a = 0; a < row; a += slice * std::max<std::size_t>(1, row / slice / 5))
                for (std::size_t q = 0; q < slice; q += std::max<std::size_t>(1, slice / 11)) {
                    const std::size_t node = r * row + a + q;
                    const SmallMatrix d = F.matrix(node) - F.matrix(q);
                    if (d.cwiseAbs().maxCoeff() > 1e-12 * (1.0 + F.matrix(q).cwiseAbs().maxCoeff()))
                        throw FieldError("model: fiber form differs between slices");
                }
    }
}

// ------------------------------------------------------------------ presets

void ModelSpec::validate() const {
    require(n >= 1 && n <= 4, "model spec: n must lie in [1, 4]");
    require(k >= 0 && k <= n, "model spec: k must lie in [0, n]");
    require(r_min > 0.0 && r_min < r_max && r_max < 1.0, "model spec: need 0 < r_min < r_max < 1");
    require(radial >= 8 && angular >= 8 && (n == 1 || fiber_resolution >= 8), "model spec: resolution must be >= 8");
    require(fiber_extent > 0.0, "model spec: fiber extent must be positive");
    require(fiber_scale > 0.0, "model spec: fiber scale must be positive");
    require(n > 1 || fiber_weight == FiberWeight::none, "model spec: fiber weight needs n >= 2");
}

DivisorModel make_model(const ModelSpec& spec) {
    spec.validate();
    GridChart c = spec.n == 1 ? GridChart::annulus(spec.r_min, spec.r_max, spec.radial, spec.angular)
                              : GridChart::product(spec.r_min, spec.r_max, spec.radial, spec.angular, spec.n - 1,
                                                   spec.fiber_resolution, spec.fiber_kind, spec.fiber_extent);
    if (spec.fd_order != c.fd_order()) c = c.with_fd_order(spec.fd_order);
    DivisorModel m;
    m.chart = share(std::move(c));
    m.n = spec.n;
    m.k = spec.k == 0 ? spec.n : spec.k;
    const GridChart& ch = *m.chart;
    auto fiber_sq = [&](std::size_t i) {
        double s = 0.0;
        for (int c2 = 1; c2 < spec.n; ++c2) s += std::norm(ch.z(i, c2));
        return s;
    };
    m.psi = ScalarField::sample(m.chart, [&](std::size_t i) {
        switch (spec.fiber_weight) {
            case FiberWeight::flat: return spec.kappa * fiber_sq(i);
            case FiberWeight::spherical: return std::log1p(fiber_sq(i));
            case FiberWeight::none: break;
        }
        return 0.0;
    });
    m.phi = ScalarField::sample(m.chart, [&](std::size_t i) {
        const double r = ch.radius(i);
        return spec.phi_shift + spec.phi_amplitude * r * r;
    });
    if (m.k < m.n) {
        Form11Field F(m.chart, m.n);
        for (int c2 = 1; c2 < m.n; ++c2) std::fill(F.mutable_diag(c2).begin(), F.mutable_diag(c2).end(), spec.fiber_scale);
        m.omega_fiber = std::move(F);
    }
    if (spec.reference == Reference::euclidean) {
        m.omega_ref = MetricField::flat(m.chart);
        m.Psi = ScalarField::constant(m.chart, 0.0);
    } else {
        // omega' = the model form itself, Psi = -log||S||^2: f_phi vanishes
        const ScalarField s = m.section_norm();
        m.Psi = ScalarField::sample(m.chart, [&](std::size_t i) { return -2.0 * std::log(s[i]); });
    }
    m.validate();
    return m;
}

// ------------------------------------------------------------------ expansions

void LogExpansion::validate() const {
    for (const auto& t : terms) {
        if (t.i < 0 || t.j < 0 || t.i + t.j < 1) throw ConfigError("expansion: need i, j >= 0 and i + j >= 1");
        if (t.l < 0) throw ConfigError("expansion: log power must be >= 0");
    }
}

ScalarField evaluate_expansion(const LogExpansion& e, const DivisorModel& model) {
    e.validate();
    const GridChart& c = *model.chart;
    std::vector<double> out(c.node_count(), 0.0);
    const ScalarField s = model.section_norm();
    for (const auto& t : e.terms) {
        require_same_chart(t.theta.chart(), c, "evaluate_expansion");
        for (std::size_t q = 0; q < out.size(); ++q) {
            const cd z = c.z(q, 0);
            const cd v = std::pow(z, t.i) * std::pow(std::conj(z), t.j) * t.theta.value(q);
            const double lg = t.l == 0 ? 1.0 : std::pow(-2.0 * std::log(s[q]), t.l);
            out[q] += 2.0 * v.real() * lg;
        }
    }
    return ScalarField::real(model.chart, std::move(out));
}

}  // namespace kahler
