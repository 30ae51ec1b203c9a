#include "kahler/tensor.hpp"

#include "kahler/calculus.hpp"
#include "kahler/error.hpp"
#include "kahler/spectral.hpp"
#include "node_algebra.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

namespace kahler {

namespace {

constexpr int kSlabRows = 16;

Form11Field ddbar_torus(const ScalarField& phi, double max_tail) {
    const GridChart& chart = phi.chart();
    const int n = chart.n();
    TorusSpectral fft(chart);
    const std::size_t N = fft.size();
    std::vector<cd> spec(N), work(N), out(N);
    fft.forward(phi.re().data(), spec.data());
    if (max_tail >= 0.0) {
        const double ratio = fft.tail_ratio(spec.data());
        if (ratio > max_tail) {
            std::ostringstream msg;
            msg << "ddbar: input not resolved on this grid (spectral tail ratio " << ratio << ")";
            throw ResolutionError(msg.str(), -1, ratio);
        }
    }
    Form11Field h(phi.chart_ptr(), n);
    for (int c = 0; c < n; ++c)
        for (int d = c; d < n; ++d) {
            for (std::size_t k = 0; k < N; ++k) work[k] = spec[k] * fft.dz_symbol(k, c, false) * fft.dz_symbol(k, d, true);
            fft.inverse(work.data(), out.data());
            if (c == d) {
                auto& dst = h.mutable_diag(c);
                for (std::size_t k = 0; k < N; ++k) dst[k] = out[k].real();
            } else {
                std::copy(out.begin(), out.end(), h.mutable_off(c, d).begin());
            }
        }
    return h;
}

void check_tail(const ScalarField& phi, double max_tail) {
    if (max_tail < 0.0) return;
    const GridChart& chart = phi.chart();
    Calculus calc(chart);
    for (int a = 0; a < chart.axis_count(); ++a) {
        if (!chart.periodic(a)) continue;
        const double ratio = calc.tail_ratio(phi.re().data(), 1, a);
        if (ratio > max_tail) {
            std::ostringstream msg;
            msg << "ddbar: input not resolved along axis " << a << " (spectral tail ratio " << ratio << ")";
            throw ResolutionError(msg.str(), a, ratio);
        }
    }
}

}  // namespace

Form11Field ddbar(const ScalarField& phi, const DdbarOptions& opt) {
    if (!phi.is_real()) throw FieldError("ddbar: potential must be real-tagged");
    const GridChart& chart = phi.chart();
    if (chart.all_periodic()) return ddbar_torus(phi, opt.max_tail_ratio);
    check_tail(phi, opt.max_tail_ratio);
    const int n = chart.n();
    Calculus calc(chart);
    Form11Field h(phi.chart_ptr(), n);
    const std::size_t S = chart.row_size();
    for (RowRange out : calc.slabs(kSlabRows)) {
        const RowRange in = calc.halo(out);
        const double* src = phi.re().data() + static_cast<std::size_t>(in.lo) * S;
        for (int c = 0; c < n; ++c) {
            calc.laplace_pair(src, 1, in, h.mutable_diag(c).data() + out.lo * S, out, c);
            for (int d = c + 1; d < n; ++d) calc.mixed(src, 1, in, h.mutable_off(c, d).data() + out.lo * S, out, c, d);
        }
    }
    return h;
}

double spectral_tail_ratio(const ScalarField& phi) {
    const GridChart& chart = phi.chart();
    if (chart.all_periodic()) {
        TorusSpectral fft(chart);
        std::vector<cd> spec(fft.size());
        fft.forward(phi.re().data(), spec.data());
        return fft.tail_ratio(spec.data());
    }
    Calculus calc(chart);
    double r = 0.0;
    for (int a = 0; a < chart.axis_count(); ++a)
        if (chart.periodic(a)) r = std::max(r, calc.tail_ratio(phi.re().data(), 1, a));
    return r;
}

ScalarField det(const Form11Field& h) {
    std::vector<double> d(h.size());
    for (std::size_t i = 0; i < d.size(); ++i) d[i] = detail::det_at(h, i);
    return ScalarField::real(h.chart_ptr(), std::move(d));
}

ScalarField log_det(const MetricField& g) {
    const Form11Field& h = g.form();
    std::vector<double> v(h.size());
    for (std::size_t i = 0; i < v.size(); ++i) {
        const double d = detail::det_at(h, i);
        v[i] = std::log(d);
        if (!std::isfinite(v[i])) {
            std::ostringstream msg;
            msg << "log det not finite (det = " << d << ") at node " << i;
            throw DegeneracyError(msg.str(), i);
        }
    }
    return ScalarField::real(g.chart_ptr(), std::move(v));
}

Form11Field ricci_form(const MetricField& g) {
    return ddbar(log_det(g), DdbarOptions{-1.0}).scaled(-1.0);
}

Form11Field first_chern_form(const MetricField& g) { return ricci_form(g); }

ScalarField trace(const Form11Field& a, const MetricField& g) {
    require_same_chart(a.chart(), g.chart(), "trace");
    std::vector<double> t(a.size());
    for (std::size_t i = 0; i < t.size(); ++i) t[i] = detail::trace_at(g.form(), a, i);
    return ScalarField::real(g.chart_ptr(), std::move(t));
}

ScalarField ma_density(const MetricField& omega, const ScalarField& u) {
    require_same_chart(omega.chart(), u.chart(), "ma_density");
    const Form11Field du = ddbar(u);
    const std::size_t N = du.size();
    std::vector<double> dens(N), margin(N);
    double worst = std::numeric_limits<double>::infinity();
    std::size_t at = 0;
    for (std::size_t i = 0; i < N; ++i) {
        detail::perturbed_at(omega.form(), du, i, dens[i], margin[i]);
        if (!(margin[i] >= worst)) {
            worst = margin[i];
            at = i;
        }
    }
    if (!(worst >= kMinMargin)) {
        std::ostringstream msg;
        msg << "ma_density: omega + ddbar u not positive (min eigenvalue " << worst << " at node " << at << ")";
        throw PositivityError(msg.str(), at, worst, std::move(margin));
    }
    return ScalarField::real(omega.chart_ptr(), std::move(dens));
}

ScalarField metric_laplacian(const MetricField& g, const ScalarField& v) {
    require_same_chart(g.chart(), v.chart(), "metric_laplacian");
    return trace(ddbar(v), g);
}

double integrate(const ScalarField& f, const MetricField& g) {
    require_same_chart(f.chart(), g.chart(), "integrate");
    if (!f.is_real()) throw FieldError("integrate: integrand must be real-tagged");
    const GridChart& c = g.chart();
    double s = 0.0;
    for (std::size_t i = 0; i < f.size(); ++i) s += c.node_weight(i) * f[i] * detail::det_at(g.form(), i);
    return s;
}

double chart_volume(const MetricField& g) { return integrate(ScalarField::constant(g.chart_ptr(), 1.0), g); }

ScalarField positivity_margin(const Form11Field& h) {
    std::vector<double> m(h.size());
    for (std::size_t i = 0; i < m.size(); ++i) m[i] = min_eigenvalue(h.matrix(i));
    return ScalarField::real(h.chart_ptr(), std::move(m));
}

Form11Field ricci_contraction(const CurvatureField& r, const MetricField& g) {
    const int n = g.n();
    Form11Field out(g.chart_ptr(), n);
    for (std::size_t node = 0; node < out.size(); ++node) {
        const SmallMatrix Gi = g.matrix(node).inverse();
        SmallMatrix ric = SmallMatrix::Zero(n, n);
        for (int k = 0; k < n; ++k)
            for (int l = 0; l < n; ++l)
                for (int i = 0; i < n; ++i)
                    for (int j = 0; j < n; ++j) ric(k, l) += Gi(j, i) * r.component(node, i, j, k, l);
        out.set(node, ric);
    }
    return out;
}

}  // namespace kahler
