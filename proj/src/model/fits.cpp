#include "kahler/model.hpp"

#include "kahler/tensor.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <limits>

namespace kahler {

namespace {

struct Rows {
    int lo, hi;
};

Rows window_rows(const GridChart& c, const FitWindow& w) {
    w.validate();
    const int R = c.radial_count();
    const double t0 = c.axis(0).lo, t1 = c.axis(0).hi;
    Rows rows{R, 0};
    for (int r = 0; r < R; ++r) {
        const double t = c.axis(0).coordinate(r);
        const double f = (t - t0) / (t1 - t0);
        if (f < w.inner - 1e-12 || f > w.outer + 1e-12) continue;
        if (r < w.skip || r >= R - w.skip) continue;
        rows.lo = std::min(rows.lo, r);
        rows.hi = std::max(rows.hi, r + 1);
    }
    if (rows.hi - rows.lo < 4) throw ConfigError("fit window holds fewer than 4 radial rows");
    return rows;
}

/// Integral from each node to the last one, 4-point interval rule.
std::vector<double> tail_integral(const std::vector<double>& f, double h) {
    const int m = static_cast<int>(f.size());
    std::vector<double> seg(m - 1);
    for (int i = 0; i + 1 < m; ++i) {
        if (i == 0)
            seg[i] = 9 * f[0] + 19 * f[1] - 5 * f[2] + f[3];
        else if (i == m - 2)
            seg[i] = f[m - 4] - 5 * f[m - 3] + 19 * f[m - 2] + 9 * f[m - 1];
        else
            seg[i] = -f[i - 1] + 13 * f[i] + 13 * f[i + 1] - f[i + 2];
        seg[i] *= h / 24.0;
    }
    std::vector<double> out(m, 0.0);
    for (int i = m - 2; i >= 0; --i) out[i] = out[i + 1] + seg[i];
    return out;
}

/// Offset inside a radial row of the reference line: angle index 0, fiber
/// node nearest the origin.
std::size_t reference_offset(const GridChart& c) {
    std::size_t q = 0;
    for (int a = 2; a < c.axis_count(); ++a) {
        const Axis& ax = c.axis(a);
        int best = 0;
        for (int i = 1; i < ax.count; ++i)
            if (std::abs(ax.coordinate(i)) < std::abs(ax.coordinate(best))) best = i;
        q += static_cast<std::size_t>(best) * c.stride(a);
    }
    return q;
}

std::vector<double> radial_length(const MetricField& g) {
    const GridChart& c = g.chart();
    const std::size_t q0 = reference_offset(c);
    std::vector<double> rho(c.radial_count());
    for (int r = 0; r < c.radial_count(); ++r) {
        const std::size_t node = static_cast<std::size_t>(r) * c.row_size() + q0;
        rho[r] = std::sqrt(g.form().diag(0)[node]) * c.radius(node);
    }
    return tail_integral(rho, c.axis(0).spacing());
}

void require_log_polar(const GridChart& c, const char* where) {
    if (!c.log_polar()) throw ChartError(std::string(where) + ": needs a log-polar chart");
}

}  // namespace

void FitWindow::validate() const {
    if (!(inner >= 0.0 && inner < outer && outer <= 1.0)) throw ConfigError("fit window: need 0 <= inner < outer <= 1");
    if (skip < 0) throw ConfigError("fit window: skip must be >= 0");
}

DecayFit decay_fit(const ScalarField& field, const DivisorModel& model, const FitWindow& window) {
    const GridChart& c = *model.chart;
    require_log_polar(c, "decay_fit");
    require_same_chart(field.chart(), c, "decay_fit");
    const Rows rows = window_rows(c, window);
    const ScalarField s = model.section_norm();
    const std::size_t S = c.row_size();

    std::vector<double> x1, x2, y;
    DecayFit fit;
    fit.row_lo = rows.lo;
    fit.row_hi = rows.hi;
    fit.r_lo = c.radius_at(rows.lo);
    fit.r_hi = c.radius_at(rows.hi - 1);
    for (int r = rows.lo; r < rows.hi; ++r) {
        double fmax = 0.0, smax = 0.0;
        for (std::size_t q = r * S; q < (r + 1) * S; ++q) {
            fmax = std::max(fmax, std::abs(field.value(q)));
            smax = std::max(smax, s[q]);
        }
        if (fmax == 0.0 || !std::isfinite(fmax)) {
            ++fit.excluded_rows;
            continue;
        }
        x1.push_back(std::log(smax));
        x2.push_back(std::log(-2.0 * std::log(smax)));
        y.push_back(std::log(fmax));
    }
    if (y.empty()) {
        fit.identically_zero = true;
        return fit;
    }
    if (y.size() < 4) throw FieldError("decay_fit: fewer than 4 usable rows in the window");
    Eigen::MatrixXd A(y.size(), 3);
    Eigen::VectorXd b(y.size());
    for (std::size_t i = 0; i < y.size(); ++i) {
        A(i, 0) = 1.0;
        A(i, 1) = x1[i];
        A(i, 2) = x2[i];
        b(i) = y[i];
    }
    const Eigen::VectorXd sol = A.colPivHouseholderQr().solve(b);
    fit.constant = sol(0);
    fit.a = sol(1);
    fit.b = sol(2);
    fit.residual = std::sqrt((A * sol - b).squaredNorm() / static_cast<double>(y.size()));
    fit.resolved = fit.residual <= kFitResidualLimit;
    return fit;
}

DecayFit curvature_decay_profile(const MetricField& g, const DivisorModel& model, const FitWindow& window) {
    require_same_chart(g.chart(), *model.chart, "curvature_decay_profile");
    const ScalarField R = curvature_norm(g);
    if (R.sup_abs() < 1e-6) {
        DecayFit fit;
        const Rows rows = window_rows(*model.chart, window);
        fit.row_lo = rows.lo;
        fit.row_hi = rows.hi;
        fit.r_lo = model.chart->radius_at(rows.lo);
        fit.r_hi = model.chart->radius_at(rows.hi - 1);
        fit.identically_zero = true;
        fit.residual = R.sup_abs();
        return fit;
    }
    return decay_fit(R, model, window);
}

DecayFit curvature_decay_profile(const DivisorModel& model, const FitWindow& window) {
    return curvature_decay_profile(omega_phi(model), model, window);
}

RadialProfile completeness_profile(const MetricField& g, const DivisorModel& model, const FitWindow& window) {
    const GridChart& c = g.chart();
    require_log_polar(c, "completeness_profile");
    require_same_chart(c, *model.chart, "completeness_profile");
    const Rows rows = window_rows(c, window);
    RadialProfile p;
    p.length = radial_length(g);
    for (int r = 0; r < c.radial_count(); ++r) p.r.push_back(c.radius_at(r));

    const double grow = p.length[rows.lo] - p.length[rows.hi - 1];
    p.bounded = !(grow > 1e-2 * p.length[rows.lo]);

    // length = A s^p + B, s = -log r: linear in (A, B) for fixed p
    std::vector<double> s, y;
    for (int r = rows.lo; r < rows.hi; ++r) {
        s.push_back(-std::log(p.r[r]));
        y.push_back(p.length[r]);
    }
    const double scale = *std::max_element(y.begin(), y.end());
    auto solve = [&](double e, double& A, double& B) {
        double sx = 0, sy = 0, sxx = 0, sxy = 0;
        const double m = static_cast<double>(y.size());
        for (std::size_t i = 0; i < y.size(); ++i) {
            const double x = std::pow(s[i], e);
            sx += x;
            sy += y[i];
            sxx += x * x;
            sxy += x * y[i];
        }
        const double det = m * sxx - sx * sx;
        A = det != 0.0 ? (m * sxy - sx * sy) / det : 0.0;
        B = (sy - A * sx) / m;
        double r2 = 0.0;
        for (std::size_t i = 0; i < y.size(); ++i) r2 += std::pow(A * std::pow(s[i], e) + B - y[i], 2);
        return std::sqrt(r2 / m) / (scale > 0 ? scale : 1.0);
    };
    double best = 0.05, best_r = std::numeric_limits<double>::infinity(), A, B;
    for (double e = 0.05; e <= 3.0 + 1e-12; e += 0.05) {
        const double res = solve(e, A, B);
        if (res < best_r) {
            best_r = res;
            best = e;
        }
    }
    double lo = std::max(1e-3, best - 0.05), hi = best + 0.05;  // golden section
    const double g0 = 0.5 * (std::sqrt(5.0) - 1.0);
    for (int it = 0; it < 80; ++it) {
        const double m1 = hi - g0 * (hi - lo), m2 = lo + g0 * (hi - lo);
        if (solve(m1, A, B) < solve(m2, A, B))
            hi = m2;
        else
            lo = m1;
    }
    p.exponent = 0.5 * (lo + hi);
    p.residual = solve(p.exponent, p.coefficient, p.offset);
    return p;
}

VolumeProfile volume_growth_profile(const MetricField& g, const DivisorModel& model, const FitWindow& window) {
    const GridChart& c = g.chart();
    require_log_polar(c, "volume_growth_profile");
    require_same_chart(c, *model.chart, "volume_growth_profile");
    const Rows rows = window_rows(c, window);
    const std::vector<double> length = radial_length(g);
    const ScalarField d = det(g.form());
    const std::size_t S = c.row_size();
    std::vector<double> shell(c.radial_count(), 0.0);
    for (int r = 0; r < c.radial_count(); ++r) {
        const double rr = c.radius_at(r);
        for (std::size_t q = 0; q < S; ++q) {
            double w = 1.0;
            for (int a = 1; a < c.axis_count(); ++a) w *= c.weights(a)[c.index(q, a)];
            shell[r] += w * d[r * S + q] * rr * rr;
        }
    }
    VolumeProfile v;
    v.volume = tail_integral(shell, c.axis(0).spacing());
    v.radius = length;
    const double grow = v.volume[rows.lo] - v.volume[rows.hi - 1];
    v.bounded = !(grow > 1e-2 * v.volume[rows.lo]);

    const int m = rows.hi - rows.lo;
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    for (int r = rows.lo; r < rows.hi; ++r) {
        const double x = std::log(v.radius[r]), y = std::log(v.volume[r]);
        sx += x;
        sy += y;
        sxx += x * x;
        sxy += x * y;
    }
    const double det2 = m * sxx - sx * sx;
    v.alpha = (m * sxy - sx * sy) / det2;
    const double icpt = (sy - v.alpha * sx) / m;
    double r2 = 0.0;
    for (int r = rows.lo; r < rows.hi; ++r)
        r2 += std::pow(icpt + v.alpha * std::log(v.radius[r]) - std::log(v.volume[r]), 2);
    v.residual = std::sqrt(r2 / m);
    return v;
}

}  // namespace kahler
