#include "kahler/model.hpp"

#include "kahler/calculus.hpp"
#include "kahler/tensor.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

namespace kahler {

namespace {

double c_k(int k) { return std::pow(static_cast<double>(k), 1.0 + 1.0 / k) / (k + 1); }

/// c_k ddbar L^{(k+1)/k} at rank k.
Form11Field rank_form(const DivisorModel& model, int k) {
    const ScalarField L = model.log_term();
    if (!(L.min() > 0.0)) throw FieldError("model: -log||S||_phi^2 must be positive on the chart");
    const double c = c_k(k), e = (k + 1.0) / k;
    return ddbar(ScalarField::sample(model.chart, [&](std::size_t i) { return c * std::pow(L[i], e); }));
}

/// (kL)^{1/k} omega_F.
Form11Field scaled_fiber(const DivisorModel& model, const ScalarField& L) {
    Form11Field out = *model.omega_fiber;
    const int n = model.n, k = model.k;
    for (std::size_t q = 0; q < out.size(); ++q) {
        const double s = std::pow(k * L[q], 1.0 / k);
        for (int i = 0; i < n; ++i) {
            out.mutable_diag(i)[q] *= s;
            for (int j = i + 1; j < n; ++j) out.mutable_off(i, j)[q] *= s;
        }
    }
    return out;
}

double max_abs(const SmallMatrix& m) { return m.cwiseAbs().maxCoeff(); }

}  // namespace

SmallMatrix w_frame(const Form11Field& h, std::size_t node) {
    SmallMatrix m = h.matrix(node);
    if (h.chart().log_polar()) {
        const cd z = h.chart().z(node, 0);
        m.row(0) *= z;
        m.col(0) *= std::conj(z);
    }
    return m;
}

MetricField omega_phi(const DivisorModel& model) {
    model.validate();
    if (!model.ample()) throw FieldError("omega_phi: needs the ample case k = n (use omega_phi_semiample)");
    return MetricField(rank_form(model, model.n));
}

SemiAmpleForm omega_phi_semiample(const DivisorModel& model, double tolerance) {
    model.validate();
    const int n = model.n, k = model.k;
    SemiAmpleForm out;
    out.form = rank_form(model, k);

    const ScalarField L = model.log_term();
    const Form11Field ddL = ddbar(L);
    Calculus calc(*model.chart);
    std::vector<std::vector<cd>> dL(n);
    for (int c = 0; c < n; ++c) dL[c] = calc.dz(L.re(), c, false);
    out.expanded = Form11Field(model.chart, n);
    for (std::size_t q = 0; q < L.size(); ++q) {
        const double kl = k * L[q], s = std::pow(kl, 1.0 / k);
        SmallMatrix m = ddL.matrix(q);
        for (int i = 0; i < n; ++i)
            for (int j = 0; j < n; ++j) m(i, j) = s * (m(i, j) + dL[i][q] * std::conj(dL[j][q]) / kl);
        out.expanded.set(q, m);
    }

    out.rank = n;
    for (std::size_t q = 0; q < L.size(); ++q) {
        const SmallMatrix d = w_frame(out.form, q), e = w_frame(out.expanded, q);
        const double scale = max_abs(d);
        if (scale > 0.0) out.agreement = std::max(out.agreement, max_abs(d - e) / scale);
        Eigen::SelfAdjointEigenSolver<SmallMatrix> es(d, Eigen::EigenvaluesOnly);
        const auto ev = es.eigenvalues();
        const double top = ev.cwiseAbs().maxCoeff();
        int rank = 0;
        for (int i = 0; i < n; ++i)
            if (std::abs(ev(i)) > 1e-8 * top) ++rank;
        out.rank = std::min(out.rank, rank);
        for (int i = 0; i < n - k; ++i) out.small_eigenvalue = std::max(out.small_eigenvalue, std::abs(ev(i)) / top);
    }
    if (out.agreement > tolerance) {
        std::ostringstream msg;
        msg << "omega_phi_semiample: direct and expanded forms disagree by " << out.agreement
            << " (tolerance " << tolerance << "); radial resolution too low?";
        throw FieldError(msg.str());
    }
    return out;
}

MetricField eta_phi(const DivisorModel& model) {
    model.validate();
    if (model.ample()) return MetricField(rank_form(model, model.n));
    return MetricField(rank_form(model, model.k) + scaled_fiber(model, model.log_term()));
}

long binomial(int n, int k) {
    if (k < 0 || k > n) return 0;
    long b = 1;
    for (int i = 1; i <= k; ++i) b = b * (n - k + i) / i;
    return b;
}

cd top_power_coefficient(const SmallMatrix& a, const SmallMatrix& b, int k) {
    const int n = static_cast<int>(a.rows());
    if (k < 0 || k > n) return 0.0;
    if (n == 1) return k == 1 ? a(0, 0) : b(0, 0);
    if (n == 2) {
        if (k == 2) return a.determinant();
        if (k == 0) return b.determinant();
        return a(0, 0) * b(1, 1) + a(1, 1) * b(0, 0) - a(0, 1) * b(1, 0) - a(1, 0) * b(0, 1);
    }
    // p(s) = det(A + s B) sampled at s = 0..n, Vandermonde solve
    Eigen::MatrixXcd V(n + 1, n + 1);
    Eigen::VectorXcd p(n + 1);
    for (int s = 0; s <= n; ++s) {
        for (int e = 0; e <= n; ++e) V(s, e) = std::pow(static_cast<double>(s), e);
        p(s) = (a + static_cast<double>(s) * b).determinant();
    }
    const Eigen::VectorXcd coef = V.partialPivLu().solve(p);
    return coef(n - k);
}

TopPowerCheck eta_top_power_check(const DivisorModel& model, double min_margin) {
    const MetricField eta = eta_phi(model);
    TopPowerCheck out;
    const Form11Field A = model.ample() ? eta.form() : rank_form(model, model.k);
    const Form11Field B = model.ample() ? Form11Field(model.chart, model.n) : scaled_fiber(model, model.log_term());
    for (std::size_t q = 0; q < A.size(); ++q) {
        if (!(eta.min_eigenvalues()[q] > min_margin)) continue;
        const SmallMatrix e = w_frame(eta.form(), q);
        const double lhs = e.determinant().real();
        const cd rhs = top_power_coefficient(w_frame(A, q), w_frame(B, q), model.k);
        out.max_relative_defect = std::max(out.max_relative_defect, std::abs(lhs - rhs) / std::abs(lhs));
        ++out.nodes_checked;
    }
    return out;
}

FPhi f_phi_detailed(const DivisorModel& model, bool subtract_limit) {
    const MetricField form = model.ample() ? omega_phi(model) : eta_phi(model);
    const ScalarField s = model.section_norm();
    const ScalarField ld = log_det(form);
    ScalarField ld_ref = model.omega_ref ? log_det(*model.omega_ref) : ld;
    std::vector<double> f(s.size());
    for (std::size_t q = 0; q < f.size(); ++q)
        f[q] = -2.0 * std::log(s[q]) - (ld[q] - ld_ref[q]) - model.Psi[q];

    // angular mean over the innermost radius
    const GridChart& c = *model.chart;
    double num = 0.0, den = 0.0;
    for (std::size_t q = 0; q < c.row_size(); ++q) {
        double w = 1.0;
        for (int a = 1; a < c.axis_count(); ++a) w *= c.weights(a)[c.index(q, a)];
        num += w * f[q];
        den += w;
    }
    FPhi out;
    out.limit = num / den;
    if (subtract_limit)
        for (double& v : f) v -= out.limit;
    out.f = ScalarField::real(model.chart, std::move(f));
    return out;
}

ScalarField f_phi(const DivisorModel& model) { return f_phi_detailed(model, true).f; }

double closedness_defect(const Form11Field& h, int skip_rows) {
    const GridChart& c = h.chart();
    const int n = h.n();
    if (n == 1) return 0.0;
    const std::size_t N = h.size();
    const bool polar = c.log_polar();
    // full w-frame coefficient arrays
    std::vector<std::vector<cd>> hw(n * n, std::vector<cd>(N));
    for (std::size_t q = 0; q < N; ++q) {
        const SmallMatrix m = w_frame(h, q);
        for (int i = 0; i < n; ++i)
            for (int j = 0; j < n; ++j) hw[i * n + j][q] = m(i, j);
    }
    Calculus calc(c);
    auto dw = [&](const std::vector<cd>& f, int k) {
        std::vector<cd> d = calc.dz(f, k, false);
        if (polar && k == 0)
            for (std::size_t q = 0; q < N; ++q) d[q] *= c.z(q, 0);
        return d;
    };
    std::vector<double> scale(N, 0.0);
    for (std::size_t q = 0; q < N; ++q)
        for (int e = 0; e < n * n; ++e) scale[q] = std::max(scale[q], std::abs(hw[e][q]));
    const std::size_t lo = static_cast<std::size_t>(skip_rows) * c.row_size();
    const std::size_t hi = c.log_polar() || !c.all_periodic() ? N - lo : N;
    double worst = 0.0;
    for (int i = 0; i < n; ++i)
        for (int k = i + 1; k < n; ++k)
            for (int j = 0; j < n; ++j) {
                const auto a = dw(hw[i * n + j], k), b = dw(hw[k * n + j], i);
                for (std::size_t q = lo; q < hi; ++q)
                    if (scale[q] > 0.0) worst = std::max(worst, std::abs(a[q] - b[q]) / scale[q]);
            }
    return worst;
}

}  // namespace kahler
