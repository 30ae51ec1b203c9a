#include <doctest.h>

#include "kahler/calculus.hpp"
#include "kahler/error.hpp"
#include "kahler/serialize.hpp"
#include "kahler/stencil.hpp"
#include "kahler/tensor.hpp"
#include "oracles.hpp"

#include <cmath>
#include <cstdio>
#include <filesystem>

using namespace kahler;
using oracle::pi;

namespace {

ChartPtr unit_torus(int n, int res) { return share(GridChart::torus(n, res)); }

std::vector<double> coords(const GridChart& c, std::size_t node) {
    std::vector<double> x(c.axis_count());
    for (int a = 0; a < c.axis_count(); ++a) x[a] = c.coordinate(node, a);
    return x;
}

ScalarField trig(const ChartPtr& c, const oracle::RandomTrig& t) {
    return ScalarField::sample(c, [&](std::size_t i) { return t(coords(*c, i)); });
}

MetricField conformal_torus(const ChartPtr& c, double amp) {
    Form11Field h(c, c->n());
    for (std::size_t i = 0; i < c->node_count(); ++i) {
        const double e = std::exp(amp * std::cos(2 * pi * c->coordinate(i, 0)));
        for (int k = 0; k < c->n(); ++k) h.mutable_diag(k)[i] = e;
    }
    return MetricField(h);
}

MetricField fubini_study_patch(const ChartPtr& c) {
    return MetricField(Form11Field::from_function(c, 1, [&](std::size_t i) {
        SmallMatrix m(1, 1);
        m(0, 0) = 1.0 / std::pow(1.0 + std::norm(c->z(i, 0)), 2);
        return m;
    }));
}

}  // namespace

TEST_SUITE("chart") {
    TEST_CASE("invariants are enforced") {
        CHECK_THROWS_AS(GridChart::torus(1, 4), ChartError);
        CHECK_THROWS_AS(GridChart::annulus(0.1, 1.0, 32, 16), ChartError);
        CHECK_THROWS_AS(GridChart::annulus(0.2, 0.1, 32, 16), ChartError);
        auto c = GridChart::product(1e-3, 0.5, 16, 8, 1, 8, FiberKind::torus, 1.0);
        CHECK(c.axis_count() == 2 * c.n());
        CHECK(c.node_count() == 16u * 8 * 8 * 8);
        CHECK(c.radius(0) == doctest::Approx(1e-3).epsilon(1e-12));
    }

    TEST_CASE("gregory weights are exact to degree seven with unit interior weights") {
        for (int count : {8, 13, 40}) {
            auto w = gregory_weights(count, 0.5);
            for (int p = 0; p <= 7; ++p) {
                double s = 0;
                for (int i = 0; i < count; ++i) s += w[i] * std::pow(0.5 * i, p);
                const double L = 0.5 * (count - 1);
                CHECK(s == doctest::Approx(std::pow(L, p + 1) / (p + 1)).epsilon(1e-12));
            }
            if (count >= 18) CHECK(w[count / 2] == doctest::Approx(0.5).epsilon(1e-13));
        }
    }

    TEST_CASE("fornberg reproduces the classic three-point stencil") {
        auto c = fornberg_weights(0.0, {-1.0, 0.0, 1.0}, 2);
        CHECK(c[2][0] == doctest::Approx(1.0));
        CHECK(c[2][1] == doctest::Approx(-2.0));
        CHECK(c[1][2] == doctest::Approx(0.5));
    }
}

TEST_SUITE("ddbar") {
    TEST_CASE("constant gives zero on every chart kind") {
        for (auto c : {unit_torus(1, 16), share(GridChart::annulus(1e-3, 0.5, 24, 16)),
                       share(GridChart::patch(1, 16, 1.0))}) {
            // log-polar coefficients carry a 1/r^2, so compare in units of it
            const double unit = c->log_polar() ? 1.0 / std::pow(c->r_min(), 2) : 1.0;
            CHECK(ddbar(ScalarField::constant(c, 3.5)).sup_abs() < 1e-10 * unit);
        }
    }

    TEST_CASE("cos(2 pi x) on the unit torus matches a 512^2 second-order FD oracle") {
        auto c = unit_torus(1, 512);
        auto h = ddbar(ScalarField::sample(c, [&](std::size_t i) { return std::cos(2 * pi * c->coordinate(i, 0)); }));
        const double dx = 1.0 / 512;
        double err = 0;
        for (std::size_t i = 0; i < c->node_count(); i += 97) {
            const double x = c->coordinate(i, 0), y = c->coordinate(i, 1);
            auto fx = [&](double s) { return std::cos(2 * pi * s); };
            auto fy = [&](double) { return std::cos(2 * pi * x); };
            const double ref = 0.25 * (oracle::fd2(fx, x, dx) + oracle::fd2(fy, y, dx));
            err = std::max(err, std::abs(h.diag(0)[i] - ref));
        }
        CHECK(err < 1e-4 * pi * pi);
    }

    TEST_CASE("|z|^2 on a patch has unit coefficient") {
        auto c = share(GridChart::patch(1, 16, 1.0));
        auto h = ddbar(ScalarField::sample(c, [&](std::size_t i) { return std::norm(c->z(i, 0)); }));
        for (std::size_t i = 0; i < h.size(); ++i) CHECK(h.diag(0)[i] == doctest::Approx(1.0).epsilon(1e-10));
    }

    TEST_CASE("log-polar chart: ddbar (log|z|^2)^2 = 2/|z|^2") {
        auto c = share(GridChart::annulus(1e-4, 0.5, 64, 16));
        auto h = ddbar(ScalarField::sample(c, [&](std::size_t i) { return std::pow(std::log(std::pow(c->radius(i), 2)), 2); }));
        double err = 0;
        for (std::size_t i = 0; i < h.size(); ++i) {
            const double r = c->radius(i);
            err = std::max(err, std::abs(h.diag(0)[i] * r * r - 2.0));
        }
        CHECK(err < 1e-9);
    }

    TEST_CASE("errors: complex input and under-resolved input") {
        auto c = unit_torus(1, 16);
        auto z = ScalarField::complex(c, std::vector<double>(c->node_count(), 1.0), std::vector<double>(c->node_count(), 0.5));
        CHECK_THROWS_AS(ddbar(z), FieldError);
        auto rough = ScalarField::sample(c, [&](std::size_t i) { return std::cos(2 * pi * 6 * c->coordinate(i, 0)); });
        CHECK_THROWS_AS(ddbar(rough), ResolutionError);
        auto ann = share(GridChart::annulus(1e-2, 0.5, 16, 16));
        auto rough2 = ScalarField::sample(ann, [&](std::size_t i) { return std::cos(7 * ann->coordinate(i, 1)); });
        CHECK_THROWS_AS(ddbar(rough2), ResolutionError);
    }

    TEST_CASE("property: Hermitian output and zero integral of every coefficient on tori") {
        auto c = share(GridChart::torus({16, 8, 16, 8}, {1, 1, 1, 1}));
        auto flat = MetricField::flat(c);
        for (unsigned seed = 1; seed <= 5; ++seed) {
            auto phi = trig(c, oracle::RandomTrig(4, 2, 6, 0.1, seed));
            auto h = ddbar(phi);
            for (std::size_t i = 0; i < h.size(); i += 31) {
                auto m = h.matrix(i);
                CHECK((m - m.adjoint()).norm() == 0.0);
            }
            double scale = h.sup_abs();
            for (int p = 0; p < 2; ++p) {
                CHECK(std::abs(integrate(ScalarField::real(c, h.diag(p)), flat)) < 1e-10 * scale);
            }
            std::vector<double> re(h.size()), im(h.size());
            for (std::size_t i = 0; i < h.size(); ++i) {
                re[i] = h.off(0, 1)[i].real();
                im[i] = h.off(0, 1)[i].imag();
            }
            CHECK(std::abs(integrate(ScalarField::real(c, re), flat)) < 1e-10 * scale);
            CHECK(std::abs(integrate(ScalarField::real(c, im), flat)) < 1e-10 * scale);
        }
    }

    TEST_CASE("property: doubling resolution shrinks the FD error at least fourfold") {
        // analytic, non-polynomial in t = log r
        auto err_at = [](int radial) {
            auto c = share(GridChart::annulus(0.05, 0.5, radial, 16));
            auto h = ddbar(ScalarField::sample(c, [&](std::size_t i) { return std::cos(3.0 * c->radius(i)); }));
            double e = 0;
            for (std::size_t i = 0; i < h.size(); ++i) {
                const double r = c->radius(i);
                // (1/4)(f'' + f'/r) for radial f
                const double ref = 0.25 * (-9.0 * std::cos(3 * r) - 3.0 * std::sin(3 * r) / r);
                e = std::max(e, std::abs(h.diag(0)[i] - ref));
            }
            return e;
        };
        const double e1 = err_at(16), e2 = err_at(32), e3 = err_at(64);
        CHECK(e1 / e2 >= 4.0);
        CHECK(e2 / e3 >= 4.0);
    }
}

TEST_SUITE("ricci") {
    TEST_CASE("flat metric has zero Ricci form") {
        auto c = unit_torus(2, 8);
        CHECK(ricci_form(MetricField::flat(c)).sup_abs() < 1e-12);
    }

    TEST_CASE("conformal torus metric: Ric = 0.3 pi^2 cos(2 pi x)") {
        auto c = unit_torus(1, 64);
        auto ric = ricci_form(conformal_torus(c, 0.3));
        double err = 0;
        for (std::size_t i = 0; i < ric.size(); ++i)
            err = std::max(err, std::abs(ric.diag(0)[i] - 0.3 * pi * pi * std::cos(2 * pi * c->coordinate(i, 0))));
        CHECK(err < 1e-10);
    }

    TEST_CASE("Fubini-Study patch: Ric = 2 g") {
        auto c = share(GridChart::patch(1, 48, 0.8));
        auto g = fubini_study_patch(c);
        auto ric = ricci_form(g);
        double err = 0;
        for (std::size_t i = 0; i < ric.size(); ++i) err = std::max(err, std::abs(ric.diag(0)[i] - 2.0 * g.form().diag(0)[i]));
        CHECK(err < 1e-6);
    }

    TEST_CASE("property: Ricci form is invariant under constant rescaling") {
        auto c = share(GridChart::torus({16, 8, 16, 8}, {1, 1, 1, 1}));
        for (unsigned seed = 1; seed <= 3; ++seed) {
            auto phi = trig(c, oracle::RandomTrig(4, 1, 4, 0.002, seed));
            auto g = MetricField(MetricField::flat(c).form() + ddbar(phi));
            for (double s : {0.01, 3.0, 250.0}) {
                auto d = Form11Field::max_difference(ricci_form(g), ricci_form(MetricField(g.form().scaled(s))));
                CHECK(d < 1e-12 * std::max(1.0, ricci_form(g).sup_abs()));
            }
        }
    }

    TEST_CASE("first Chern form: flat zero, conformal trace integrates to zero, FS positive") {
        auto c = unit_torus(1, 32);
        CHECK(first_chern_form(MetricField::flat(c)).sup_abs() < 1e-12);
        auto flat = MetricField::flat(c);
        auto tr = ScalarField::real(c, first_chern_form(conformal_torus(c, 0.3)).diag(0));
        CHECK(std::abs(integrate(tr, flat)) < 1e-12);
        auto p = share(GridChart::patch(1, 32, 0.8));
        auto fs = fubini_study_patch(p);
        auto t = trace(first_chern_form(fs), fs);
        CHECK(t.min() > 0.0);
    }

    TEST_CASE("degenerate determinant is reported") {
        auto c = unit_torus(1, 8);
        Form11Field h(c, 1);
        std::fill(h.mutable_diag(0).begin(), h.mutable_diag(0).end(), 1e-320);
        CHECK_THROWS_AS(MetricField{h}, PositivityError);
    }
}

TEST_SUITE("ma_density and laplacian") {
    TEST_CASE("u = 0 gives density 1") {
        auto c = unit_torus(2, 8);
        auto d = ma_density(MetricField::flat(c), ScalarField::constant(c, 0.0));
        CHECK(d.min() == 1.0);
        CHECK(d.max() == 1.0);
    }

    TEST_CASE("dimension one: density = 1 + laplacian") {
        auto c = unit_torus(1, 32);
        auto g = conformal_torus(c, 0.2);
        auto u = trig(c, oracle::RandomTrig(2, 3, 5, 0.0005, 7));
        auto d = ma_density(g, u);
        auto l = metric_laplacian(g, u);
        for (std::size_t i = 0; i < d.size(); ++i) CHECK(d[i] == doctest::Approx(1.0 + l[i]).epsilon(1e-13));
    }

    TEST_CASE("dimension two: matches a per-node FD-Hessian determinant") {
        auto c = share(GridChart::torus({128, 8, 128, 8}, {1, 1, 1, 1}));
        auto ufun = [](double x1, double x2) { return 0.01 * std::cos(2 * pi * x1) * std::cos(2 * pi * x2); };
        auto u = ScalarField::sample(c, [&](std::size_t i) { return ufun(c->coordinate(i, 0), c->coordinate(i, 2)); });
        auto d = ma_density(MetricField::flat(c), u);
        double err = 0;
        const double h = 1e-3;
        for (std::size_t i = 0; i < c->node_count(); i += 37) {
            const double x1 = c->coordinate(i, 0), x2 = c->coordinate(i, 2);
            // u depends only on the real parts, so u_{i jbar} = (1/4) d^2 u / dx_i dx_j
            const double a = 0.25 * oracle::fd4_second([&](double s) { return ufun(s, x2); }, x1, h);
            const double b = 0.25 * oracle::fd4_second([&](double s) { return ufun(x1, s); }, x2, h);
            const double m = 0.25 * oracle::fd4_mixed(ufun, x1, x2, h);
            err = std::max(err, std::abs(d[i] - ((1 + a) * (1 + b) - m * m)));
        }
        CHECK(err < 1e-6);
    }

    TEST_CASE("loss of positivity carries the eigenvalue field") {
        auto c = unit_torus(1, 16);
        auto u = ScalarField::sample(c, [&](std::size_t i) { return 0.2 * std::cos(2 * pi * c->coordinate(i, 0)); });
        try {
            ma_density(MetricField::flat(c), u);
            FAIL("expected PositivityError");
        } catch (const PositivityError& e) {
            CHECK(e.min_eigenvalues.size() == c->node_count());
            CHECK(e.margin < 0);
        }
    }

    TEST_CASE("laplacian: constants vanish, cos(2 pi x) -> -pi^2 cos(2 pi x)") {
        auto c = unit_torus(1, 32);
        auto flat = MetricField::flat(c);
        CHECK(metric_laplacian(flat, ScalarField::constant(c, 2.0)).sup_abs() < 1e-12);
        auto l = metric_laplacian(flat, ScalarField::sample(c, [&](std::size_t i) { return std::cos(2 * pi * c->coordinate(i, 0)); }));
        for (std::size_t i = 0; i < l.size(); ++i)
            CHECK(l[i] == doctest::Approx(-pi * pi * std::cos(2 * pi * c->coordinate(i, 0))).epsilon(1e-12).scale(1));
    }

    TEST_CASE("property: laplacian has zero mean against omega^n") {
        auto c = share(GridChart::torus({16, 8, 16, 8}, {1, 1, 1, 1}));
        for (unsigned seed = 11; seed <= 13; ++seed) {
            auto g = MetricField(MetricField::flat(c).form() + ddbar(trig(c, oracle::RandomTrig(4, 1, 4, 0.002, seed))));
            auto v = trig(c, oracle::RandomTrig(4, 2, 5, 1.0, seed + 100));
            auto l = metric_laplacian(g, v);
            CHECK(std::abs(integrate(l, g)) < 1e-11 * l.sup_abs());
        }
    }

    TEST_CASE("property: linearization error is first order in t") {
        auto c = share(GridChart::torus({16, 8, 16, 8}, {1, 1, 1, 1}));
        auto g = MetricField(MetricField::flat(c).form() + ddbar(trig(c, oracle::RandomTrig(4, 1, 4, 0.002, 5))));
        auto v = trig(c, oracle::RandomTrig(4, 1, 4, 0.01, 6));
        auto lap = metric_laplacian(g, v);
        std::vector<double> lt, le;
        for (double t : {1e-2, 1e-3, 1e-4}) {
            auto d = ma_density(g, t * v);
            double e = 0;
            for (std::size_t i = 0; i < d.size(); ++i) e = std::max(e, std::abs(std::log(d[i]) / t - lap[i]));
            lt.push_back(std::log(t));
            le.push_back(std::log(e));
        }
        CHECK(oracle::slope(lt, le) >= 0.9);
    }

    TEST_CASE("property: cohomology conservation for random admissible u") {
        auto c = share(GridChart::torus({16, 8, 16, 8}, {1, 1, 1, 1}));
        auto g = MetricField(MetricField::flat(c).form() + ddbar(trig(c, oracle::RandomTrig(4, 1, 3, 0.002, 9))));
        for (unsigned seed = 20; seed < 25; ++seed) {
            auto u = trig(c, oracle::RandomTrig(4, 2, 5, 0.0004, seed));
            const double a = integrate(ma_density(g, u), g), b = chart_volume(g);
            CHECK(std::abs(a - b) <= 1e-8 * b);
        }
    }
}

TEST_SUITE("integrate and positivity") {
    TEST_CASE("unit torus volume and oscillation cancellation") {
        auto c = unit_torus(1, 32);
        auto flat = MetricField::flat(c);
        CHECK(chart_volume(flat) == doctest::Approx(1.0).epsilon(1e-15));
        CHECK(std::abs(integrate(ScalarField::sample(c, [&](std::size_t i) { return std::cos(2 * pi * c->coordinate(i, 0)); }), flat)) < 1e-12);
        auto z = ScalarField::complex(c, std::vector<double>(c->node_count()), std::vector<double>(c->node_count()));
        CHECK_THROWS_AS(integrate(z, flat), FieldError);
        CHECK_THROWS_AS(integrate(ScalarField::constant(unit_torus(1, 16), 1.0), flat), ChartError);
    }

    TEST_CASE("product of squared cosines on the n = 2 torus") {
        auto c = share(GridChart::torus({16, 8, 16, 8}, {1, 1, 1, 1}));
        auto f = ScalarField::sample(c, [&](std::size_t i) {
            return std::pow(std::cos(2 * pi * c->coordinate(i, 0)) * std::cos(2 * pi * c->coordinate(i, 2)), 2);
        });
        // closed form: (1/2)(1/2)
        CHECK(integrate(f, MetricField::flat(c)) == doctest::Approx(0.25).epsilon(1e-14));
    }

    TEST_CASE("annulus quadrature integrates r^2 over the disc shell") {
        auto c = share(GridChart::annulus(0.1, 0.5, 64, 16));
        auto f = ScalarField::sample(c, [&](std::size_t i) { return std::pow(c->radius(i), 2); });
        const double exact = 2 * pi * (std::pow(0.5, 4) - std::pow(0.1, 4)) / 4;
        CHECK(integrate(f, MetricField::flat(c)) == doctest::Approx(exact).epsilon(1e-10));
    }

    TEST_CASE("positivity margin") {
        auto c = unit_torus(2, 8);
        auto m = positivity_margin(MetricField::flat(c).form());
        CHECK(m.min() == 1.0);
        Form11Field h(c, 2);
        SmallMatrix a = SmallMatrix::Zero(2, 2);
        a(0, 0) = 2;
        a(1, 1) = -1;
        h.set(5, a);
        CHECK(positivity_margin(h)[5] == -1.0);
    }
}

TEST_SUITE("curvature") {
    TEST_CASE("flat metric has zero curvature") {
        auto c = unit_torus(2, 8);
        auto R = curvature_tensor(MetricField::flat(c));
        CHECK(R.norm_field().sup_abs() < 1e-12);
    }

    TEST_CASE("cylinder metric 1/|z|^2 is flat") {
        auto c = share(GridChart::annulus(1e-6, 0.5, 256, 16));
        auto g = MetricField(Form11Field::from_function(c, 1, [&](std::size_t i) {
            SmallMatrix m(1, 1);
            m(0, 0) = 1.0 / std::pow(c->radius(i), 2);
            return m;
        }));
        CHECK(curvature_norm(g).sup_abs() < 1e-6);
    }

    TEST_CASE("cusp factor on a product chart with coarse radial spacing") {
        // w = log z_1: g_ww = F = (3a/4) L^{-1/2}, |R| = |F F'' - F'^2| / (4 F^3) = L^{-3/2} 2 / (3a)
        const double a = std::pow(2.0, 1.5) / 3;
        auto c = share(GridChart::product(1e-40, 0.5, 64, 16, 1, 17, FiberKind::patch, 1.0));
        auto pot = ScalarField::sample(c, [&](std::size_t i) {
            const double L = -2 * std::log(c->radius(i));
            return a * std::pow(L, 1.5) + std::norm(c->z(i, 1));
        });
        auto R = curvature_tensor(MetricField(ddbar(pot)));
        double worst = 0, worst_comp = 0;
        for (std::size_t i = 0; i < R.norm().size(); ++i) {
            const double r = c->radius(i), L = -2 * std::log(r);
            // one-sided stencils applied twice reach about 13 rows in from the outer edge
            if (L < 40) continue;
            const double expect = 2 / (3 * a) * std::pow(L, -1.5);
            worst = std::max(worst, std::abs(R.norm()[i] / expect - 1));
            const double F = 0.75 * a / std::sqrt(L);
            const double comp = F * F * expect / std::pow(r, 4);  // |R_{1 1bar 1 1bar}| in z_1
            worst_comp = std::max(worst_comp, std::abs(std::abs(R.component(i, 0, 0, 0, 0)) / comp - 1));
        }
        CHECK(worst < 1e-3);
        CHECK(worst_comp < 1e-3);
    }

    TEST_CASE("Fubini-Study patch has constant |R| = 2") {
        auto c = share(GridChart::patch(1, 48, 0.8));
        auto R = curvature_tensor(fubini_study_patch(c));
        for (std::size_t i = 0; i < R.norm().size(); ++i) CHECK(std::abs(R.norm()[i] - 2.0) < 1e-4);
    }

    TEST_CASE("Kahler symmetries and trace compatibility (n = 2)") {
        auto c = share(GridChart::torus({24, 24, 24, 24}, {1, 1, 1, 1}));
        auto phi = trig(c, oracle::RandomTrig(4, 1, 6, 0.002, 31));
        auto g = MetricField(MetricField::flat(c).form() + ddbar(phi));
        auto R = curvature_tensor(g);
        CHECK(R.symmetry_defect < 1e-8);
        for (std::size_t node = 0; node < R.norm().size(); node += 211)
            for (int i = 0; i < 2; ++i)
                for (int j = 0; j < 2; ++j)
                    for (int k = 0; k < 2; ++k)
                        for (int l = 0; l < 2; ++l) {
                            const cd v = R.component(node, i, j, k, l);
                            CHECK(std::abs(v - R.component(node, k, j, i, l)) == 0.0);
                            CHECK(std::abs(v - R.component(node, i, l, k, j)) == 0.0);
                            CHECK(std::abs(v - std::conj(R.component(node, j, i, l, k))) == 0.0);
                        }
        CHECK(Form11Field::max_difference(ricci_contraction(R, g), ricci_form(g)) < 1e-6);
    }

    TEST_CASE("trace compatibility at 128 per axis (n = 1)") {
        auto c = unit_torus(1, 128);
        auto g = conformal_torus(c, 0.3);
        auto R = curvature_tensor(g);
        CHECK(Form11Field::max_difference(ricci_contraction(R, g), ricci_form(g)) < 1e-6);
    }
}

TEST_SUITE("serialization") {
    TEST_CASE("scalar and form fields round-trip exactly") {
        auto c = share(GridChart::product(1e-3, 0.4, 16, 8, 1, 8, FiberKind::patch, 0.5));
        auto f = ScalarField::sample(c, [&](std::size_t i) { return std::sin(1.0 + i * 0.37); });
        auto z = ScalarField::sample_complex(c, [&](std::size_t i) { return cd(std::cos(i * 0.1), 1.0 / (1 + i)); });
        auto dir = std::filesystem::temp_directory_path() / "kahler_serialize_test";
        std::filesystem::create_directories(dir);
        write_field((dir / "f.field").string(), f);
        write_field((dir / "z.field").string(), z);
        auto f2 = read_scalar_field((dir / "f.field").string());
        auto z2 = read_scalar_field((dir / "z.field").string());
        CHECK(f2.chart() == f.chart());
        CHECK(f2.re() == f.re());
        CHECK(z2.im() == z.im());
        auto h = ddbar(ScalarField::sample(c, [&](std::size_t i) { return std::norm(c->z(i, 1)) + std::pow(std::log(c->radius(i)), 2); }));
        write_field((dir / "h.field").string(), h);
        auto h2 = read_form_field((dir / "h.field").string());
        CHECK(Form11Field::max_difference(h, h2) == 0.0);
        auto hdr = read_field_header((dir / "h.field").string());
        CHECK(hdr["kind"] == "form11");
        CHECK(hdr["parity"] == "complex");
        std::filesystem::remove_all(dir);
    }
}
