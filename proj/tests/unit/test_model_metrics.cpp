#include <doctest.h>

#include "kahler/error.hpp"
#include "kahler/model.hpp"
#include "kahler/tensor.hpp"
#include "oracles.hpp"

#include <cmath>
#include <random>

using namespace kahler;

namespace {

ModelSpec annulus_spec(int radial = 256) {
    ModelSpec s;
    s.n = 1;
    s.r_min = 1e-12;
    s.radial = radial;
    s.angular = 16;
    return s;
}

ModelSpec product_spec(FiberWeight w, int radial = 64) {
    ModelSpec s;
    s.n = 2;
    s.r_min = 1e-40;
    s.radial = radial;
    s.angular = 16;
    s.fiber_resolution = 17;
    s.fiber_weight = w;
    return s;
}

// n = 2, psi = kappa |w|^2, phi = shift: h = c ddbar L^{3/2} written out by hand
SmallMatrix flat_fiber_form(cd z, cd w, double kappa, double shift) {
    const double c = std::pow(2.0, 1.5) / 3;
    const double L = -std::log(std::norm(z)) + kappa * std::norm(w) + shift;
    const cd dz = -1.0 / z, dw = kappa * std::conj(w);
    SmallMatrix h(2, 2);
    h(0, 0) = c * 0.75 / std::sqrt(L) * std::norm(dz);
    h(1, 1) = c * (1.5 * std::sqrt(L) * kappa + 0.75 / std::sqrt(L) * std::norm(dw));
    h(0, 1) = c * 0.75 / std::sqrt(L) * dz * std::conj(dw);
    h(1, 0) = std::conj(h(0, 1));
    return h;
}

SmallMatrix random_hermitian(int n, std::mt19937& rng) {
    std::normal_distribution<double> g;
    SmallMatrix a(n, n);
    for (int i = 0; i < n; ++i) {
        a(i, i) = g(rng);
        for (int j = i + 1; j < n; ++j) {
            a(i, j) = cd(g(rng), g(rng));
            a(j, i) = std::conj(a(i, j));
        }
    }
    return a;
}

double rel(double a, double b) { return std::abs(a - b) / std::abs(b); }

}  // namespace

TEST_SUITE("model forms") {
    TEST_CASE("n = 1 model is the flat cylinder 1/|z|^2") {
        auto m = make_model(annulus_spec());
        auto g = omega_phi(m);
        double worst = 0;
        for (std::size_t i = 0; i < g.form().size(); ++i) {
            const double r = m.chart->radius(i);
            worst = std::max(worst, std::abs(g.form().diag(0)[i] * r * r - 1));
        }
        CHECK(worst < 1e-8);
        CHECK(curvature_norm(g).sup_abs() < 1e-6);
    }

    TEST_CASE("n = 1 with a radial weight matches the hand expansion") {
        // L = -log r^2 + a r^2: (1/2) ddbar L^2 = a L + (1 - a r^2)^2 / r^2
        auto s = annulus_spec();
        s.r_min = 1e-8;
        s.phi_amplitude = 0.3;
        auto m = make_model(s);
        auto g = omega_phi(m);
        double worst = 0;
        for (std::size_t i = 0; i < g.form().size(); ++i) {
            const double r = m.chart->radius(i), a = 0.3, L = -2 * std::log(r) + a * r * r;
            const double expect = a * L + std::pow(1 - a * r * r, 2) / (r * r);
            worst = std::max(worst, rel(g.form().diag(0)[i], expect));
        }
        CHECK(worst < 1e-6);  // 8th-order FD on e^{2t} at t spacing 0.07
    }

    TEST_CASE("n = 2 flat fiber weight matches the hand expansion") {
        auto s = product_spec(FiberWeight::flat, 128);
        s.r_min = 1e-12;
        s.kappa = 0.7;
        s.phi_shift = 0.4;
        auto m = make_model(s);
        auto g = omega_phi(m);
        double worst = 0, interior = 0;
        // compare in the w = log z_1 frame, where the coefficients are O(1)
        for (std::size_t i = 0; i < g.form().size(); ++i) {
            const int row = m.chart->index(i, 0);
            const cd z = m.chart->z(i, 0);
            SmallMatrix e = flat_fiber_form(z, m.chart->z(i, 1), 0.7, 0.4);
            e.row(0) *= z;
            e.col(0) *= std::conj(z);
            const SmallMatrix d = w_frame(g.form(), i);
            const double err = (d - e).cwiseAbs().maxCoeff() / e.cwiseAbs().maxCoeff();
            worst = std::max(worst, err);
            if (row >= 8 && row < 120) interior = std::max(interior, err);
        }
        CHECK(interior < 1e-6);
        CHECK(worst < 1e-3);  // one-sided stencils at the radial edges
    }

    TEST_CASE("shifting phi shifts L and rescales ||S||_phi") {
        auto s = product_spec(FiberWeight::flat, 16);
        auto m0 = make_model(s);
        s.phi_shift = 0.8;
        auto m1 = make_model(s);
        const auto L0 = m0.log_term(), L1 = m1.log_term();
        for (std::size_t i = 0; i < L0.size(); i += 97) CHECK(L1[i] - L0[i] == doctest::Approx(0.8).epsilon(1e-14));
        // ||S||_phi^2 = e^{-phi} ||S||^2, so L = -log ||S||^2 + phi
        const auto S = m1.section_norm();
        for (std::size_t i = 0; i < L1.size(); i += 97)
            CHECK(L1[i] == doctest::Approx(-std::log(std::exp(-0.8) * S[i] * S[i])).epsilon(1e-13));
    }

    TEST_CASE("negative fiber weight is rejected with the node diagnostics") {
        auto s = product_spec(FiberWeight::flat, 16);
        s.kappa = -0.1;
        auto m = make_model(s);
        try {
            omega_phi(m);
            FAIL("expected PositivityError");
        } catch (const PositivityError& e) {
            CHECK(e.margin < 0);
            CHECK(e.min_eigenvalues.size() == m.chart->node_count());
            CHECK(e.largest_positive_radius == 0.0);
        }
    }

    TEST_CASE("omega_phi needs the ample case") {
        auto s = product_spec(FiberWeight::none, 16);
        s.k = 1;
        CHECK_THROWS_AS(omega_phi(make_model(s)), FieldError);
    }

    TEST_CASE("model validation") {
        auto s = product_spec(FiberWeight::none, 16);
        s.k = 1;
        auto m = make_model(s);
        CHECK(m.k_outside_stated_range());

        auto bad = m;
        bad.omega_fiber.reset();
        CHECK_THROWS_AS(bad.validate(), ConfigError);

        bad = m;
        bad.omega_fiber->mutable_off(0, 1)[5] = cd(1e-3, 0);
        CHECK_THROWS_AS(bad.validate(), FieldError);

        bad = m;
        bad.omega_fiber->mutable_diag(1)[m.chart->row_size() * 8] = 2.0;  // slice at row 8 differs
        CHECK_THROWS_AS(bad.validate(), FieldError);

        bad = m;
        bad.k = 3;
        CHECK_THROWS_AS(bad.validate(), ConfigError);

        DivisorModel flags;
        flags.n = 3;
        flags.k = 1;
        CHECK_FALSE(flags.k_outside_stated_range());
        flags.k = 2;
        CHECK(flags.k_outside_stated_range());
        flags.k = 3;
        CHECK_FALSE(flags.k_outside_stated_range());

        ModelSpec wide = annulus_spec(16);
        wide.r_max = 1.5;
        CHECK_THROWS_AS(make_model(wide), ConfigError);
        wide = annulus_spec(16);
        wide.fiber_weight = FiberWeight::flat;
        CHECK_THROWS_AS(make_model(wide), ConfigError);
        // ||S|| = r e^{-psi/2} must stay below 1
        auto neg = product_spec(FiberWeight::flat, 16);
        neg.kappa = -4.0;
        neg.r_max = 0.9;
        CHECK_THROWS_AS(make_model(neg), FieldError);
    }

    TEST_CASE("closedness of the model form and of a non-closed form") {
        auto m = make_model(product_spec(FiberWeight::spherical, 128));
        auto g = omega_phi(m);
        CHECK(closedness_defect(g.form(), 8) < 1e-8);
        CHECK(closedness_defect(MetricField::flat(m.chart).form()) < 1e-12);
        // (1 + |z_1|^2) on the fiber entry: d_1 of it has nothing to cancel against
        auto h = Form11Field::from_function(m.chart, 2, [&](std::size_t i) {
            SmallMatrix a = SmallMatrix::Identity(2, 2);
            a(1, 1) = 1 + std::norm(m.chart->z(i, 0));
            return a;
        });
        CHECK(closedness_defect(h) > 1e-2);
    }
}

TEST_SUITE("semi-ample forms") {
    TEST_CASE("k = n reduces exactly to omega_phi") {
        auto s = product_spec(FiberWeight::flat, 128);
        s.r_min = 1e-6;
        auto m = make_model(s);
        // the direct form carries the edge-row stencil error, about 2e-5 here
        auto sa = omega_phi_semiample(m, 1e-4);
        CHECK(Form11Field::max_difference(sa.form, omega_phi(m).form()) == 0.0);
        CHECK(Form11Field::max_difference(eta_phi(m).form(), omega_phi(m).form()) == 0.0);
        CHECK(sa.rank == 2);
        CHECK(sa.small_eigenvalue == 0.0);
    }

    TEST_CASE("rank one form for k = 1, n = 2") {
        ModelSpec s = product_spec(FiberWeight::none, 256);
        s.k = 1;
        s.r_min = 1e-6;
        s.fiber_resolution = 16;
        auto m = make_model(s);
        auto sa = omega_phi_semiample(m);
        CHECK(sa.agreement < 1e-6);
        CHECK(sa.rank == 1);
        CHECK(sa.small_eigenvalue < 1e-8);
        auto tp = eta_top_power_check(m);
        CHECK(tp.nodes_checked == m.chart->node_count());
        CHECK(tp.max_relative_defect < 1e-6);
    }

    TEST_CASE("disagreement beyond tolerance throws") {
        ModelSpec s = product_spec(FiberWeight::none, 256);
        s.k = 1;
        s.r_min = 1e-6;
        s.fiber_resolution = 16;
        CHECK_THROWS_AS(omega_phi_semiample(make_model(s), 1e-15), FieldError);
    }

    TEST_CASE("eta adds (kL)^{1/k} times the fiber form") {
        ModelSpec s = product_spec(FiberWeight::none, 32);
        s.k = 1;
        auto m1 = make_model(s);
        s.fiber_scale = 2.5;
        auto m2 = make_model(s);
        const auto d = eta_phi(m2).form() - eta_phi(m1).form();
        const auto L = m1.log_term();
        double worst = 0;
        for (std::size_t i = 0; i < L.size(); ++i) {
            worst = std::max(worst, std::abs(d.diag(1)[i] - 1.5 * L[i]));
            worst = std::max(worst, std::abs(d.diag(0)[i]) + std::abs(d.off(0, 1)[i]));
        }
        CHECK(worst < 1e-12);
    }

    TEST_CASE("top power coefficient against the mixed discriminant") {
        std::mt19937 rng(7);
        for (int n = 1; n <= 3; ++n) {
            CHECK(binomial(n, 0) == 1);
            for (int k = 0; k <= n; ++k) {
                const SmallMatrix a = random_hermitian(n, rng), b = random_hermitian(n, rng);
                std::vector<SmallMatrix> args;
                for (int i = 0; i < k; ++i) args.push_back(a);
                for (int i = k; i < n; ++i) args.push_back(b);
                const cd expect = double(binomial(n, k)) * oracle::mixed_discriminant(args);
                const cd got = top_power_coefficient(a, b, k);
                CHECK(std::abs(got - expect) < 1e-10 * (1 + std::abs(expect)));
            }
        }
        CHECK(binomial(4, 2) == 6);
        CHECK(binomial(3, 5) == 0);
    }
}

TEST_SUITE("model potential") {
    TEST_CASE("self reference gives f = 0") {
        auto s = product_spec(FiberWeight::spherical, 32);
        s.reference = Reference::self;
        auto f = f_phi_detailed(make_model(s), false);
        CHECK(f.f.sup_abs() == 0.0);
        CHECK(f.limit == 0.0);
    }

    TEST_CASE("Euclidean reference, n = 1, against the hand expansion") {
        auto s = annulus_spec();
        s.r_min = 1e-8;
        s.phi_amplitude = 0.3;
        auto m = make_model(s);
        auto full = f_phi_detailed(m, false);
        double worst = 0;
        for (std::size_t i = 0; i < full.f.size(); ++i) {
            const double r = m.chart->radius(i), a = 0.3, L = -2 * std::log(r) + a * r * r;
            const double expect = -2 * std::log(r) - std::log(a * L + std::pow(1 - a * r * r, 2) / (r * r));
            worst = std::max(worst, std::abs(full.f[i] - expect));
        }
        CHECK(worst < 1e-6);
        const double r0 = m.chart->r_min(), L0 = -2 * std::log(r0) + 0.3 * r0 * r0;
        CHECK(full.limit == doctest::Approx(-2 * std::log(r0) - std::log(0.3 * L0 + std::pow(1 - 0.3 * r0 * r0, 2) / (r0 * r0))).epsilon(1e-8));
        auto sub = f_phi_detailed(m, true);
        for (std::size_t i = 0; i < sub.f.size(); i += 37) CHECK(sub.f[i] == doctest::Approx(full.f[i] - full.limit));
    }

    TEST_CASE("log expansions") {
        auto m = make_model(product_spec(FiberWeight::flat, 16));
        CHECK(evaluate_expansion({}, m).sup_abs() == 0.0);
        LogExpansion e;
        e.terms.push_back({1, 0, 0, ScalarField::constant(m.chart, 1.0)});
        auto v = evaluate_expansion(e, m);
        for (std::size_t i = 0; i < v.size(); i += 53) CHECK(v[i] == doctest::Approx(2 * m.chart->z(i, 0).real()));

        LogExpansion l;
        l.terms.push_back({1, 1, 2, ScalarField::constant(m.chart, 0.5)});
        auto w = evaluate_expansion(l, m);
        const auto S = m.section_norm();
        for (std::size_t i = 0; i < w.size(); i += 53) {
            const double r = m.chart->radius(i);
            CHECK(w[i] == doctest::Approx(r * r * std::pow(-2 * std::log(S[i]), 2)));
        }
        LogExpansion bad;
        bad.terms.push_back({0, 0, 0, ScalarField::constant(m.chart, 1.0)});
        CHECK_THROWS_AS(evaluate_expansion(bad, m), ConfigError);
        bad.terms[0] = {1, 0, -1, ScalarField::constant(m.chart, 1.0)};
        CHECK_THROWS_AS(evaluate_expansion(bad, m), ConfigError);
    }
}

TEST_SUITE("decay fits") {
    TEST_CASE("exact power laws are recovered") {
        auto m = make_model(annulus_spec(128));
        const auto S = m.section_norm();
        auto field = [&](double a, double b, double c) {
            return ScalarField::sample(m.chart, [&](std::size_t i) {
                return c * std::pow(S[i], a) * std::pow(-2 * std::log(S[i]), b);
            });
        };
        struct Case {
            double a, b;
        };
        for (Case k : {Case{0.5, 0}, Case{0, -0.5}, Case{0, -1}, Case{2, 1}, Case{1, -1.5}}) {
            auto fit = decay_fit(field(k.a, k.b, 3.0), m);
            CHECK(fit.a == doctest::Approx(k.a).epsilon(1e-9).scale(1));
            CHECK(fit.b == doctest::Approx(k.b).epsilon(1e-9).scale(1));
            CHECK(fit.constant == doctest::Approx(std::log(3.0)).epsilon(1e-9));
            CHECK(fit.residual < 1e-10);
            CHECK(fit.resolved);
        }
    }

    TEST_CASE("fit on an expansion term") {
        auto m = make_model(annulus_spec(128));
        LogExpansion e;
        e.terms.push_back({1, 1, 1, ScalarField::constant(m.chart, 1.0)});
        auto fit = decay_fit(evaluate_expansion(e, m), m);
        CHECK(fit.a == doctest::Approx(2).epsilon(1e-9));
        CHECK(fit.b == doctest::Approx(1).epsilon(1e-9));
    }

    TEST_CASE("window bookkeeping and degenerate input") {
        auto m = make_model(annulus_spec(128));
        auto fit = decay_fit(ScalarField::constant(m.chart, 1.0), m, {0.0, 0.5, 8});
        CHECK(fit.row_lo == 8);
        CHECK(fit.r_lo == doctest::Approx(m.chart->radius_at(8)));
        CHECK(fit.r_lo < fit.r_hi);
        CHECK(std::abs(fit.a) < 1e-12);
        CHECK(decay_fit(ScalarField::constant(m.chart, 0.0), m).identically_zero);
        CHECK_THROWS_AS(decay_fit(ScalarField::constant(m.chart, 1.0), m, {0.5, 0.5, 0}), ConfigError);
        CHECK_THROWS_AS(decay_fit(ScalarField::constant(m.chart, 1.0), m, {0.0, 0.01, 0}), ConfigError);
        auto other = share(GridChart::torus(1, 16));
        CHECK_THROWS(decay_fit(ScalarField::constant(other, 1.0), m));
    }

    TEST_CASE("noisy data is flagged unresolved") {
        auto m = make_model(annulus_spec(128));
        std::mt19937 rng(3);
        std::uniform_real_distribution<double> u(0.5, 2.0);
        std::vector<double> v(m.chart->node_count());
        for (double& x : v) x = u(rng);
        CHECK_FALSE(decay_fit(ScalarField::real(m.chart, v), m).resolved);
    }

    TEST_CASE("curvature decay: flat n = 1, curved divisor n = 2") {
        auto m1 = make_model(annulus_spec(128));
        auto z = curvature_decay_profile(m1);
        CHECK(z.identically_zero);
        CHECK(z.residual < 1e-6);

        auto m2 = make_model(product_spec(FiberWeight::spherical, 128));
        auto fit = curvature_decay_profile(m2);
        CHECK_FALSE(fit.identically_zero);
        CHECK(fit.b == doctest::Approx(-0.5).epsilon(0.1).scale(1));
        CHECK(std::abs(fit.a) < 0.05);
    }
}

TEST_SUITE("radial profiles") {
    TEST_CASE("cylinder: length is log(r_max / r), linear volume growth") {
        auto m = make_model(annulus_spec());
        auto g = omega_phi(m);
        auto p = completeness_profile(g, m);
        for (std::size_t r = 0; r < p.r.size(); ++r)
            CHECK(p.length[r] == doctest::Approx(std::log(m.chart->r_max() / p.r[r])).epsilon(1e-10).scale(1));
        CHECK(p.exponent == doctest::Approx(1.0).epsilon(1e-4));
        CHECK_FALSE(p.bounded);
        auto v = volume_growth_profile(g, m);
        CHECK(v.alpha == doctest::Approx(1.0).epsilon(1e-6));
        CHECK_FALSE(v.bounded);
        // det = 1/r^2 against r^2 dt: shells are constant
        for (std::size_t r = 1; r + 1 < v.volume.size(); ++r)
            CHECK(v.volume[r] / v.radius[r] == doctest::Approx(v.volume[0] / v.radius[0]).epsilon(1e-9));
    }

    TEST_CASE("Euclidean control is bounded, with exact tail integrals") {
        auto m = make_model(annulus_spec());
        auto e = MetricField::flat(m.chart);
        auto p = completeness_profile(e, m);
        CHECK(p.bounded);
        const double R = m.chart->r_max();
        for (std::size_t r = 0; r < p.r.size(); ++r) CHECK(std::abs(p.length[r] - (R - p.r[r])) < 2e-6);  // 4-point rule, h = 0.1
        auto v = volume_growth_profile(e, m);
        CHECK(v.bounded);
        for (std::size_t r = 0; r < p.r.size(); r += 7)
            CHECK(v.volume[r] / (R * R - p.r[r] * p.r[r]) == doctest::Approx(v.volume[0] / (R * R)).epsilon(1e-4));
    }

    TEST_CASE("n = 2 model: exponent 3/4, volume growth at most quadratic") {
        auto m = make_model(product_spec(FiberWeight::spherical, 128));
        auto g = omega_phi(m);
        auto p = completeness_profile(g, m);
        CHECK(p.exponent == doctest::Approx(0.75).epsilon(0.05 / 0.75));
        CHECK_FALSE(p.bounded);
        // on the line w = 0: rho = sqrt(3c/4) (2s)^{-1/4}, s = -log r
        const double c = std::pow(2.0, 1.5) / 3;
        const double A = std::sqrt(c * 0.75) * 4.0 / 3 / std::pow(2.0, 0.25);
        CHECK(p.coefficient == doctest::Approx(A).epsilon(1e-3));
        auto v = volume_growth_profile(g, m);
        CHECK(v.alpha <= 2.1);
        CHECK(v.alpha > 1.0);
        CHECK(completeness_profile(MetricField::flat(m.chart), m).bounded);
    }
}
