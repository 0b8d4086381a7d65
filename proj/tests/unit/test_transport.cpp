#include "matmi/errors.hpp"
#include "matmi/transport.hpp"

#include <doctest.h>

#include <cmath>
#include <random>

using namespace matmi;

namespace {

// E constant with no background part, so w = E x B0 = (E2, -E1, 0) is constant too.
ElectricField uniform_field(const MeshPtr& m, const Vec3& e) {
    return ElectricField(m, std::vector<Vec3>(m->num_cells(), e), false);
}

NodalField random_gamma(const MeshPtr& m, unsigned seed) {
    std::mt19937 rng(seed);
    std::uniform_real_distribution<double> u(0.6, 1.8);
    Vector v(m->num_vertices());
    for (auto& x : v) x = u(rng);
    return NodalField(m, v);
}

// d_x gamma = 1 with gamma = 1 on x = 0: gamma = 1 + x.
TransportProblem drift_problem(const MeshPtr& m, const AnisotropyFamily& family, const ScalarFunction& source,
                               const ScalarFunction& exact) {
    TransportProblem p{family,
                       uniform_field(m, Vec3(0, 1, 0)),
                       functional_from_source(m, source),
                       interpolate(m, exact),
                       {},
                       NodalField::constant(m, 1.0)};
    p.inflow_facets = flux_inflow(family, p.initial, p.field);
    return p;
}

double centroid_max_error(const CellField& g, const ScalarFunction& exact) {
    double worst = 0.0;
    for (int c = 0; c < g.mesh->num_cells(); ++c)
        worst = std::max(worst, std::abs(g.values[c] - exact(g.mesh->centroid(c))));
    return worst;
}

AnisotropyFamily wide(const std::string& name) { return builtin(name).with_range(0.05, 20.0); }

}  // namespace

TEST_SUITE("transport") {
    TEST_CASE("DG0: constant inflow is transported unchanged") {
        const MeshPtr m = make_unit_square(10);
        for (double c : {0.7, 1.3}) {
            const auto p = drift_problem(m, wide("D1"), [](const Vec3&) { return 0.0; }, [&](const Vec3&) { return c; });
            const CellField g = solve_linear_dg(p);
            CHECK((g.values.array() - c).abs().maxCoeff() <= 1e-12);
        }
    }

    TEST_CASE("DG0: linear profile within O(h)") {
        auto exact = [](const Vec3& x) { return 1.0 + x[0]; };
        for (int n : {16, 64}) {
            const MeshPtr m = make_unit_square(n);
            const auto p = drift_problem(m, wide("D1"), [](const Vec3&) { return 1.0; }, exact);
            CHECK(centroid_max_error(solve_linear_dg(p), exact) <= 2.0 / n);
        }
    }

    TEST_CASE("DG0: zero velocity is reported") {
        const MeshPtr m = make_unit_square(4);
        TransportProblem p{wide("D1"), uniform_field(m, Vec3::Zero()), functional_from_source(m, [](const Vec3&) { return 1.0; }),
                           NodalField::constant(m, 1.0), {}, NodalField::constant(m, 1.0)};
        CHECK_THROWS_AS(solve_linear_dg(p), SolverError);
    }

    TEST_CASE("DG0 refuses non-affine families") {
        const MeshPtr m = make_unit_square(4);
        const auto p = drift_problem(m, wide("D2"), [](const Vec3&) { return 1.0; }, [](const Vec3&) { return 1.0; });
        CHECK_THROWS_AS(solve_linear_dg(p), std::invalid_argument);
    }

    TEST_CASE("outflow and characteristic boundary values are ignored") {
        const MeshPtr m = make_unit_square(12);
        auto exact = [](const Vec3& x) { return 1.0 + x[0]; };
        auto p = drift_problem(m, wide("D1"), [](const Vec3&) { return 1.0; }, exact);
        const CellField base = solve_linear_dg(p);
        const NodalField picard = solve_nonlinear(p).gamma;
        for (int v = 0; v < m->num_vertices(); ++v)
            if (m->vertex(v)[0] > 1e-12) p.inflow_values.values[v] = 17.0;
        CHECK((solve_linear_dg(p).values - base.values).cwiseAbs().maxCoeff() <= 1e-13);
        CHECK((solve_nonlinear(p).gamma.values - picard.values).cwiseAbs().maxCoeff() <= 1e-12);
    }

    TEST_CASE("generic expansion matches a finite-difference product rule") {
        const MeshPtr m = make_unit_square(8);
        for (const char* name : {"D2", "D5", "D6"}) {
            const AnisotropyFamily fam = wide(name);
            const FieldSolve s = solve_field(fam, random_gamma(m, 3));
            const CoefficientField coeffs = expand_coefficients(fam, s.field);
            const FieldDerivatives d = field_derivatives(s.field);
            for (int c = 0; c < m->num_cells(); c += 7) {
                const Vec3 xc = m->centroid(c);
                // linearised flow around the centroid: w(x) = (E2, -E1, 0) with E affine
                auto w = [&](const Vec3& x) {
                    const Vec3 e = d.value[c] + d.gradient[c].transpose() * (x - xc);
                    return Vec3(e[1], -e[0], 0.0);
                };
                for (double t : {0.7, 1.4}) {
                    const double h = 1e-5;
                    double div = 0.0;
                    for (int i = 0; i < 2; ++i) {
                        Vec3 e = Vec3::Zero();
                        e[i] = h;
                        div += ((fam.eval(xc + e, t) * w(xc + e))[i] - (fam.eval(xc - e, t) * w(xc - e))[i]) / (2 * h);
                    }
                    const Vec3 b = (fam.eval(xc, t + h) - fam.eval(xc, t - h)) / (2 * h) * w(xc);
                    CHECK(coeffs.reaction(c, t) == doctest::Approx(div).epsilon(1e-6).scale(1.0));
                    CHECK((coeffs.velocity(c, t) - b).norm() <= 1e-7 * std::max(1.0, b.norm()));
                }
            }
        }
    }

    TEST_CASE("monomials reproduce the expansion") {
        const MeshPtr m = make_unit_square(6);
        for (const char* name : {"D1", "D2", "D3", "D5"}) {
            const AnisotropyFamily fam = wide(name);
            const CoefficientField coeffs = expand_coefficients(fam, solve_field(fam, random_gamma(m, 8)).field);
            for (int c = 0; c < m->num_cells(); c += 5) {
                const auto mono = coeffs.monomials(c);
                for (double t : {0.3, 1.0, 2.5}) {
                    const Vec3 v = mono.velocity[0] + t * mono.velocity[1] + t * t * mono.velocity[2];
                    const double r = mono.reaction[0] + t * mono.reaction[1] + t * t * mono.reaction[2];
                    CHECK((v - coeffs.velocity(c, t)).norm() <= 1e-12);
                    CHECK(r == doctest::Approx(coeffs.reaction(c, t)).epsilon(1e-12).scale(1.0));
                }
            }
        }
    }

    TEST_CASE("hand expansions for uniform fields") {
        const MeshPtr m = make_unit_square(3);
        const auto d2 = hand_expanded_coefficients("D2", uniform_field(m, Vec3(0, 1, 0)));
        const auto d3 = hand_expanded_coefficients("D3", uniform_field(m, Vec3(1, 0, 0)));
        for (int c = 0; c < m->num_cells(); ++c) {
            const auto& a = d2.at(c);
            CHECK(a[0] == 0.0);
            CHECK(a[1] == 0.0);
            CHECK(a[2] == doctest::Approx(0.8));
            CHECK(a[3] == doctest::Approx(0.8));
            CHECK(a[4] == 0.0);
            CHECK(a[6] == 0.0);
            const auto& b = d3.at(c);
            CHECK(b[2] == doctest::Approx(-3.0));
            CHECK(b[4] == doctest::Approx(-0.01));
            CHECK(b[5] == doctest::Approx(0.02));
        }
        CHECK(HandExpandedCoefficients::slot_names("D3").size() == 7);
        CHECK_THROWS_AS(hand_expanded_coefficients("D5", uniform_field(m, Vec3(1, 0, 0))), std::invalid_argument);
    }

    TEST_CASE("corrected expansions of D2, D3, D4 agree with the generic one") {
        const MeshPtr m = make_unit_square(8);
        for (const char* name : {"D2", "D3", "D4"}) {
            const AnisotropyFamily fam = wide(name);
            const FieldSolve s = solve_field(fam, random_gamma(m, 21));
            const CoefficientField coeffs = expand_coefficients(fam, s.field);
            const FieldDerivatives d = field_derivatives(s.field);
            const std::string f = name;
            for (int c = 0; c < m->num_cells(); ++c) {
                const double E1 = d.value[c][0], E2 = d.value[c][1];
                const Mat3& g = d.gradient[c];
                const double E1x = g(0, 0), E1y = g(1, 0), E2x = g(0, 1), E2y = g(1, 1);
                for (double t : {0.5, 1.2, 3.0}) {
                    Vec3 b;
                    double r;
                    if (f == "D2") {
                        b = Vec3(0.8 * (t + 1) * E2, -3 * E1, 0);
                        r = 0.4 * (t + 1) * (t + 1) * E2x - 3 * t * E1y + 0.01 * (E2y - E1x);
                    } else if (f == "D3") {
                        b = Vec3(0.8 * (t + 1) * E2 - 0.01 * (1 - 2 * t) * E1, 0.01 * (1 - 2 * t) * E2 - 3 * E1, 0);
                        r = 0.4 * (t + 1) * (t + 1) * E2x - 0.01 * t * (1 - t) * E1x + 0.01 * t * (1 - t) * E2y -
                            3 * t * E1y;
                    } else {
                        const double p = 1.0 / (t + 20);
                        b = Vec3(0.8 * (t + 1) * E2 + E1 * p * p, -E2 * p * p - 3 * E1, 0);
                        r = 0.4 * (t + 1) * (t + 1) * E2x - E1x * p + E2y * p - 3 * t * E1y;
                    }
                    CHECK((coeffs.velocity(c, t) - b).norm() <= 1e-12);
                    CHECK(std::abs(coeffs.reaction(c, t) - r) <= 1e-12);
                }
            }
        }
    }

    TEST_CASE("hand-expanded D2 list drops the off-diagonal term") {
        const MeshPtr m = make_unit_square(6);
        const AnisotropyFamily fam = wide("D2");
        const FieldSolve s = solve_field(fam, random_gamma(m, 4));
        const CoefficientField coeffs = expand_coefficients(fam, s.field);
        const auto hand = hand_expanded_coefficients("D2", s.field);
        const FieldDerivatives d = field_derivatives(s.field);
        for (int c = 0; c < m->num_cells(); ++c) {
            const double missing = 0.01 * (d.gradient[c](1, 1) - d.gradient[c](0, 0));
            CHECK((hand.velocity(c, 1.3) - coeffs.velocity(c, 1.3)).norm() <= 1e-12);
            CHECK(std::abs(coeffs.reaction(c, 1.3) - hand.reaction(c, 1.3) - missing) <= 1e-12);
        }
    }

    TEST_CASE("Picard: affine family needs one solve and agrees with DG0") {
        auto exact = [](const Vec3& x) { return 1.0 + x[0]; };
        double previous = std::numeric_limits<double>::infinity();
        for (int n : {8, 16, 32}) {
            const MeshPtr m = make_unit_square(n);
            const auto p = drift_problem(m, wide("D1"), [](const Vec3&) { return 1.0; }, exact);
            const PicardResult r = solve_nonlinear(p);
            CHECK(r.iterations == 1);
            CHECK(r.converged);
            const CellField dg = solve_linear_dg(p);
            double gap = 0.0;
            for (int c = 0; c < m->num_cells(); ++c) gap = std::max(gap, std::abs(dg.values[c] - r.gamma.at_centroid(c)));
            CHECK(gap < previous);
            previous = gap;
        }
    }

    TEST_CASE("Picard: nonlinear manufactured problem") {
        // D4 with w = (1, 0): div(A(gamma) w) = 0.8 (gamma + 1) gamma_x - gamma_y / (gamma + 20)^2.
        auto exact = [](const Vec3& x) { return 1.0 + 0.5 * x[0] + 0.25 * x[1] * x[1]; };
        auto source = [&](const Vec3& x) {
            const double g = exact(x);
            return 0.8 * (g + 1.0) * 0.5 - 0.5 * x[1] / ((g + 20.0) * (g + 20.0));
        };
        std::vector<double> errors;
        for (int n : {16, 32}) {
            const MeshPtr m = make_unit_square(n);
            const auto p = drift_problem(m, wide("D4"), source, exact);
            PicardOptions opts;
            opts.max_outer = 60;
            opts.rel_tol = 1e-10;
            const PicardResult r = solve_nonlinear(p, opts);
            CHECK(r.converged);
            CHECK(r.iterations > 1);
            CHECK(nonlinear_residual(p, r.gamma) <= 1e-8);
            errors.push_back(l2_norm(NodalField(m, r.gamma.values - interpolate(m, exact).values)));
        }
        CHECK(errors[0] <= 0.05);
        CHECK(errors[1] < errors[0]);
    }

    TEST_CASE("Picard: non-convergence") {
        auto exact = [](const Vec3& x) { return 1.0 + 0.5 * x[0]; };
        const MeshPtr m = make_unit_square(8);
        const auto p = drift_problem(m, wide("D4"), [](const Vec3&) { return 1.2; }, exact);
        PicardOptions opts;
        opts.max_outer = 1;
        opts.rel_tol = 1e-14;
        try {
            solve_nonlinear(p, opts);
            FAIL("expected SolverError");
        } catch (const SolverError& e) {
            CHECK(e.history().size() == 1);
        }
        opts.accept_last = true;
        const PicardResult r = solve_nonlinear(p, opts);
        CHECK_FALSE(r.converged);
        CHECK(r.history.size() == 1);
        opts.max_outer = 0;
        CHECK_THROWS_AS(solve_nonlinear(p, opts), std::invalid_argument);
        opts.max_outer = 3;
        opts.damping = 0.0;
        CHECK_THROWS_AS(solve_nonlinear(p, opts), std::invalid_argument);
    }
}
