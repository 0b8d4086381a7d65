#include "matmi/errors.hpp"
#include "matmi/presets.hpp"
#include "matmi/reconstruction.hpp"

#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

using namespace matmi;

namespace {

std::filesystem::path tmp_dir() {
    const auto dir = std::filesystem::path(MATMI_TEST_TMP) / "reconstruction";
    std::filesystem::create_directories(dir);
    return dir;
}

std::string slurp(const std::filesystem::path& p) {
    std::ifstream is(p);
    std::ostringstream os;
    os << is.rdbuf();
    return os.str();
}

ReconConfig constant_truth(const std::string& family, int n, int iterations) {
    ReconConfig cfg;
    cfg.mesh = make_unit_square(n);
    cfg.family = builtin(family).with_range(0.5, 2.0);
    cfg.gamma_star = [](const Vec3&) { return 1.0; };
    cfg.iterations = iterations;
    cfg.admissible = AdmissibleSet::from_lambda(NodalField::constant(cfg.mesh, 1.0), 2.0);
    return cfg;
}

}  // namespace

TEST_SUITE("reconstruction") {
    TEST_CASE("projection clamps and restores the boundary") {
        const MeshPtr m = make_unit_square(4);
        const AdmissibleSet set = AdmissibleSet::from_lambda(NodalField::constant(m, 1.0), 2.0);
        CHECK(set.lower == doctest::Approx(0.5));
        CHECK(set.upper == doctest::Approx(2.0));
        const NodalField trace = NodalField::constant(m, 1.25);
        NodalField g = NodalField::constant(m, 0.1);
        for (int v = 0; v < m->num_vertices(); v += 3) g.values[v] = 7.0;
        const NodalField p = project(g, set, trace);
        for (int v = 0; v < m->num_vertices(); ++v) {
            if (m->is_boundary_vertex(v)) {
                CHECK(p[v] == 1.25);
            } else {
                CHECK(p[v] == (v % 3 == 0 ? 2.0 : 0.5));
            }
        }
        CHECK((project(p, set, trace).values - p.values).norm() == 0.0);
        CHECK_THROWS_AS(AdmissibleSet::from_lambda(NodalField::constant(m, 1.0), 0.5), std::invalid_argument);
        CHECK_THROWS_AS(AdmissibleSet::from_lambda(NodalField::constant(m, 3.0), 2.0), std::invalid_argument);
    }

    TEST_CASE("gradient condition") {
        const MeshPtr m = make_unit_square(6);
        const NodalField g0 = NodalField::constant(m, 1.0);
        CHECK(gradient_condition(g0, g0) == 0.0);
        const NodalField g = interpolate(m, [](const Vec3& x) { return 1.0 + x[0]; });
        CHECK(gradient_condition(g, g0) == doctest::Approx(1.0 / std::sqrt(1.0 / 3.0)));
    }

    TEST_CASE("constant truth is a fixed point") {
        for (const char* fam : {"D1", "D2"}) {
            const ReconTrace t = reconstruct(constant_truth(fam, 8, 3));
            CHECK(t.initial_error <= 1e-12);
            for (const auto& r : t.records) {
                CHECK(r.error_l2 <= 1e-8);
                CHECK(r.residual <= 1e-8);
            }
        }
    }

    TEST_CASE("iterates stay in the box and keep the boundary trace") {
        ReconConfig cfg = preset_config(find_preset("example2"), 16);
        cfg.iterations = 3;
        const ReconTrace t = reconstruct(cfg);
        REQUIRE(t.iterates.size() == 4);
        const NodalField truth = interpolate(cfg.mesh, cfg.gamma_star);
        for (const auto& g : t.iterates) {
            CHECK(g.values.minCoeff() >= cfg.admissible.lower);
            CHECK(g.values.maxCoeff() <= cfg.admissible.upper);
            for (int v : cfg.mesh->boundary_vertices()) CHECK(g[v] == truth[v]);
        }
        CHECK(t.scheme == "picard-p1");
        CHECK(t.picard_history.size() == 3);
        for (const auto& r : t.records) {
            CHECK(std::isfinite(r.smallness));
            CHECK(r.smallness >= 0.0);
            CHECK(r.picard_steps >= 1);
        }
    }

    TEST_CASE("example 1: residual drops, errors plateau without growing") {
        ReconConfig cfg = preset_config(find_preset("example1"), 24);
        cfg.iterations = 6;
        const ReconTrace t = reconstruct(cfg);
        CHECK(t.scheme == "dg0");
        CHECK(t.records.front().residual < t.initial_residual);
        CHECK(t.records.front().error_l2 < t.initial_error);
        for (std::size_t k = 1; k < t.records.size(); ++k) CHECK(t.records[k].ratio <= 1.05);
        for (const auto& e : t.energy) CHECK(e.grad_u_norm <= t.lambda_est * e.etilde_norm);
        for (const auto& h : t.picard_history) CHECK(h.empty());
    }

    TEST_CASE("trace csv is deterministic") {
        ReconConfig cfg = preset_config(find_preset("example1"), 12);
        cfg.iterations = 4;
        const auto a = tmp_dir() / "a.csv", b = tmp_dir() / "b.csv";
        write_trace_csv(reconstruct(cfg), a.string());
        write_trace_csv(reconstruct(cfg), b.string());
        const std::string text = slurp(a);
        CHECK(text == slurp(b));
        CHECK(text.rfind("iteration,error_L2,residual,ratio\n", 0) == 0);
        CHECK(std::count(text.begin(), text.end(), '\n') == 5);
    }

    TEST_CASE("solver failure keeps the partial trace") {
        ReconConfig cfg = preset_config(find_preset("example2"), 12);
        cfg.picard = PicardOptions{1, 1e-14, 1.0, false};
        try {
            reconstruct(cfg);
            FAIL("expected ReconstructionError");
        } catch (const ReconstructionError& e) {
            CHECK(std::string(e.what()).find("transport step 1") != std::string::npos);
            CHECK(e.trace().iterates.size() == 1);
            CHECK(e.trace().records.empty());
        }
    }

    TEST_CASE("configuration is validated") {
        ReconConfig cfg = constant_truth("D1", 4, 2);
        cfg.relaxation = 0.0;
        CHECK_THROWS_AS(reconstruct(cfg), ConfigError);
        cfg.relaxation = 1.5;
        CHECK_THROWS_AS(reconstruct(cfg), ConfigError);
        cfg.relaxation = 1.0;
        cfg.iterations = 0;
        CHECK_THROWS_AS(reconstruct(cfg), ConfigError);
        cfg.iterations = 2;
        cfg.family.reset();
        CHECK_THROWS_AS(reconstruct(cfg), ConfigError);
    }

    TEST_CASE("relaxation slows the first step") {
        ReconConfig full = preset_config(find_preset("example1"), 12);
        full.iterations = 1;
        ReconConfig half = full;
        half.relaxation = 0.5;
        const double e_full = reconstruct(full).records[0].error_l2;
        const double e_half = reconstruct(half).records[0].error_l2;
        const double e0 = reconstruct(full).initial_error;
        CHECK(e_full < e_half);
        CHECK(e_half < e0);
    }

    TEST_CASE("smallness indicator") {
        const MeshPtr m = make_unit_square(8);
        // D1 has dA/dt - I = diag(0, 0, -1) and w has no z part: the indicator vanishes.
        const AnisotropyFamily d1 = builtin("D1").with_range(0.5, 2.0);
        const NodalField g = NodalField::constant(m, 1.0);
        const FieldSolve s = solve_field(d1, g);
        CHECK(smallness_indicator(d1, g, s.field) <= 1e-8);
        const AnisotropyFamily d2 = builtin("D2").with_range(0.5, 2.0);
        const double d2s = smallness_indicator(d2, g, solve_field(d2, g).field);
        CHECK(std::isfinite(d2s));
        CHECK(d2s > 0.0);
    }
}
