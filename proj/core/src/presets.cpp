#include "matmi/presets.hpp"

#include "matmi/errors.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace matmi {

namespace {

double gauss(double x, double y, double cx, double cy, double s) {
    return std::exp(-(x - cx) * (x - cx) / s - (y - cy) * (y - cy) / s);
}

std::vector<ExperimentPreset> make_presets() {
    std::vector<ExperimentPreset> out;

    ExperimentPreset e1;
    e1.name = "example1";
    e1.family = "D1";
    e1.formula = "exp(-(x-0.5)^2/0.02 - (y-0.5)^2/0.02) + 1";
    e1.gamma_star = [](const Vec3& p) { return gauss(p[0], p[1], 0.5, 0.5, 0.02) + 1.0; };
    out.push_back(e1);

    ExperimentPreset e2;
    e2.name = "example2";
    e2.family = "D2";
    e2.formula = "exp(-(x-0.65)^2/0.02 - (y-0.65)^2/0.02) + 0.5 exp(-(x-0.25)^2/0.05 - (y-0.25)^2/0.05)";
    e2.gamma_star = [](const Vec3& p) {
        return gauss(p[0], p[1], 0.65, 0.65, 0.02) + 0.5 * gauss(p[0], p[1], 0.25, 0.25, 0.05);
    };
    out.push_back(e2);

    ExperimentPreset e3;
    e3.name = "example3";
    e3.family = "D3";
    e3.formula = "cos(75(x-0.5)^2 + 75(y-0.5)^2) exp(-(x-0.5)^2/2 - (y-0.5)^2/2) + 1";
    e3.gamma_star = [](const Vec3& p) {
        const double dx = p[0] - 0.5, dy = p[1] - 0.5;
        return std::cos(75.0 * dx * dx + 75.0 * dy * dy) * std::exp(-dx * dx / 2.0 - dy * dy / 2.0) + 1.0;
    };
    e3.verify_n = 64;
    e3.relaxation = 0.5;
    out.push_back(e3);

    ExperimentPreset e4;
    e4.name = "example4";
    e4.family = "D4";
    e4.formula = "1 + 5(x-0.3) on [0.3,0.5]; 2 - 5(x-0.5) on [0.5,0.7]; 1 elsewhere";
    e4.gamma_star = [](const Vec3& p) {
        const double x = p[0];
        if (x >= 0.3 && x <= 0.5) return 1.0 + 5.0 * (x - 0.3);
        if (x >= 0.5 && x <= 0.7) return 2.0 - 5.0 * (x - 0.5);
        return 1.0;
    };
    out.push_back(e4);

    ExperimentPreset e5;
    e5.name = "example5";
    e5.family = "D5";
    e5.formula = "sin(10x) sin(5y) sin(7(1-x)) sin(y-1) + 1";
    e5.gamma_star = [](const Vec3& p) {
        return std::sin(10.0 * p[0]) * std::sin(5.0 * p[1]) * std::sin(7.0 * (1.0 - p[0])) * std::sin(p[1] - 1.0) +
               1.0;
    };
    out.push_back(e5);

    ExperimentPreset e6;
    e6.name = "example6";
    e6.family = "D6";
    e6.formula = "2 inside (x-0.5)^2 + (y-0.5)^2 + (z-0.5)^2 <= 0.4, 1 elsewhere";
    e6.gamma_star = [](const Vec3& p) {
        const double r2 = (p[0] - 0.5) * (p[0] - 0.5) + (p[1] - 0.5) * (p[1] - 0.5) + (p[2] - 0.5) * (p[2] - 0.5);
        return r2 <= 0.4 ? 2.0 : 1.0;
    };
    e6.dim = 3;
    e6.n = 16;
    e6.verify_n = 16;
    out.push_back(e6);

    return out;
}

}  // namespace

const std::vector<ExperimentPreset>& presets() {
    static const std::vector<ExperimentPreset> all = make_presets();
    return all;
}

const ExperimentPreset& find_preset(std::string_view name) {
    for (const auto& p : presets())
        if (p.name == name) return p;
    throw ConfigError("unknown preset: " + std::string(name));
}

MeshPtr preset_mesh(const ExperimentPreset& preset, int n) {
    return preset.dim == 3 ? make_unit_cube(n) : make_unit_square(n);
}

std::pair<double, double> default_t_range(const ExperimentPreset& preset, const Mesh& mesh, double margin) {
    return default_t_range(preset.gamma_star, mesh, margin);
}

std::pair<double, double> default_t_range(const ScalarFunction& gamma_star, const Mesh& mesh, double margin) {
    double lo = std::numeric_limits<double>::infinity(), hi = -lo;
    for (const auto& v : mesh.vertices()) {
        const double g = gamma_star(v);
        lo = std::min(lo, g);
        hi = std::max(hi, g);
    }
    double lower = lo - margin;
    if (lower <= 0.0) lower = 0.5 * lo;
    return {lower, hi + margin};
}

ReconConfig preset_config(const ExperimentPreset& preset, int n) {
    ReconConfig cfg;
    cfg.mesh = preset_mesh(preset, n);
    const auto [lo, hi] = default_t_range(preset, *cfg.mesh);
    cfg.family = builtin(preset.family).with_range(lo, hi);
    cfg.gamma_star = preset.gamma_star;
    cfg.iterations = preset.iterations;
    cfg.scheme = preset.scheme;
    cfg.relaxation = preset.relaxation;
    cfg.picard = preset.picard;
    cfg.admissible.gamma0 = NodalField::constant(cfg.mesh, 1.0);
    cfg.admissible.lower = lo;
    cfg.admissible.upper = hi;
    return cfg;
}

}  // namespace matmi
