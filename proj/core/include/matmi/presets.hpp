#pragma once

#include "matmi/anisotropy.hpp"
#include "matmi/fields.hpp"
#include "matmi/reconstruction.hpp"

#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace matmi {

struct ExperimentPreset {
    std::string name;       // example1 .. example6
    std::string family;     // builtin family name
    std::string formula;    // human-readable gamma*
    ScalarFunction gamma_star;
    int dim = 2;
    int n = 48;             // default resolution
    int verify_n = 48;      // resolution used by verify
    int iterations = 10;
    double relaxation = 1.0;
    PicardOptions picard{100, 1e-8, 1.0, true};
    TransportScheme scheme = TransportScheme::Auto;
};

const std::vector<ExperimentPreset>& presets();
/// Throws ConfigError for unknown names.
const ExperimentPreset& find_preset(std::string_view name);

MeshPtr preset_mesh(const ExperimentPreset& preset, int n);

/// [min gamma* - margin, max gamma* + margin] over the mesh vertices. A non-positive lower end is
/// replaced by half the smallest vertex value, because every built-in family degenerates at t = 0.
std::pair<double, double> default_t_range(const ScalarFunction& gamma_star, const Mesh& mesh, double margin = 0.5);
std::pair<double, double> default_t_range(const ExperimentPreset& preset, const Mesh& mesh, double margin = 0.5);

/// Family restricted to the default range, admissible box equal to that range, gamma0 = 1.
ReconConfig preset_config(const ExperimentPreset& preset, int n);

/// Height levels of the 3D slice export.
inline const std::vector<double>& slice_levels() {
    static const std::vector<double> z{0.0, 0.282, 0.513, 0.718, 0.897};
    return z;
}

}  // namespace matmi
