#pragma once

#include "matmi/anisotropy.hpp"
#include "matmi/fields.hpp"
#include "matmi/neumann.hpp"
#include "matmi/reconstruction.hpp"

#include <cstdint>
#include <limits>
#include <string>
#include <utility>
#include <vector>

namespace matmi {

/// One (gamma_1, gamma_2) comparison.
struct StabilityPair {
    std::string label;
    double gamma_diff = 0.0;       // ||gamma_1 - gamma_2||_{L2}
    double functional_diff = 0.0;  // ||F_1 - F_2||_{L2} on nodal projections
    double ratio = 0.0;            // gamma_diff / functional_diff; NaN when functional_diff == 0
    double grad_condition = 0.0;   // ||grad(gamma_1 - gamma_2)|| / ||gamma_1 - gamma_2||
    bool skipped = false;          // perturbed field left the family range
};

struct StabilityReport {
    std::string family;
    int resolution = 0;
    double grad_const = std::numeric_limits<double>::infinity();
    std::vector<StabilityPair> pairs;
    std::vector<std::string> log;

    /// Pairs that enter the ratio statistics: not skipped, finite ratio.
    std::vector<double> ratios() const;
    double max_ratio() const;
    double mean_ratio() const;
    /// A stability verdict is only meaningful when every pair meets the gradient condition.
    bool verdict_available() const;
};

/// Compare F(gamma_1) and F(gamma_2) (refine = 1). Both fields must share one mesh.
StabilityPair compare_pair(const AnisotropyFamily& family, const NodalField& gamma_1, const NodalField& gamma_2,
                           std::string label = {}, const NeumannOptions& opts = {});

/// F(base) against F(base + delta) for every delta. Each delta must vanish on boundary vertices
/// (std::invalid_argument otherwise); a delta that leaves the family range is skipped and logged.
StabilityReport stability_sweep(const AnisotropyFamily& family, const NodalField& base,
                                const std::vector<NodalField>& perturbations,
                                double grad_const = std::numeric_limits<double>::infinity(),
                                const NeumannOptions& opts = {});

/// `count` random sine series sum_{m,n(,l) <= modes} c sin(m pi x) sin(n pi y) (sin(l pi z)), each
/// scaled to max |delta| = amplitude. They vanish on the boundary. Deterministic in `seed`.
std::vector<NodalField> smooth_perturbations(MeshPtr mesh, int count, double amplitude, std::uint64_t seed,
                                             int modes = 3);

struct FieldDifferenceRow {
    std::string label;
    double gamma_diff = 0.0;
    double field_diff = 0.0;  // ||E_1 - E_2||_{L2}
    double ratio = 0.0;       // field_diff / gamma_diff; NaN when gamma_diff == 0
    bool skipped = false;
};

struct FieldDifferenceReport {
    std::string family;
    int resolution = 0;
    std::vector<FieldDifferenceRow> rows;
    std::vector<std::string> log;

    double max_ratio() const;  // NaN when no row has a finite ratio
};

FieldDifferenceReport field_difference_sweep(const AnisotropyFamily& family,
                                             const std::vector<std::pair<NodalField, NodalField>>& pairs,
                                             const NeumannOptions& opts = {});

struct ContractionReport {
    std::vector<double> errors;  // e_1 .. e_{K+1}
    std::vector<double> ratios;  // rho_k = e_{k+1} / e_k
    std::vector<bool> counted;   // e_k above the threshold
    double geometric_mean = std::numeric_limits<double>::quiet_NaN();
    bool contractive = false;
};

/// Needs at least three ratios (std::invalid_argument otherwise). Ratios whose e_k does not
/// exceed `threshold` are left out of the geometric mean.
ContractionReport contraction_report(const std::vector<double>& errors, double threshold = 1e-9);
ContractionReport contraction_report(const ReconTrace& trace, double threshold = 1e-9);

/// label,gamma_diff,functional_diff,ratio,grad_condition,skipped
void write_stability_csv(const StabilityReport& report, const std::string& path);
/// label,gamma_diff,field_diff,ratio,skipped
void write_field_difference_csv(const FieldDifferenceReport& report, const std::string& path);
/// iteration,error_L2,ratio,counted
void write_contraction_csv(const ContractionReport& report, const std::string& path);

}  // namespace matmi
