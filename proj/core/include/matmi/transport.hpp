#pragma once

#include "matmi/anisotropy.hpp"
#include "matmi/fields.hpp"
#include "matmi/functional.hpp"
#include "matmi/neumann.hpp"

#include <array>
#include <string>
#include <string_view>
#include <vector>

namespace matmi {

/// Steady transport div(A(x, gamma) E x B0) = F with gamma prescribed on the inflow boundary.
struct TransportProblem {
    AnisotropyFamily family;
    ElectricField field;             // E_k
    FunctionalData data;             // right-hand side F
    NodalField inflow_values;        // boundary trace; only inflow vertices are read
    std::vector<int> inflow_facets;  // boundary facet indices (see flux_inflow)
    NodalField initial;              // starting guess for the Picard loop
    double tol_inflow = 1e-12;
    /// Shift the streamline residual by its defect at `initial` so that it vanishes wherever the
    /// Galerkin operator reproduces the data exactly.
    bool corrected_stabilisation = true;
};

/// Inflow facets of the flux A(x_K, gamma_K) E_K x B0 evaluated at the adjacent cell centroid.
std::vector<int> flux_inflow(const AnisotropyFamily& family, const NodalField& gamma, const ElectricField& field,
                             double tol = 1e-12);

/// Per-cell centroid values of E and of the gradient of its lumped P1 projection, D(i, j) = d_i E_j.
struct FieldDerivatives {
    std::vector<Vec3> value;
    std::vector<Mat3> gradient;
};
FieldDerivatives field_derivatives(const ElectricField& field);

/// Coefficients of the expanded equation b(t) . grad t + r(t) = F, cell by cell:
///   b(t) = dA/dt(x, t) w,  r(t) = sum_ij dA_ij/dx_i(x, t) w_j + A_ij(x, t) d_i w_j,  w = E x B0.
class CoefficientField {
public:
    CoefficientField(const AnisotropyFamily& family, MeshPtr mesh, std::vector<Vec3> flow,
                     std::vector<Mat3> flow_gradient);

    const MeshPtr& mesh() const noexcept { return mesh_; }
    const std::vector<Vec3>& flow() const noexcept { return flow_; }
    const std::vector<Mat3>& flow_gradient() const noexcept { return flow_gradient_; }

    /// No range check on t: the expansion is algebra, not a conductivity evaluation.
    Vec3 velocity(int c, double t) const;
    double reaction(int c, double t) const;

    /// Power-series coefficients up to t^2 (exact when A is at most quadratic in t).
    struct Monomials {
        std::array<Vec3, 3> velocity;
        std::array<double, 3> reaction;
    };
    Monomials monomials(int c) const;

private:
    AnisotropyFamily family_;
    MeshPtr mesh_;
    std::vector<Vec3> flow_;
    std::vector<Mat3> flow_gradient_;
};

CoefficientField expand_coefficients(const AnisotropyFamily& family, const ElectricField& field);

/// Hand-expanded coefficient lists for D2, D3 and D4, transcribed term by term.
///   D2: a1 g^2 + a2 g + a3 g g_x + a4 g_x - a5 g_y + c
///   D3: a1 g^2 + a2 g g_y + a3 g_y + a4 g + a5 g_x + a6 g g_x + c
///   D4: (E2x - E1y) g + E2 g_x - (E2/(g+20)^2 + E1) g_y + (E2y - E1x + E1x/(g+20))/(g+20)
/// For D4 the slots hold (E2x - E1y, E2, E1, E2y - E1x, E1x).
class HandExpandedCoefficients {
public:
    HandExpandedCoefficients(std::string family, std::vector<std::array<double, 7>> values);

    const std::string& family() const noexcept { return family_; }
    static std::vector<std::string> slot_names(std::string_view family);
    const std::array<double, 7>& at(int c) const { return values_[c]; }
    int size() const noexcept { return static_cast<int>(values_.size()); }

    /// The same equation rearranged as b(t) . grad t + r(t).
    Vec3 velocity(int c, double t) const;
    double reaction(int c, double t) const;

private:
    std::string family_;
    std::vector<std::array<double, 7>> values_;
};

HandExpandedCoefficients hand_expanded_coefficients(std::string_view family, const ElectricField& field);

/// DG0 upwind solve for families affine in t. Throws std::invalid_argument for other families and
/// SolverError when cells have no outflow (zero velocity), naming them.
CellField solve_linear_dg(const TransportProblem& problem);

struct PicardOptions {
    int max_outer = 50;
    double rel_tol = 1e-8;
    double damping = 1.0;
    bool accept_last = false;  // return the last iterate instead of throwing
};

struct PicardResult {
    NodalField gamma;
    int iterations = 0;
    bool converged = false;
    std::vector<double> history;  // relative L2 change per outer step
};

/// Continuous P1 with streamline-upwind stabilisation; nonlinear slots frozen at the previous
/// iterate, inflow values imposed at inflow-facet vertices.
PicardResult solve_nonlinear(const TransportProblem& problem, const PicardOptions& opts = {});

/// Discrete nonlinear residual of the stabilised P1 scheme at gamma, relative to the data norm,
/// with inflow rows removed.
double nonlinear_residual(const TransportProblem& problem, const NodalField& gamma);

}  // namespace matmi
