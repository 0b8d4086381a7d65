#pragma once

#include "matmi/anisotropy.hpp"
#include "matmi/fields.hpp"
#include "matmi/neumann.hpp"

#include <functional>
#include <string>
#include <vector>

namespace matmi {

/// The internal functional F = div(A(x, gamma) E x B0) kept as a linear functional on P1.
struct FunctionalData {
    MeshPtr mesh;
    Vector rhs_weak;               // entry i: F tested against hat function i
    NodalField nodal_projection;   // M^{-1} rhs_weak
    int source_mesh_resolution = 0;
};

/// Flux provider: value of a vector field inside cell c at point x.
using CellFlux = std::function<Vec3(int cell, const Vec3& x)>;

/// rhs_i = -int q . grad phi_i dx + int_{dOmega} (q . nu) phi_i ds.
/// Both integrals use degree-2 rules, so they are exact for fluxes quadratic inside every cell.
Vector weak_divergence(const Mesh& mesh, const CellFlux& flux);

/// Value of a P1 field at a point of cell c (no point location).
double value_in_cell(const NodalField& f, int c, const Vec3& x);

/// Flux A(x, gamma(x)) (E(x) x B0). The returned callable references its arguments.
CellFlux conductivity_flux(const AnisotropyFamily& family, const NodalField& gamma, const ElectricField& field);

/// L2 projection of a weak functional onto P1 (consistent mass matrix, CG).
NodalField project_functional(MeshPtr mesh, const Vector& rhs_weak);

/// F(gamma) on `gamma.mesh` from an already solved field.
FunctionalData functional_from_field(const AnisotropyFamily& family, const NodalField& gamma,
                                     const ElectricField& field);

/// Solve the Neumann problem for gamma_star and return its internal functional. With refine > 1
/// the data are generated on a refine-times finer nested mesh and restricted to the coarse hat
/// functions.
FunctionalData synthesize(const AnisotropyFamily& family, const NodalField& gamma_star, int refine = 1,
                          const NeumannOptions& opts = {});
FunctionalData synthesize(const AnisotropyFamily& family, MeshPtr mesh, const ScalarFunction& gamma_star,
                          int refine = 1, const NeumannOptions& opts = {});

/// Weak functional of a pointwise source f (degree-2 quadrature).
FunctionalData functional_from_source(MeshPtr mesh, const ScalarFunction& f);

/// ||F_a - F_b||_{L2} on nodal projections.
double functional_distance(const FunctionalData& a, const FunctionalData& b);

/// Flat little-endian container: magic, mesh hash, sizes, rhs_weak, nodal_projection, checksum.
void write_functional(const FunctionalData& data, const std::string& path);
/// Throws IntegrityError on bad magic, checksum or mesh-hash mismatch.
FunctionalData read_functional(const std::string& path, MeshPtr mesh);
/// x,y,z,F rows for the nodal projection.
void write_functional_csv(const FunctionalData& data, const std::string& path);

}  // namespace matmi
