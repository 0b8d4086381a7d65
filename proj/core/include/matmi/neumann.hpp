#pragma once

#include "matmi/anisotropy.hpp"
#include "matmi/fields.hpp"
#include "matmi/linalg.hpp"

#include <string>
#include <vector>

namespace matmi {

/// Background field with curl equal to B0 = (0, 0, 1): 1/2 (-x2, x1, 0).
inline Vec3 etilde(const Vec3& x) { return Vec3(-0.5 * x[1], 0.5 * x[0], 0.0); }

/// E x B0 for B0 = (0, 0, 1).
inline Vec3 cross_b0(const Vec3& e) { return Vec3(e[1], -e[0], 0.0); }

enum class Quadrature { Centroid, Degree2 };

struct SparseSystem {
    MeshPtr mesh;
    SparseMatrix matrix;
    Vector rhs;
};

/// Stiffness K_ij = int A(x, gamma) grad phi_j . grad phi_i and load b_i = -int A(x, gamma) E~ . grad phi_i.
/// Throws OutOfRangeError naming the first vertex whose gamma value leaves the family range.
SparseSystem assemble(const AnisotropyFamily& family, const NodalField& gamma,
                      Quadrature quadrature = Quadrature::Centroid);

struct NeumannOptions {
    double tol = 1e-10;
    int max_iter = 0;  // 0: 10 * vertex count
    bool jacobi = false;
    Quadrature quadrature = Quadrature::Centroid;
};

/// Mean-zero solution of the singular Neumann system by projected CG.
/// `iterations`, when given, receives the CG iteration count.
NodalField solve_mean_zero(const SparseSystem& system, const NeumannOptions& opts = {}, int* iterations = nullptr);

/// Electric field E = grad u + E~ with grad u constant per cell and E~ kept exact (linear).
class ElectricField {
public:
    ElectricField() = default;
    ElectricField(MeshPtr mesh, std::vector<Vec3> gradient_part, bool with_background = true);

    const MeshPtr& mesh() const noexcept { return mesh_; }
    const std::vector<Vec3>& gradient_part() const noexcept { return grad_; }
    bool with_background() const noexcept { return background_; }

    /// Field restricted to cell c, evaluated at x.
    Vec3 at(int c, const Vec3& x) const { return background_ ? Vec3(grad_[c] + etilde(x)) : grad_[c]; }
    Vec3 at_centroid(int c) const { return at(c, mesh_->centroid(c)); }
    /// Per-cell centroid values.
    CellVectorField values() const;

private:
    MeshPtr mesh_;
    std::vector<Vec3> grad_;
    bool background_ = true;
};

ElectricField electric_field(const NodalField& u);

struct FieldSolve {
    NodalField potential;
    ElectricField field;
    double grad_u_norm = 0.0;     // ||grad u||_{L2}
    double etilde_norm = 0.0;     // ||E~||_{L2}
    int cg_iterations = 0;
};

/// Assemble, solve and form E for conductivity A(x, gamma(x)).
FieldSolve solve_field(const AnisotropyFamily& family, const NodalField& gamma, const NeumannOptions& opts = {});

/// ||E~||_{L2(Omega)} by degree-2 quadrature (exact for the quadratic integrand).
double etilde_l2_norm(const Mesh& mesh);

/// Matrix Market coordinate dump of the stiffness matrix and array dump of the load vector.
void write_matrix_market(const SparseMatrix& matrix, const std::string& path);
void write_matrix_market(const Vector& vector, const std::string& path);

}  // namespace matmi
