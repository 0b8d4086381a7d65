#pragma once

#include "matmi/mesh.hpp"

#include <Eigen/Sparse>

#include <functional>
#include <vector>

namespace matmi {

using SparseMatrix = Eigen::SparseMatrix<double, Eigen::RowMajor>;
using Vector = Eigen::VectorXd;
using ScalarFunction = std::function<double(const Vec3&)>;

/// Continuous piecewise-linear field, one value per mesh vertex.
struct NodalField {
    MeshPtr mesh;
    Vector values;

    NodalField() = default;
    NodalField(MeshPtr m, Vector v);
    static NodalField constant(MeshPtr m, double value);

    double operator[](int v) const { return values[v]; }
    /// Value at the centroid of cell `c` (the mean of its vertex values).
    double at_centroid(int c) const;
    Vec3 gradient(int c) const;
    /// Point evaluation; throws std::out_of_range outside the domain.
    double evaluate(const Vec3& p) const;
};

/// Piecewise-constant scalar field, one value per cell.
struct CellField {
    MeshPtr mesh;
    Vector values;
};

/// Piecewise-constant vector field, one 3-vector per cell.
struct CellVectorField {
    MeshPtr mesh;
    std::vector<Vec3> values;
};

NodalField interpolate(MeshPtr mesh, const ScalarFunction& f);

/// Exact L2 norm of a P1 field (element mass matrices).
double l2_norm(const NodalField& u);
double l2_norm(const CellField& u);
double l2_norm(const CellVectorField& u);
/// || grad u ||_{L2} for a P1 field.
double grad_l2_norm(const NodalField& u);
/// Exact L2 inner product of two P1 fields on the same mesh.
double l2_inner(const NodalField& a, const NodalField& b);

/// Consistent P1 mass matrix.
SparseMatrix mass_matrix(const Mesh& mesh);
/// Row sums of the consistent mass matrix, i.e. integral of each hat function.
Vector lumped_mass(const Mesh& mesh);

/// Lumped-mass L2 projection of a cellwise constant field to P1 (volume-weighted vertex averages).
NodalField lumped_projection(const CellField& u);
/// Componentwise lumped projection of a cellwise constant vector field.
std::array<NodalField, 3> lumped_projection(const CellVectorField& u);

/// Degree-2 exact quadrature over the whole domain.
double integrate(const Mesh& mesh, const ScalarFunction& f);

/// Quadrature points and weights (weights sum to the cell volume) exact for degree 2.
struct QuadraturePoint {
    Vec3 x;
    double weight;
    std::array<double, 4> bary;
};
std::vector<QuadraturePoint> cell_quadrature_degree2(const Mesh& mesh, int c);
/// Points on a boundary facet exact for degree 2 in the facet parameters.
/// `bary` holds the weights of the facet's own vertices.
std::vector<QuadraturePoint> facet_quadrature_degree2(const Mesh& mesh, const std::array<int, 3>& vertices);

}  // namespace matmi
