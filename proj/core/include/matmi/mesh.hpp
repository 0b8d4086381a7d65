#pragma once

#include <Eigen/Dense>

#include <array>
#include <cstdint>
#include <memory>
#include <optional>
#include <vector>

namespace matmi {

using Vec3 = Eigen::Vector3d;
using Mat3 = Eigen::Matrix3d;

/// Facet on the domain boundary. Vertex slots beyond `dim` are unused (-1).
struct BoundaryFacet {
    int cell = -1;
    int local_id = -1;  // index of the cell vertex opposite this facet
    std::array<int, 3> vertices{-1, -1, -1};
    Vec3 normal = Vec3::Zero();  // outward unit normal
    double measure = 0.0;        // length (2D) or area (3D)
};

/// Facet shared by two cells. `normal` points from `cell_a` into `cell_b`.
struct InteriorFacet {
    int cell_a = -1;
    int cell_b = -1;
    std::array<int, 3> vertices{-1, -1, -1};
    Vec3 normal = Vec3::Zero();
    double measure = 0.0;
};

/// Point location result: containing cell plus barycentric weights of its vertices.
struct PointLocation {
    int cell = -1;
    std::array<double, 4> weights{0.0, 0.0, 0.0, 0.0};
};

/// Structured simplicial mesh of the unit square (triangles) or unit cube (tetrahedra).
///
/// Points are always stored as 3-vectors; in 2D the z coordinate is zero and every
/// per-cell gradient has a zero z component, so 3x3 tensors acting on them reduce to
/// their upper-left 2x2 block automatically.
class Mesh {
public:
    int dim() const noexcept { return dim_; }
    int resolution() const noexcept { return n_; }
    int num_vertices() const noexcept { return static_cast<int>(vertices_.size()); }
    int num_cells() const noexcept { return static_cast<int>(cells_.size()); }
    int vertices_per_cell() const noexcept { return dim_ + 1; }

    const std::vector<Vec3>& vertices() const noexcept { return vertices_; }
    const Vec3& vertex(int v) const { return vertices_[v]; }
    const std::vector<std::array<int, 4>>& cells() const noexcept { return cells_; }
    const std::array<int, 4>& cell(int c) const { return cells_[c]; }

    const std::vector<BoundaryFacet>& boundary_facets() const noexcept { return boundary_facets_; }
    const std::vector<InteriorFacet>& interior_facets() const noexcept { return interior_facets_; }

    double volume(int c) const { return volumes_[c]; }
    const Vec3& centroid(int c) const { return centroids_[c]; }
    /// Gradient of the barycentric (P1 hat) function of local vertex `local` in cell `c`.
    const Vec3& grad_basis(int c, int local) const { return grads_[c][local]; }
    /// Longest edge of the cell.
    double diameter(int c) const { return diameters_[c]; }
    double max_diameter() const noexcept { return max_diameter_; }

    bool is_boundary_vertex(int v) const { return boundary_vertex_[v] != 0; }
    const std::vector<int>& boundary_vertices() const noexcept { return boundary_vertex_list_; }

    /// Cells touching each vertex.
    const std::vector<std::vector<int>>& vertex_cells() const noexcept { return vertex_cells_; }

    /// Locates a point of the closed unit square/cube. Returns nullopt outside.
    std::optional<PointLocation> locate(const Vec3& p) const;

    /// Content hash over dimension, resolution, coordinates and connectivity.
    std::uint64_t hash() const noexcept { return hash_; }

    friend Mesh build_unit_square(int n);
    friend Mesh build_unit_cube(int n);

private:
    Mesh() = default;
    void finalize();

    int dim_ = 2;
    int n_ = 0;
    std::vector<Vec3> vertices_;
    std::vector<std::array<int, 4>> cells_;
    std::vector<BoundaryFacet> boundary_facets_;
    std::vector<InteriorFacet> interior_facets_;
    std::vector<double> volumes_;
    std::vector<Vec3> centroids_;
    std::vector<std::array<Vec3, 4>> grads_;
    std::vector<double> diameters_;
    double max_diameter_ = 0.0;
    std::vector<char> boundary_vertex_;
    std::vector<int> boundary_vertex_list_;
    std::vector<std::vector<int>> vertex_cells_;
    std::uint64_t hash_ = 0;
};

using MeshPtr = std::shared_ptr<const Mesh>;

/// 2n^2 triangles, every grid square split along its lower-left to upper-right diagonal.
Mesh build_unit_square(int n);

/// 6n^3 tetrahedra, every grid cube split into the six Kuhn simplices around its main diagonal.
Mesh build_unit_cube(int n);

inline MeshPtr make_unit_square(int n) { return std::make_shared<const Mesh>(build_unit_square(n)); }
inline MeshPtr make_unit_cube(int n) { return std::make_shared<const Mesh>(build_unit_cube(n)); }

/// Boundary facets whose adjacent-cell velocity has v . nu < -tol.
/// `velocity` holds one vector per cell.
std::vector<int> classify_inflow(const Mesh& mesh, const std::vector<Vec3>& velocity, double tol = 1e-12);

/// Barycentric coordinates of `p` with respect to cell `c` (may be negative outside).
std::array<double, 4> barycentric(const Mesh& mesh, int c, const Vec3& p);

}  // namespace matmi
