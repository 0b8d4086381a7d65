#include "matmi/fields.hpp"

#include <cmath>
#include <stdexcept>

namespace matmi {

NodalField::NodalField(MeshPtr m, Vector v) : mesh(std::move(m)), values(std::move(v)) {
    if (!mesh) throw std::invalid_argument("NodalField: null mesh");
    if (values.size() != mesh->num_vertices())
        throw std::invalid_argument("NodalField: length must equal the vertex count");
}

NodalField NodalField::constant(MeshPtr m, double value) {
    const int nv = m->num_vertices();
    return NodalField(std::move(m), Vector::Constant(nv, value));
}

double NodalField::at_centroid(int c) const {
    const auto& cell = mesh->cell(c);
    const int npc = mesh->vertices_per_cell();
    double s = 0.0;
    for (int k = 0; k < npc; ++k) s += values[cell[k]];
    return s / npc;
}

Vec3 NodalField::gradient(int c) const {
    const auto& cell = mesh->cell(c);
    Vec3 g = Vec3::Zero();
    for (int k = 0; k < mesh->vertices_per_cell(); ++k) g += values[cell[k]] * mesh->grad_basis(c, k);
    return g;
}

double NodalField::evaluate(const Vec3& p) const {
    const auto loc = mesh->locate(p);
    if (!loc) throw std::out_of_range("NodalField::evaluate: point outside the domain");
    const auto& cell = mesh->cell(loc->cell);
    double s = 0.0;
    for (int k = 0; k < mesh->vertices_per_cell(); ++k) s += loc->weights[k] * values[cell[k]];
    return s;
}

NodalField interpolate(MeshPtr mesh, const ScalarFunction& f) {
    Vector v(mesh->num_vertices());
    for (int i = 0; i < mesh->num_vertices(); ++i) v[i] = f(mesh->vertex(i));
    return NodalField(std::move(mesh), std::move(v));
}

namespace {

double element_mass_factor(const Mesh& mesh) { return mesh.dim() == 2 ? 1.0 / 12.0 : 1.0 / 20.0; }

}  // namespace

double l2_inner(const NodalField& a, const NodalField& b) {
    const Mesh& mesh = *a.mesh;
    const int npc = mesh.vertices_per_cell();
    const double f = element_mass_factor(mesh);
    double total = 0.0;
    for (int c = 0; c < mesh.num_cells(); ++c) {
        const auto& cell = mesh.cell(c);
        double sa = 0.0, sb = 0.0, diag = 0.0;
        for (int k = 0; k < npc; ++k) {
            sa += a.values[cell[k]];
            sb += b.values[cell[k]];
            diag += a.values[cell[k]] * b.values[cell[k]];
        }
        // M_K = f |K| (1 1^T + I)
        total += f * mesh.volume(c) * (sa * sb + diag);
    }
    return total;
}

double l2_norm(const NodalField& u) { return std::sqrt(std::max(0.0, l2_inner(u, u))); }

double l2_norm(const CellField& u) {
    double s = 0.0;
    for (int c = 0; c < u.mesh->num_cells(); ++c) s += u.mesh->volume(c) * u.values[c] * u.values[c];
    return std::sqrt(s);
}

double l2_norm(const CellVectorField& u) {
    double s = 0.0;
    for (int c = 0; c < u.mesh->num_cells(); ++c) s += u.mesh->volume(c) * u.values[c].squaredNorm();
    return std::sqrt(s);
}

double grad_l2_norm(const NodalField& u) {
    double s = 0.0;
    for (int c = 0; c < u.mesh->num_cells(); ++c) s += u.mesh->volume(c) * u.gradient(c).squaredNorm();
    return std::sqrt(s);
}

SparseMatrix mass_matrix(const Mesh& mesh) {
    const int npc = mesh.vertices_per_cell();
    const double f = element_mass_factor(mesh);
    std::vector<Eigen::Triplet<double>> trip;
    trip.reserve(static_cast<std::size_t>(mesh.num_cells()) * npc * npc);
    for (int c = 0; c < mesh.num_cells(); ++c) {
        const auto& cell = mesh.cell(c);
        const double vol = mesh.volume(c);
        for (int a = 0; a < npc; ++a)
            for (int b = 0; b < npc; ++b) trip.emplace_back(cell[a], cell[b], f * vol * (a == b ? 2.0 : 1.0));
    }
    SparseMatrix M(mesh.num_vertices(), mesh.num_vertices());
    M.setFromTriplets(trip.begin(), trip.end());
    return M;
}

Vector lumped_mass(const Mesh& mesh) {
    Vector m = Vector::Zero(mesh.num_vertices());
    const int npc = mesh.vertices_per_cell();
    for (int c = 0; c < mesh.num_cells(); ++c)
        for (int k = 0; k < npc; ++k) m[mesh.cell(c)[k]] += mesh.volume(c) / npc;
    return m;
}

NodalField lumped_projection(const CellField& u) {
    const Mesh& mesh = *u.mesh;
    Vector acc = Vector::Zero(mesh.num_vertices());
    Vector w = Vector::Zero(mesh.num_vertices());
    for (int c = 0; c < mesh.num_cells(); ++c) {
        for (int k = 0; k < mesh.vertices_per_cell(); ++k) {
            acc[mesh.cell(c)[k]] += mesh.volume(c) * u.values[c];
            w[mesh.cell(c)[k]] += mesh.volume(c);
        }
    }
    return NodalField(u.mesh, acc.cwiseQuotient(w));
}

std::array<NodalField, 3> lumped_projection(const CellVectorField& u) {
    std::array<NodalField, 3> out;
    for (int d = 0; d < 3; ++d) {
        CellField comp{u.mesh, Vector(u.mesh->num_cells())};
        for (int c = 0; c < u.mesh->num_cells(); ++c) comp.values[c] = u.values[c][d];
        out[d] = lumped_projection(comp);
    }
    return out;
}

std::vector<QuadraturePoint> cell_quadrature_degree2(const Mesh& mesh, int c) {
    const auto& cell = mesh.cell(c);
    const double vol = mesh.volume(c);
    std::vector<QuadraturePoint> pts;
    if (mesh.dim() == 2) {
        static constexpr int edges[3][2] = {{0, 1}, {1, 2}, {2, 0}};
        for (const auto& e : edges) {
            QuadraturePoint q;
            q.bary = {0.0, 0.0, 0.0, 0.0};
            q.bary[e[0]] = 0.5;
            q.bary[e[1]] = 0.5;
            q.x = 0.5 * (mesh.vertex(cell[e[0]]) + mesh.vertex(cell[e[1]]));
            q.weight = vol / 3.0;
            pts.push_back(q);
        }
    } else {
        constexpr double a = 0.5854101966249685;
        constexpr double b = 0.1381966011250105;
        for (int k = 0; k < 4; ++k) {
            QuadraturePoint q;
            q.bary = {b, b, b, b};
            q.bary[k] = a;
            q.x = Vec3::Zero();
            for (int j = 0; j < 4; ++j) q.x += q.bary[j] * mesh.vertex(cell[j]);
            q.weight = vol / 4.0;
            pts.push_back(q);
        }
    }
    return pts;
}

std::vector<QuadraturePoint> facet_quadrature_degree2(const Mesh& mesh, const std::array<int, 3>& v) {
    std::vector<QuadraturePoint> pts;
    if (mesh.dim() == 2) {
        const double len = (mesh.vertex(v[1]) - mesh.vertex(v[0])).norm();
        const double g = 0.5 / std::sqrt(3.0);
        for (double s : {0.5 - g, 0.5 + g}) {
            QuadraturePoint q;
            q.bary = {1.0 - s, s, 0.0, 0.0};
            q.x = (1.0 - s) * mesh.vertex(v[0]) + s * mesh.vertex(v[1]);
            q.weight = 0.5 * len;
            pts.push_back(q);
        }
    } else {
        const double area =
            0.5 * (mesh.vertex(v[1]) - mesh.vertex(v[0])).cross(mesh.vertex(v[2]) - mesh.vertex(v[0])).norm();
        static constexpr int edges[3][2] = {{0, 1}, {1, 2}, {2, 0}};
        for (const auto& e : edges) {
            QuadraturePoint q;
            q.bary = {0.0, 0.0, 0.0, 0.0};
            q.bary[e[0]] = 0.5;
            q.bary[e[1]] = 0.5;
            q.x = 0.5 * (mesh.vertex(v[e[0]]) + mesh.vertex(v[e[1]]));
            q.weight = area / 3.0;
            pts.push_back(q);
        }
    }
    return pts;
}

double integrate(const Mesh& mesh, const ScalarFunction& f) {
    double s = 0.0;
    for (int c = 0; c < mesh.num_cells(); ++c)
        for (const auto& q : cell_quadrature_degree2(mesh, c)) s += q.weight * f(q.x);
    return s;
}

}  // namespace matmi
