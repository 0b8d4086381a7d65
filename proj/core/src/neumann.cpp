#include "matmi/neumann.hpp"

#include "matmi/errors.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <iomanip>
#include <sstream>

namespace matmi {

SparseSystem assemble(const AnisotropyFamily& family, const NodalField& gamma, Quadrature quadrature) {
    const Mesh& mesh = *gamma.mesh;
    for (int v = 0; v < mesh.num_vertices(); ++v) {
        if (!std::isfinite(gamma[v]) || !family.in_range(gamma[v])) {
            std::ostringstream msg;
            msg << "assemble: gamma = " << gamma[v] << " at vertex " << v << " (" << mesh.vertex(v).transpose()
                << ") outside [" << family.t_min() << ", " << family.t_max() << "]";
            throw OutOfRangeError(msg.str());
        }
    }

    const int npc = mesh.vertices_per_cell();
    std::vector<Eigen::Triplet<double>> trip;
    trip.reserve(static_cast<std::size_t>(mesh.num_cells()) * npc * npc);
    Vector rhs = Vector::Zero(mesh.num_vertices());

    for (int c = 0; c < mesh.num_cells(); ++c) {
        const auto& cell = mesh.cell(c);
        // A averaged over the cell together with A E~, both by the selected rule.
        Mat3 a_avg = Mat3::Zero();
        Vec3 ae_avg = Vec3::Zero();
        if (quadrature == Quadrature::Centroid) {
            const Vec3& xc = mesh.centroid(c);
            a_avg = family.eval(xc, gamma.at_centroid(c));
            ae_avg = a_avg * etilde(xc);
        } else {
            const double vol = mesh.volume(c);
            for (const auto& q : cell_quadrature_degree2(mesh, c)) {
                double g = 0.0;
                for (int k = 0; k < npc; ++k) g += q.bary[k] * gamma[cell[k]];
                const Mat3 a = family.eval(q.x, g);
                a_avg += (q.weight / vol) * a;
                ae_avg += (q.weight / vol) * (a * etilde(q.x));
            }
        }
        const double vol = mesh.volume(c);
        for (int i = 0; i < npc; ++i) {
            const Vec3& gi = mesh.grad_basis(c, i);
            rhs[cell[i]] -= vol * ae_avg.dot(gi);
            for (int j = 0; j < npc; ++j) {
                trip.emplace_back(cell[i], cell[j], vol * (a_avg * mesh.grad_basis(c, j)).dot(gi));
            }
        }
    }
    SparseSystem sys;
    sys.mesh = gamma.mesh;
    sys.matrix.resize(mesh.num_vertices(), mesh.num_vertices());
    sys.matrix.setFromTriplets(trip.begin(), trip.end());
    sys.rhs = std::move(rhs);
    return sys;
}

NodalField solve_mean_zero(const SparseSystem& system, const NeumannOptions& opts, int* iterations) {
    CgOptions cg;
    cg.tol = opts.tol;
    cg.max_iter = opts.max_iter;
    cg.jacobi = opts.jacobi;
    cg.project_constants = true;
    CgResult res = conjugate_gradient(system.matrix, system.rhs, cg);
    if (iterations) *iterations = res.iterations;
    NodalField u(system.mesh, std::move(res.x));
    // zero mean in the L2 sense
    const Vector m = lumped_mass(*system.mesh);
    const double mean = m.dot(u.values) / m.sum();
    u.values.array() -= mean;
    return u;
}

ElectricField::ElectricField(MeshPtr mesh, std::vector<Vec3> gradient_part, bool with_background)
    : mesh_(std::move(mesh)), grad_(std::move(gradient_part)), background_(with_background) {
    if (static_cast<int>(grad_.size()) != mesh_->num_cells())
        throw std::invalid_argument("ElectricField: one vector per cell required");
}

CellVectorField ElectricField::values() const {
    CellVectorField out{mesh_, std::vector<Vec3>(grad_.size())};
    for (int c = 0; c < mesh_->num_cells(); ++c) out.values[c] = at_centroid(c);
    return out;
}

ElectricField electric_field(const NodalField& u) {
    std::vector<Vec3> g(u.mesh->num_cells());
    for (int c = 0; c < u.mesh->num_cells(); ++c) g[c] = u.gradient(c);
    return ElectricField(u.mesh, std::move(g), true);
}

double etilde_l2_norm(const Mesh& mesh) {
    return std::sqrt(integrate(mesh, [](const Vec3& x) { return etilde(x).squaredNorm(); }));
}

FieldSolve solve_field(const AnisotropyFamily& family, const NodalField& gamma, const NeumannOptions& opts) {
    const SparseSystem sys = assemble(family, gamma, opts.quadrature);
    int iterations = 0;
    NodalField u = solve_mean_zero(sys, opts, &iterations);
    FieldSolve out{u, electric_field(u), grad_l2_norm(u), etilde_l2_norm(*sys.mesh), iterations};
    return out;
}

void write_matrix_market(const SparseMatrix& matrix, const std::string& path) {
    std::ofstream os(path);
    if (!os) throw std::runtime_error("cannot open " + path);
    os << "%%MatrixMarket matrix coordinate real general\n";
    os << matrix.rows() << ' ' << matrix.cols() << ' ' << matrix.nonZeros() << '\n';
    os << std::setprecision(17);
    for (Eigen::Index r = 0; r < matrix.outerSize(); ++r)
        for (SparseMatrix::InnerIterator it(matrix, r); it; ++it)
            os << it.row() + 1 << ' ' << it.col() + 1 << ' ' << it.value() << '\n';
}

void write_matrix_market(const Vector& vector, const std::string& path) {
    std::ofstream os(path);
    if (!os) throw std::runtime_error("cannot open " + path);
    os << "%%MatrixMarket matrix array real general\n";
    os << vector.size() << " 1\n";
    os << std::setprecision(17);
    for (Eigen::Index i = 0; i < vector.size(); ++i) os << vector[i] << '\n';
}

}  // namespace matmi
