#include "matmi/transport.hpp"

#include "matmi/errors.hpp"

#include <Eigen/SparseLU>

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

namespace matmi {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

AnisotropyFamily unbounded(const AnisotropyFamily& family) { return family.with_range(-kInf, kInf); }

double clamp_to(const AnisotropyFamily& family, double t) {
    return std::clamp(t, family.t_min(), family.t_max());
}

Vector solve_lu(const SparseMatrix& matrix, const Vector& rhs, const char* who) {
    Eigen::SparseMatrix<double> colmajor = matrix;
    colmajor.makeCompressed();
    Eigen::SparseLU<Eigen::SparseMatrix<double>> lu;
    lu.compute(colmajor);
    if (lu.info() != Eigen::Success)
        throw SolverError(std::string(who) + ": sparse LU factorisation failed: " + lu.lastErrorMessage(), {});
    Vector x = lu.solve(rhs);
    if (lu.info() != Eigen::Success || !x.allFinite())
        throw SolverError(std::string(who) + ": sparse LU solve failed", {});
    return x;
}

Vec3 facet_midpoint(const Mesh& mesh, const std::array<int, 3>& vertices) {
    Vec3 m = Vec3::Zero();
    for (int k = 0; k < mesh.dim(); ++k) m += mesh.vertex(vertices[k]);
    return m / mesh.dim();
}

}  // namespace

std::vector<int> flux_inflow(const AnisotropyFamily& family, const NodalField& gamma, const ElectricField& field,
                             double tol) {
    const Mesh& mesh = *gamma.mesh;
    std::vector<Vec3> velocity(mesh.num_cells());
    for (int c = 0; c < mesh.num_cells(); ++c) {
        const Vec3& x = mesh.centroid(c);
        velocity[c] = family.eval(x, clamp_to(family, gamma.at_centroid(c))) * cross_b0(field.at_centroid(c));
    }
    return classify_inflow(mesh, velocity, tol);
}

FieldDerivatives field_derivatives(const ElectricField& field) {
    const Mesh& mesh = *field.mesh();
    FieldDerivatives out;
    CellVectorField centroid_values = field.values();
    out.value = centroid_values.values;
    const auto projected = lumped_projection(centroid_values);
    out.gradient.resize(mesh.num_cells());
    for (int c = 0; c < mesh.num_cells(); ++c) {
        Mat3 d;
        for (int j = 0; j < 3; ++j) d.col(j) = projected[j].gradient(c);
        out.gradient[c] = d;
    }
    return out;
}

// ---------------------------------------------------------------------------
// generic expansion

CoefficientField::CoefficientField(const AnisotropyFamily& family, MeshPtr mesh, std::vector<Vec3> flow,
                                   std::vector<Mat3> flow_gradient)
    : family_(unbounded(family)),
      mesh_(std::move(mesh)),
      flow_(std::move(flow)),
      flow_gradient_(std::move(flow_gradient)) {}

Vec3 CoefficientField::velocity(int c, double t) const {
    return family_.deriv_t(mesh_->centroid(c), t) * flow_[c];
}

double CoefficientField::reaction(int c, double t) const {
    const Vec3& x = mesh_->centroid(c);
    const Mat3 a = family_.eval(x, t);
    const auto da = family_.deriv_x(x, t);
    const Vec3& w = flow_[c];
    const Mat3& dw = flow_gradient_[c];
    double r = 0.0;
    for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j) r += da[i](i, j) * w[j] + a(i, j) * dw(i, j);
    return r;
}

CoefficientField::Monomials CoefficientField::monomials(int c) const {
    Monomials m;
    const Vec3 bm = velocity(c, -1.0), b0 = velocity(c, 0.0), bp = velocity(c, 1.0);
    const double rm = reaction(c, -1.0), r0 = reaction(c, 0.0), rp = reaction(c, 1.0);
    m.velocity = {b0, 0.5 * (bp - bm), 0.5 * (bp + bm) - b0};
    m.reaction = {r0, 0.5 * (rp - rm), 0.5 * (rp + rm) - r0};
    return m;
}

CoefficientField expand_coefficients(const AnisotropyFamily& family, const ElectricField& field) {
    const FieldDerivatives d = field_derivatives(field);
    const int nc = field.mesh()->num_cells();
    std::vector<Vec3> w(nc);
    std::vector<Mat3> dw(nc);
    for (int c = 0; c < nc; ++c) {
        w[c] = cross_b0(d.value[c]);
        Mat3 g = Mat3::Zero();
        g.col(0) = d.gradient[c].col(1);
        g.col(1) = -d.gradient[c].col(0);
        dw[c] = g;
    }
    return CoefficientField(family, field.mesh(), std::move(w), std::move(dw));
}

// ---------------------------------------------------------------------------
// hand-expanded coefficient lists

HandExpandedCoefficients::HandExpandedCoefficients(std::string family, std::vector<std::array<double, 7>> values)
    : family_(std::move(family)), values_(std::move(values)) {}

std::vector<std::string> HandExpandedCoefficients::slot_names(std::string_view family) {
    if (family == "D2") return {"a1", "a2", "a3", "a4", "a5", "", "c"};
    if (family == "D3") return {"a1", "a2", "a3", "a4", "a5", "a6", "c"};
    if (family == "D4") return {"E2x-E1y", "E2", "E1", "E2y-E1x", "E1x", "", ""};
    throw std::invalid_argument("no hand expansion for family " + std::string(family));
}

Vec3 HandExpandedCoefficients::velocity(int c, double t) const {
    const auto& a = values_[c];
    if (family_ == "D2") return Vec3(a[2] * t + a[3], -a[4], 0.0);
    if (family_ == "D3") return Vec3(a[4] + a[5] * t, a[1] * t + a[2], 0.0);
    const double p = 1.0 / (t + 20.0);
    return Vec3(a[1], -(a[1] * p * p + a[2]), 0.0);
}

double HandExpandedCoefficients::reaction(int c, double t) const {
    const auto& a = values_[c];
    if (family_ == "D2") return a[0] * t * t + a[1] * t + a[6];
    if (family_ == "D3") return a[0] * t * t + a[3] * t + a[6];
    const double p = 1.0 / (t + 20.0);
    return a[0] * t + p * (a[3] + a[4] * p);
}

HandExpandedCoefficients hand_expanded_coefficients(std::string_view family, const ElectricField& field) {
    HandExpandedCoefficients::slot_names(family);  // validates the name
    const FieldDerivatives d = field_derivatives(field);
    const int nc = field.mesh()->num_cells();
    std::vector<std::array<double, 7>> values(nc);
    for (int c = 0; c < nc; ++c) {
        const double e1 = d.value[c][0], e2 = d.value[c][1];
        const Mat3& g = d.gradient[c];
        const double e1x = g(0, 0), e1y = g(1, 0), e2x = g(0, 1), e2y = g(1, 1);
        auto& a = values[c];
        a.fill(0.0);
        if (family == "D2") {
            a[0] = 0.4 * e2x;
            a[1] = 0.8 * e2x - 3.0 * e1y;
            a[2] = 0.8 * e2;
            a[3] = 0.8 * e2;
            a[4] = 3.0 * e1;
            a[6] = 0.4 * e2x;
        } else if (family == "D3") {
            a[0] = 0.4 * e2x + 0.01 * e1x - 0.01 * e2y;
            a[1] = 0.898 * e2;
            a[2] = 0.01 * e2 - 3.0 * e1;
            a[3] = 0.8 * e2x - 0.01 * e1x + 0.01 * e2y - 3.0 * e1y;
            a[4] = 0.8 * e2 - 0.01 * e1;
            a[5] = 0.02 * e1;
            a[6] = 0.4 * e2x;
        } else {
            a[0] = e2x - e1y;
            a[1] = e2;
            a[2] = e1;
            a[3] = e2y - e1x;
            a[4] = e1x;
        }
    }
    return HandExpandedCoefficients(std::string(family), std::move(values));
}

// ---------------------------------------------------------------------------
// DG0 upwind

CellField solve_linear_dg(const TransportProblem& problem) {
    const AnisotropyFamily& family = problem.family;
    if (!family.affine_in_t())
        throw std::invalid_argument("solve_linear_dg: family " + family.name() + " is not affine in t");
    const AnisotropyFamily free = unbounded(family);
    const ElectricField& field = problem.field;
    const Mesh& mesh = *field.mesh();
    const int nc = mesh.num_cells();
    const double tol = problem.tol_inflow;

    // A(x, t) = A0(x) + t A1(x)
    auto slope_flux = [&](int c, const Vec3& x, const Vec3& n) {
        const Mat3 a1 = free.eval(x, 1.0) - free.eval(x, 0.0);
        return (a1 * cross_b0(field.at(c, x))).dot(n);
    };
    auto base_flux = [&](int c, const Vec3& x, const Vec3& n) {
        return (free.eval(x, 0.0) * cross_b0(field.at(c, x))).dot(n);
    };

    const NodalField& fh = problem.data.nodal_projection;
    Vector rhs(nc);
    for (int c = 0; c < nc; ++c) rhs[c] = mesh.volume(c) * fh.at_centroid(c);

    std::vector<Eigen::Triplet<double>> trip;
    trip.reserve(static_cast<std::size_t>(mesh.interior_facets().size()) * 2 + nc);
    Vector diag = Vector::Zero(nc);

    for (const auto& f : mesh.interior_facets()) {
        const Vec3 xm = facet_midpoint(mesh, f.vertices);
        const double v = 0.5 * (slope_flux(f.cell_a, xm, f.normal) + slope_flux(f.cell_b, xm, f.normal));
        if (v > 0.0) {
            diag[f.cell_a] += f.measure * v;
            trip.emplace_back(f.cell_b, f.cell_a, -f.measure * v);
        } else if (v < 0.0) {
            diag[f.cell_b] -= f.measure * v;
            trip.emplace_back(f.cell_a, f.cell_b, f.measure * v);
        }
        rhs[f.cell_a] -= f.measure * base_flux(f.cell_a, xm, f.normal);
        rhs[f.cell_b] += f.measure * base_flux(f.cell_b, xm, f.normal);
    }
    for (const auto& f : mesh.boundary_facets()) {
        const Vec3 xm = facet_midpoint(mesh, f.vertices);
        const double v = slope_flux(f.cell, xm, f.normal);
        if (v > tol) {
            diag[f.cell] += f.measure * v;
        } else if (v < -tol) {
            double trace = 0.0;
            for (int k = 0; k < mesh.dim(); ++k) trace += problem.inflow_values[f.vertices[k]];
            rhs[f.cell] -= f.measure * v * trace / mesh.dim();
        }
        rhs[f.cell] -= f.measure * base_flux(f.cell, xm, f.normal);
    }

    std::vector<int> stalled;
    const double scale = std::max(diag.cwiseAbs().maxCoeff(), 1e-300);
    for (int c = 0; c < nc; ++c) {
        if (diag[c] <= 1e-13 * scale || diag[c] == 0.0) stalled.push_back(c);
        trip.emplace_back(c, c, diag[c]);
    }
    if (!stalled.empty()) {
        std::ostringstream msg;
        msg << "solve_linear_dg: singular upwind system, " << stalled.size() << " cell(s) without outflow:";
        for (std::size_t i = 0; i < std::min<std::size_t>(stalled.size(), 10); ++i) msg << ' ' << stalled[i];
        if (stalled.size() > 10) msg << " ...";
        throw SolverError(msg.str(), {});
    }

    SparseMatrix matrix(nc, nc);
    matrix.setFromTriplets(trip.begin(), trip.end());
    return CellField{field.mesh(), solve_lu(matrix, rhs, "solve_linear_dg")};
}

// ---------------------------------------------------------------------------
// stabilised P1 with frozen coefficients

namespace {

struct FrozenSystem {
    SparseMatrix matrix;
    Vector rhs;
};

// Linear system for gamma with the nonlinear slots frozen at `frozen`:
//   A(x, gamma) ~ A(x, 0) + gamma S(x),  S = (A(x, g) - A(x, 0)) / g,  g = frozen(x),
// Galerkin part in divergence form (exactly the weak divergence used for the data) plus
// sum_K tau_K |K| (b . grad phi_i) (b . grad gamma + s gamma_K + r(0) - F_h(x_K)).
FrozenSystem assemble_frozen(const TransportProblem& problem, const CoefficientField& coeffs,
                             const NodalField& frozen) {
    const AnisotropyFamily& family = problem.family;
    const AnisotropyFamily free = unbounded(family);
    const ElectricField& field = problem.field;
    const Mesh& mesh = *field.mesh();
    const int npc = mesh.vertices_per_cell();
    const int nv = mesh.num_vertices();

    auto secant = [&](const Vec3& x, double g, Mat3& base) {
        base = free.eval(x, 0.0);
        if (std::abs(g) < 1e-10) return Mat3(free.deriv_t(x, 0.0));
        return Mat3((free.eval(x, g) - base) / g);
    };

    std::vector<Eigen::Triplet<double>> trip;
    trip.reserve(static_cast<std::size_t>(mesh.num_cells()) * npc * npc * 2);
    Vector rhs = problem.data.rhs_weak;

    // defect of the pointwise residual against the projected weak operator at the reference state
    std::vector<double> defect(mesh.num_cells(), 0.0);
    if (problem.corrected_stabilisation && problem.initial.mesh) {
        NodalField ref = problem.initial;
        for (Eigen::Index v = 0; v < ref.values.size(); ++v) ref.values[v] = clamp_to(family, ref.values[v]);
        const NodalField weak_op =
            project_functional(field.mesh(), weak_divergence(mesh, conductivity_flux(family, ref, field)));
        for (int c = 0; c < mesh.num_cells(); ++c) {
            const double g = ref.at_centroid(c);
            defect[c] = coeffs.velocity(c, g).dot(ref.gradient(c)) + coeffs.reaction(c, g) - weak_op.at_centroid(c);
        }
    }

    for (int c = 0; c < mesh.num_cells(); ++c) {
        const auto& cell = mesh.cell(c);
        double local[4][4] = {};
        double local_rhs[4] = {};
        for (const auto& q : cell_quadrature_degree2(mesh, c)) {
            const double g = clamp_to(family, value_in_cell(frozen, c, q.x));
            Mat3 base;
            const Mat3 s = secant(q.x, g, base);
            const Vec3 w = cross_b0(field.at(c, q.x));
            const Vec3 sw = s * w, bw = base * w;
            for (int i = 0; i < npc; ++i) {
                const Vec3& gi = mesh.grad_basis(c, i);
                local_rhs[i] += q.weight * bw.dot(gi);
                for (int j = 0; j < npc; ++j) local[i][j] -= q.weight * q.bary[j] * sw.dot(gi);
            }
        }
        // streamline-upwind term
        const double gk = clamp_to(family, frozen.at_centroid(c));
        const Vec3 b = coeffs.velocity(c, gk);
        const double bnorm = b.norm();
        if (bnorm > 0.0) {
            const double tau = mesh.diameter(c) / (2.0 * bnorm);
            const double r0 = coeffs.reaction(c, 0.0);
            const double s = std::abs(gk) > 1e-10 ? (coeffs.reaction(c, gk) - r0) / gk
                                                  : (coeffs.reaction(c, 1e-6) - r0) / 1e-6;
            const double fk = problem.data.nodal_projection.at_centroid(c) + defect[c];
            const double wgt = tau * mesh.volume(c);
            for (int i = 0; i < npc; ++i) {
                const double bi = b.dot(mesh.grad_basis(c, i));
                local_rhs[i] += wgt * bi * (fk - r0);
                for (int j = 0; j < npc; ++j)
                    local[i][j] += wgt * bi * (b.dot(mesh.grad_basis(c, j)) + s / npc);
            }
        }
        for (int i = 0; i < npc; ++i) {
            rhs[cell[i]] += local_rhs[i];
            for (int j = 0; j < npc; ++j) trip.emplace_back(cell[i], cell[j], local[i][j]);
        }
    }

    for (const auto& f : mesh.boundary_facets()) {
        for (const auto& q : facet_quadrature_degree2(mesh, f.vertices)) {
            const double g = clamp_to(family, value_in_cell(frozen, f.cell, q.x));
            Mat3 base;
            const Mat3 s = secant(q.x, g, base);
            const Vec3 w = cross_b0(field.at(f.cell, q.x));
            const double swn = (s * w).dot(f.normal), bwn = (base * w).dot(f.normal);
            for (int i = 0; i < mesh.dim(); ++i) {
                rhs[f.vertices[i]] -= q.weight * q.bary[i] * bwn;
                for (int j = 0; j < mesh.dim(); ++j)
                    trip.emplace_back(f.vertices[i], f.vertices[j], q.weight * q.bary[i] * q.bary[j] * swn);
            }
        }
    }

    FrozenSystem sys;
    sys.matrix.resize(nv, nv);
    sys.matrix.setFromTriplets(trip.begin(), trip.end());
    sys.rhs = std::move(rhs);
    return sys;
}

std::vector<char> inflow_vertex_mask(const TransportProblem& problem) {
    const Mesh& mesh = *problem.field.mesh();
    std::vector<char> mask(mesh.num_vertices(), 0);
    for (int fi : problem.inflow_facets) {
        const auto& f = mesh.boundary_facets().at(fi);
        for (int k = 0; k < mesh.dim(); ++k) mask[f.vertices[k]] = 1;
    }
    return mask;
}

void impose_rows(SparseMatrix& matrix, Vector& rhs, const std::vector<char>& mask, const NodalField& values) {
    for (Eigen::Index r = 0; r < matrix.outerSize(); ++r) {
        if (!mask[r]) continue;
        for (SparseMatrix::InnerIterator it(matrix, r); it; ++it) it.valueRef() = it.col() == r ? 1.0 : 0.0;
        rhs[r] = values[static_cast<int>(r)];
    }
}

}  // namespace

PicardResult solve_nonlinear(const TransportProblem& problem, const PicardOptions& opts) {
    if (opts.max_outer < 1) throw std::invalid_argument("PicardOptions: max_outer must be >= 1");
    if (!(opts.rel_tol > 0.0 && opts.rel_tol < 1.0)) throw std::invalid_argument("PicardOptions: rel_tol in (0, 1)");
    if (!(opts.damping > 0.0 && opts.damping <= 1.0)) throw std::invalid_argument("PicardOptions: damping in (0, 1]");

    const CoefficientField coeffs = expand_coefficients(problem.family, problem.field);
    const auto mask = inflow_vertex_mask(problem);
    const bool linear = problem.family.affine_in_t();
    const MeshPtr& mesh = problem.field.mesh();

    PicardResult result;
    NodalField current = problem.initial.mesh ? problem.initial : NodalField::constant(mesh, 1.0);
    for (int it = 1; it <= opts.max_outer; ++it) {
        FrozenSystem sys = assemble_frozen(problem, coeffs, current);
        impose_rows(sys.matrix, sys.rhs, mask, problem.inflow_values);
        Vector next = solve_lu(sys.matrix, sys.rhs, "solve_nonlinear");
        next = opts.damping * next + (1.0 - opts.damping) * current.values;
        const NodalField next_field(mesh, next);
        const double change = l2_norm(NodalField(mesh, next - current.values)) /
                              std::max(l2_norm(next_field), std::numeric_limits<double>::min());
        result.history.push_back(change);
        current = next_field;
        result.iterations = it;
        // an affine family has nothing to freeze: one solve is exact
        if (linear || change <= opts.rel_tol) {
            result.converged = true;
            break;
        }
    }
    result.gamma = current;
    if (!result.converged && !opts.accept_last) {
        std::ostringstream msg;
        msg << "solve_nonlinear: Picard loop did not reach rel_tol " << opts.rel_tol << " in " << opts.max_outer
            << " steps (last change " << result.history.back() << ")";
        throw SolverError(msg.str(), result.history);
    }
    return result;
}

double nonlinear_residual(const TransportProblem& problem, const NodalField& gamma) {
    const CoefficientField coeffs = expand_coefficients(problem.family, problem.field);
    FrozenSystem sys = assemble_frozen(problem, coeffs, gamma);
    Vector res = sys.matrix * gamma.values - sys.rhs;
    const auto mask = inflow_vertex_mask(problem);
    for (Eigen::Index i = 0; i < res.size(); ++i)
        if (mask[i]) res[i] = 0.0;
    const double scale = std::max(problem.data.rhs_weak.norm(), std::numeric_limits<double>::min());
    return res.norm() / scale;
}

}  // namespace matmi
