#include "matmi/functional.hpp"

#include "matmi/errors.hpp"
#include "matmi/linalg.hpp"

#include <array>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <iomanip>
#include <iterator>
#include <sstream>

namespace matmi {

Vector weak_divergence(const Mesh& mesh, const CellFlux& flux) {
    const int npc = mesh.vertices_per_cell();
    Vector rhs = Vector::Zero(mesh.num_vertices());
    for (int c = 0; c < mesh.num_cells(); ++c) {
        Vec3 qint = Vec3::Zero();
        for (const auto& qp : cell_quadrature_degree2(mesh, c)) qint += qp.weight * flux(c, qp.x);
        for (int k = 0; k < npc; ++k) rhs[mesh.cell(c)[k]] -= qint.dot(mesh.grad_basis(c, k));
    }
    for (const auto& f : mesh.boundary_facets()) {
        for (const auto& qp : facet_quadrature_degree2(mesh, f.vertices)) {
            const double qn = flux(f.cell, qp.x).dot(f.normal);
            for (int k = 0; k < mesh.dim(); ++k) rhs[f.vertices[k]] += qp.weight * qn * qp.bary[k];
        }
    }
    return rhs;
}

double value_in_cell(const NodalField& f, int c, const Vec3& x) {
    return f.at_centroid(c) + f.gradient(c).dot(x - f.mesh->centroid(c));
}

CellFlux conductivity_flux(const AnisotropyFamily& family, const NodalField& gamma, const ElectricField& field) {
    return [&family, &gamma, &field](int c, const Vec3& x) -> Vec3 {
        return family.eval(x, value_in_cell(gamma, c, x)) * cross_b0(field.at(c, x));
    };
}

NodalField project_functional(MeshPtr mesh, const Vector& rhs_weak) {
    const SparseMatrix M = mass_matrix(*mesh);
    CgOptions cg;
    cg.tol = 1e-13;
    cg.jacobi = true;
    CgResult res = conjugate_gradient(M, rhs_weak, cg);
    return NodalField(std::move(mesh), std::move(res.x));
}

FunctionalData functional_from_field(const AnisotropyFamily& family, const NodalField& gamma,
                                     const ElectricField& field) {
    FunctionalData data;
    data.mesh = gamma.mesh;
    data.rhs_weak = weak_divergence(*gamma.mesh, conductivity_flux(family, gamma, field));
    data.nodal_projection = project_functional(gamma.mesh, data.rhs_weak);
    data.source_mesh_resolution = gamma.mesh->resolution();
    return data;
}

namespace {

MeshPtr refined(const Mesh& mesh, int refine) {
    const int n = mesh.resolution() * refine;
    return mesh.dim() == 2 ? make_unit_square(n) : make_unit_cube(n);
}

// Restrict a fine weak functional to the coarse hat functions of a nested mesh.
Vector restrict_functional(const Mesh& coarse, const Mesh& fine, const Vector& fine_rhs) {
    Vector out = Vector::Zero(coarse.num_vertices());
    for (int j = 0; j < fine.num_vertices(); ++j) {
        const auto loc = coarse.locate(fine.vertex(j));
        if (!loc) throw std::logic_error("restrict_functional: fine vertex outside coarse mesh");
        const auto& cell = coarse.cell(loc->cell);
        for (int k = 0; k < coarse.vertices_per_cell(); ++k) {
            const double w = loc->weights[k];
            if (std::abs(w) > 1e-14) out[cell[k]] += w * fine_rhs[j];
        }
    }
    return out;
}

FunctionalData synthesize_on(const AnisotropyFamily& family, MeshPtr coarse, const NodalField& fine_gamma,
                             const NeumannOptions& opts) {
    const FieldSolve fs = solve_field(family, fine_gamma, opts);
    FunctionalData fine = functional_from_field(family, fine_gamma, fs.field);
    if (fine_gamma.mesh == coarse) return fine;
    FunctionalData data;
    data.mesh = coarse;
    data.rhs_weak = restrict_functional(*coarse, *fine_gamma.mesh, fine.rhs_weak);
    data.nodal_projection = project_functional(coarse, data.rhs_weak);
    data.source_mesh_resolution = fine_gamma.mesh->resolution();
    return data;
}

}  // namespace

FunctionalData synthesize(const AnisotropyFamily& family, const NodalField& gamma_star, int refine,
                          const NeumannOptions& opts) {
    if (refine < 1) throw std::invalid_argument("synthesize: refine must be >= 1");
    if (refine == 1) return synthesize_on(family, gamma_star.mesh, gamma_star, opts);
    MeshPtr fine = refined(*gamma_star.mesh, refine);
    const NodalField fine_gamma = interpolate(fine, [&](const Vec3& x) { return gamma_star.evaluate(x); });
    return synthesize_on(family, gamma_star.mesh, fine_gamma, opts);
}

FunctionalData synthesize(const AnisotropyFamily& family, MeshPtr mesh, const ScalarFunction& gamma_star, int refine,
                          const NeumannOptions& opts) {
    if (refine < 1) throw std::invalid_argument("synthesize: refine must be >= 1");
    MeshPtr source = refine == 1 ? mesh : refined(*mesh, refine);
    return synthesize_on(family, mesh, interpolate(source, gamma_star), opts);
}

FunctionalData functional_from_source(MeshPtr mesh, const ScalarFunction& f) {
    FunctionalData data;
    data.mesh = mesh;
    data.rhs_weak = Vector::Zero(mesh->num_vertices());
    for (int c = 0; c < mesh->num_cells(); ++c) {
        for (const auto& q : cell_quadrature_degree2(*mesh, c)) {
            const double fx = f(q.x);
            for (int k = 0; k < mesh->vertices_per_cell(); ++k) data.rhs_weak[mesh->cell(c)[k]] += q.weight * fx * q.bary[k];
        }
    }
    data.nodal_projection = project_functional(mesh, data.rhs_weak);
    data.source_mesh_resolution = mesh->resolution();
    return data;
}

double functional_distance(const FunctionalData& a, const FunctionalData& b) {
    NodalField diff(a.mesh, a.nodal_projection.values - b.nodal_projection.values);
    return l2_norm(diff);
}

// ---------------------------------------------------------------------------
// binary container

namespace {

constexpr char kMagic[8] = {'M', 'A', 'T', 'M', 'I', 'F', 'D', '\x01'};

void put_u64(std::string& buf, std::uint64_t v) {
    for (int i = 0; i < 8; ++i) buf.push_back(static_cast<char>((v >> (8 * i)) & 0xffu));
}
void put_u32(std::string& buf, std::uint32_t v) {
    for (int i = 0; i < 4; ++i) buf.push_back(static_cast<char>((v >> (8 * i)) & 0xffu));
}
void put_f64(std::string& buf, double d) {
    std::uint64_t bits;
    std::memcpy(&bits, &d, sizeof bits);
    put_u64(buf, bits);
}

std::uint64_t fnv1a(const char* data, std::size_t n) {
    std::uint64_t h = 1469598103934665603ull;
    for (std::size_t i = 0; i < n; ++i) {
        h ^= static_cast<unsigned char>(data[i]);
        h *= 1099511628211ull;
    }
    return h;
}

struct Reader {
    const std::string& buf;
    std::size_t pos = 0;

    void need(std::size_t n) const {
        if (pos + n > buf.size()) throw IntegrityError("functional container: truncated file");
    }
    std::uint64_t u64() {
        need(8);
        std::uint64_t v = 0;
        for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(static_cast<unsigned char>(buf[pos + i])) << (8 * i);
        pos += 8;
        return v;
    }
    std::uint32_t u32() {
        need(4);
        std::uint32_t v = 0;
        for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(static_cast<unsigned char>(buf[pos + i])) << (8 * i);
        pos += 4;
        return v;
    }
    double f64() {
        const std::uint64_t bits = u64();
        double d;
        std::memcpy(&d, &bits, sizeof d);
        return d;
    }
};

}  // namespace

void write_functional(const FunctionalData& data, const std::string& path) {
    std::string buf(kMagic, kMagic + 8);
    put_u64(buf, data.mesh->hash());
    put_u32(buf, static_cast<std::uint32_t>(data.mesh->dim()));
    put_u32(buf, static_cast<std::uint32_t>(data.mesh->resolution()));
    put_u32(buf, static_cast<std::uint32_t>(data.source_mesh_resolution));
    put_u32(buf, 0u);
    put_u64(buf, static_cast<std::uint64_t>(data.rhs_weak.size()));
    for (Eigen::Index i = 0; i < data.rhs_weak.size(); ++i) put_f64(buf, data.rhs_weak[i]);
    for (Eigen::Index i = 0; i < data.nodal_projection.values.size(); ++i) put_f64(buf, data.nodal_projection.values[i]);
    put_u64(buf, fnv1a(buf.data() + 8, buf.size() - 8));
    std::ofstream os(path, std::ios::binary);
    if (!os) throw std::runtime_error("cannot open " + path);
    os.write(buf.data(), static_cast<std::streamsize>(buf.size()));
}

FunctionalData read_functional(const std::string& path, MeshPtr mesh) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw std::runtime_error("cannot open " + path);
    const std::string buf((std::istreambuf_iterator<char>(is)), std::istreambuf_iterator<char>());
    if (buf.size() < 8 + 8 || std::memcmp(buf.data(), kMagic, 8) != 0)
        throw IntegrityError("functional container: bad magic in " + path);
    const std::uint64_t stored = [&] {
        Reader tail{buf, buf.size() - 8};
        return tail.u64();
    }();
    if (fnv1a(buf.data() + 8, buf.size() - 16) != stored)
        throw IntegrityError("functional container: checksum mismatch in " + path);

    Reader r{buf, 8};
    const std::uint64_t mesh_hash = r.u64();
    const auto dim = r.u32();
    const auto n = r.u32();
    const auto source_n = r.u32();
    r.u32();
    const std::uint64_t len = r.u64();
    if (mesh_hash != mesh->hash() || static_cast<int>(dim) != mesh->dim() || static_cast<int>(n) != mesh->resolution())
        throw IntegrityError("functional container: mesh hash mismatch in " + path);
    if (len != static_cast<std::uint64_t>(mesh->num_vertices()))
        throw IntegrityError("functional container: length mismatch in " + path);

    FunctionalData data;
    data.mesh = mesh;
    data.source_mesh_resolution = static_cast<int>(source_n);
    data.rhs_weak.resize(static_cast<Eigen::Index>(len));
    Vector proj(static_cast<Eigen::Index>(len));
    for (std::uint64_t i = 0; i < len; ++i) data.rhs_weak[static_cast<Eigen::Index>(i)] = r.f64();
    for (std::uint64_t i = 0; i < len; ++i) proj[static_cast<Eigen::Index>(i)] = r.f64();
    data.nodal_projection = NodalField(mesh, std::move(proj));
    return data;
}

void write_functional_csv(const FunctionalData& data, const std::string& path) {
    std::ofstream os(path);
    if (!os) throw std::runtime_error("cannot open " + path);
    os << "x,y,z,F\n" << std::setprecision(17);
    const Mesh& mesh = *data.mesh;
    for (int v = 0; v < mesh.num_vertices(); ++v) {
        const Vec3& p = mesh.vertex(v);
        os << p[0] << ',' << p[1] << ',' << p[2] << ',' << data.nodal_projection[v] << '\n';
    }
}

}  // namespace matmi
