#include "matmi/mesh.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <limits>
#include <stdexcept>
#include <unordered_map>

namespace matmi {
namespace {

constexpr std::uint64_t kFnvOffset = 1469598103934665603ull;
constexpr std::uint64_t kFnvPrime = 1099511628211ull;

void fnv_mix(std::uint64_t& h, const void* data, std::size_t bytes) {
    const auto* p = static_cast<const unsigned char*>(data);
    for (std::size_t i = 0; i < bytes; ++i) {
        h ^= p[i];
        h *= kFnvPrime;
    }
}

// Dense dim x dim edge matrix J = [p1 - p0, ..., pd - p0].
Eigen::MatrixXd edge_matrix(const Mesh& mesh, const std::array<int, 4>& cell) {
    const int d = mesh.dim();
    Eigen::MatrixXd J(d, d);
    const Vec3& p0 = mesh.vertex(cell[0]);
    for (int k = 0; k < d; ++k) {
        const Vec3 e = mesh.vertex(cell[k + 1]) - p0;
        for (int r = 0; r < d; ++r) J(r, k) = e[r];
    }
    return J;
}

double factorial(int d) { return d == 2 ? 2.0 : 6.0; }

}  // namespace

std::array<double, 4> barycentric(const Mesh& mesh, int c, const Vec3& p) {
    const auto& cell = mesh.cell(c);
    const int d = mesh.dim();
    std::array<double, 4> w{0.0, 0.0, 0.0, 0.0};
    double rest = 1.0;
    for (int k = 1; k <= d; ++k) {
        w[k] = mesh.grad_basis(c, k).dot(p - mesh.vertex(cell[0]));
        rest -= w[k];
    }
    w[0] = rest;
    return w;
}

void Mesh::finalize() {
    const int nc = num_cells();
    const int nv = num_vertices();
    const int npc = vertices_per_cell();

    volumes_.assign(nc, 0.0);
    centroids_.assign(nc, Vec3::Zero());
    grads_.assign(nc, {Vec3::Zero(), Vec3::Zero(), Vec3::Zero(), Vec3::Zero()});
    diameters_.assign(nc, 0.0);
    max_diameter_ = 0.0;

    for (int c = 0; c < nc; ++c) {
        const auto& cell = cells_[c];
        const Eigen::MatrixXd J = edge_matrix(*this, cell);
        const double det = J.determinant();
        if (!(det > 0.0)) throw std::logic_error("mesh: non-positive cell orientation");
        volumes_[c] = det / factorial(dim_);
        const Eigen::MatrixXd Jinv = J.inverse();
        Vec3 sum = Vec3::Zero();
        for (int k = 1; k <= dim_; ++k) {
            Vec3 g = Vec3::Zero();
            for (int r = 0; r < dim_; ++r) g[r] = Jinv(k - 1, r);
            grads_[c][k] = g;
            sum += g;
        }
        grads_[c][0] = -sum;
        Vec3 ctr = Vec3::Zero();
        for (int k = 0; k < npc; ++k) ctr += vertices_[cell[k]];
        centroids_[c] = ctr / npc;
        double diam = 0.0;
        for (int a = 0; a < npc; ++a)
            for (int b = a + 1; b < npc; ++b)
                diam = std::max(diam, (vertices_[cell[a]] - vertices_[cell[b]]).norm());
        diameters_[c] = diam;
        max_diameter_ = std::max(max_diameter_, diam);
    }

    // Facet matching on sorted vertex keys.
    const std::uint64_t N = static_cast<std::uint64_t>(nv) + 1;
    auto facet_key = [&](std::array<int, 3> v) {
        std::sort(v.begin(), v.begin() + dim_);
        std::uint64_t key = 0;
        for (int k = 0; k < dim_; ++k) key = key * N + static_cast<std::uint64_t>(v[k]);
        return key;
    };
    auto facet_vertices = [&](int c, int f) {
        std::array<int, 3> v{-1, -1, -1};
        int m = 0;
        for (int k = 0; k < npc; ++k)
            if (k != f) v[m++] = cells_[c][k];
        return v;
    };
    auto facet_measure = [&](const std::array<int, 3>& v) {
        if (dim_ == 2) return (vertices_[v[1]] - vertices_[v[0]]).norm();
        return 0.5 * (vertices_[v[1]] - vertices_[v[0]]).cross(vertices_[v[2]] - vertices_[v[0]]).norm();
    };

    std::unordered_map<std::uint64_t, std::pair<int, int>> first_seen;
    first_seen.reserve(static_cast<std::size_t>(nc) * npc);
    std::unordered_map<std::uint64_t, int> count;
    count.reserve(static_cast<std::size_t>(nc) * npc);
    interior_facets_.clear();
    for (int c = 0; c < nc; ++c) {
        for (int f = 0; f < npc; ++f) {
            const auto v = facet_vertices(c, f);
            const auto key = facet_key(v);
            auto it = first_seen.find(key);
            if (it == first_seen.end()) {
                first_seen.emplace(key, std::make_pair(c, f));
                count[key] = 1;
            } else {
                ++count[key];
                const auto [ca, fa] = it->second;
                InteriorFacet facet;
                facet.cell_a = ca;
                facet.cell_b = c;
                facet.vertices = v;
                facet.normal = (-grads_[ca][fa]).normalized();
                facet.measure = facet_measure(v);
                interior_facets_.push_back(facet);
            }
        }
    }

    boundary_facets_.clear();
    boundary_vertex_.assign(nv, 0);
    for (int c = 0; c < nc; ++c) {
        for (int f = 0; f < npc; ++f) {
            const auto v = facet_vertices(c, f);
            if (count[facet_key(v)] != 1) continue;
            BoundaryFacet facet;
            facet.cell = c;
            facet.local_id = f;
            facet.vertices = v;
            facet.normal = (-grads_[c][f]).normalized();
            facet.measure = facet_measure(v);
            boundary_facets_.push_back(facet);
            for (int k = 0; k < dim_; ++k) boundary_vertex_[v[k]] = 1;
        }
    }
    boundary_vertex_list_.clear();
    for (int v = 0; v < nv; ++v)
        if (boundary_vertex_[v]) boundary_vertex_list_.push_back(v);

    vertex_cells_.assign(nv, {});
    for (int c = 0; c < nc; ++c)
        for (int k = 0; k < npc; ++k) vertex_cells_[cells_[c][k]].push_back(c);

    std::uint64_t h = kFnvOffset;
    fnv_mix(h, &dim_, sizeof(dim_));
    fnv_mix(h, &n_, sizeof(n_));
    for (const auto& p : vertices_) fnv_mix(h, p.data(), 3 * sizeof(double));
    for (const auto& cell : cells_) fnv_mix(h, cell.data(), cell.size() * sizeof(int));
    hash_ = h;
}

Mesh build_unit_square(int n) {
    if (n < 1) throw std::invalid_argument("build_unit_square: n must be >= 1");
    Mesh m;
    m.dim_ = 2;
    m.n_ = n;
    auto coord = [n](int i) { return i == n ? 1.0 : static_cast<double>(i) / n; };
    m.vertices_.reserve(static_cast<std::size_t>(n + 1) * (n + 1));
    for (int j = 0; j <= n; ++j)
        for (int i = 0; i <= n; ++i) m.vertices_.emplace_back(coord(i), coord(j), 0.0);
    auto vid = [n](int i, int j) { return j * (n + 1) + i; };
    m.cells_.reserve(2 * static_cast<std::size_t>(n) * n);
    for (int j = 0; j < n; ++j) {
        for (int i = 0; i < n; ++i) {
            const int v00 = vid(i, j), v10 = vid(i + 1, j), v01 = vid(i, j + 1), v11 = vid(i + 1, j + 1);
            m.cells_.push_back({v00, v10, v11, -1});
            m.cells_.push_back({v00, v11, v01, -1});
        }
    }
    m.finalize();
    return m;
}

Mesh build_unit_cube(int n) {
    if (n < 1) throw std::invalid_argument("build_unit_cube: n must be >= 1");
    Mesh m;
    m.dim_ = 3;
    m.n_ = n;
    const int np = n + 1;
    auto coord = [n](int i) { return i == n ? 1.0 : static_cast<double>(i) / n; };
    m.vertices_.reserve(static_cast<std::size_t>(np) * np * np);
    for (int k = 0; k <= n; ++k)
        for (int j = 0; j <= n; ++j)
            for (int i = 0; i <= n; ++i) m.vertices_.emplace_back(coord(i), coord(j), coord(k));
    auto vid = [np](int i, int j, int k) { return (k * np + j) * np + i; };

    static constexpr std::array<std::array<int, 3>, 6> perms{
        {{0, 1, 2}, {0, 2, 1}, {1, 0, 2}, {1, 2, 0}, {2, 0, 1}, {2, 1, 0}}};
    m.cells_.reserve(6 * static_cast<std::size_t>(n) * n * n);
    for (int k = 0; k < n; ++k) {
        for (int j = 0; j < n; ++j) {
            for (int i = 0; i < n; ++i) {
                for (const auto& p : perms) {
                    std::array<int, 3> idx{i, j, k};
                    std::array<int, 4> tet{};
                    tet[0] = vid(idx[0], idx[1], idx[2]);
                    for (int s = 0; s < 3; ++s) {
                        ++idx[p[s]];
                        tet[s + 1] = vid(idx[0], idx[1], idx[2]);
                    }
                    const Vec3 a = m.vertices_[tet[1]] - m.vertices_[tet[0]];
                    const Vec3 b = m.vertices_[tet[2]] - m.vertices_[tet[0]];
                    const Vec3 c = m.vertices_[tet[3]] - m.vertices_[tet[0]];
                    if (a.dot(b.cross(c)) < 0.0) std::swap(tet[2], tet[3]);
                    m.cells_.push_back(tet);
                }
            }
        }
    }
    m.finalize();
    return m;
}

std::optional<PointLocation> Mesh::locate(const Vec3& p) const {
    constexpr double eps = 1e-12;
    for (int d = 0; d < dim_; ++d)
        if (p[d] < -eps || p[d] > 1.0 + eps) return std::nullopt;
    std::array<int, 3> g{0, 0, 0};
    for (int d = 0; d < dim_; ++d) g[d] = std::clamp(static_cast<int>(std::floor(p[d] * n_)), 0, n_ - 1);
    const int per = dim_ == 2 ? 2 : 6;
    const int base = dim_ == 2 ? per * (g[1] * n_ + g[0]) : per * ((g[2] * n_ + g[1]) * n_ + g[0]);
    int best = -1;
    double best_min = -std::numeric_limits<double>::infinity();
    std::array<double, 4> best_w{};
    for (int s = 0; s < per; ++s) {
        const int c = base + s;
        const auto w = barycentric(*this, c, p);
        double mn = w[0];
        for (int k = 1; k <= dim_; ++k) mn = std::min(mn, w[k]);
        if (mn > best_min) {
            best_min = mn;
            best = c;
            best_w = w;
        }
    }
    if (best < 0 || best_min < -1e-9) return std::nullopt;
    PointLocation loc;
    loc.cell = best;
    loc.weights = best_w;
    return loc;
}

std::vector<int> classify_inflow(const Mesh& mesh, const std::vector<Vec3>& velocity, double tol) {
    if (static_cast<int>(velocity.size()) != mesh.num_cells())
        throw std::invalid_argument("classify_inflow: velocity must have one vector per cell");
    std::vector<int> inflow;
    const auto& facets = mesh.boundary_facets();
    for (int f = 0; f < static_cast<int>(facets.size()); ++f) {
        if (velocity[facets[f].cell].dot(facets[f].normal) < -tol) inflow.push_back(f);
    }
    return inflow;
}

}  // namespace matmi
