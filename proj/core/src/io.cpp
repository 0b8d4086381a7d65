#include "matmi/io.hpp"

#include <fstream>
#include <iomanip>
#include <stdexcept>

namespace matmi {

namespace {

std::ofstream open_output(const std::string& path) {
    std::ofstream os(path);
    if (!os) throw std::runtime_error("cannot open " + path);
    os << std::setprecision(12);
    return os;
}

void check_name(const std::string& name) {
    if (name.empty() || name.find_first_of(" \t\n") != std::string::npos)
        throw std::invalid_argument("VTK field name must be a single non-empty word: '" + name + "'");
}

}  // namespace

void write_vtk(const std::string& path, const Mesh& mesh, const std::vector<NamedNodal>& point_data,
               const std::vector<NamedCell>& cell_data) {
    for (const auto& [name, f] : point_data) {
        check_name(name);
        if (f->values.size() != mesh.num_vertices()) throw std::invalid_argument("write_vtk: " + name + " size");
    }
    for (const auto& [name, f] : cell_data) {
        check_name(name);
        if (f->values.size() != mesh.num_cells()) throw std::invalid_argument("write_vtk: " + name + " size");
    }

    auto os = open_output(path);
    const int npc = mesh.vertices_per_cell();
    os << "# vtk DataFile Version 3.0\nmatmi field\nASCII\nDATASET UNSTRUCTURED_GRID\n";
    os << "POINTS " << mesh.num_vertices() << " double\n";
    for (const auto& v : mesh.vertices()) os << v[0] << ' ' << v[1] << ' ' << v[2] << '\n';
    os << "CELLS " << mesh.num_cells() << ' ' << mesh.num_cells() * (npc + 1) << '\n';
    for (const auto& cell : mesh.cells()) {
        os << npc;
        for (int k = 0; k < npc; ++k) os << ' ' << cell[k];
        os << '\n';
    }
    os << "CELL_TYPES " << mesh.num_cells() << '\n';
    const int type = mesh.dim() == 2 ? 5 : 10;
    for (int c = 0; c < mesh.num_cells(); ++c) os << type << '\n';

    if (!point_data.empty()) {
        os << "POINT_DATA " << mesh.num_vertices() << '\n';
        for (const auto& [name, f] : point_data) {
            os << "SCALARS " << name << " double 1\nLOOKUP_TABLE default\n";
            for (Eigen::Index i = 0; i < f->values.size(); ++i) os << f->values[i] << '\n';
        }
    }
    if (!cell_data.empty()) {
        os << "CELL_DATA " << mesh.num_cells() << '\n';
        for (const auto& [name, f] : cell_data) {
            os << "SCALARS " << name << " double 1\nLOOKUP_TABLE default\n";
            for (Eigen::Index i = 0; i < f->values.size(); ++i) os << f->values[i] << '\n';
        }
    }
    if (!os) throw std::runtime_error("write_vtk: write failed for " + path);
}

ZSlice sample_z_slice(const NodalField& field, double level, int samples) {
    if (field.mesh->dim() != 3) throw std::invalid_argument("sample_z_slice: field is not 3D");
    if (samples < 1) throw std::invalid_argument("sample_z_slice: samples must be >= 1");
    if (level < 0.0 || level > 1.0) throw std::invalid_argument("sample_z_slice: level outside [0, 1]");
    ZSlice slice;
    slice.level = level;
    slice.samples = samples;
    slice.values.reserve(static_cast<std::size_t>((samples + 1) * (samples + 1)));
    for (int j = 0; j <= samples; ++j)
        for (int i = 0; i <= samples; ++i)
            slice.values.push_back(field.evaluate(Vec3(double(i) / samples, double(j) / samples, level)));
    return slice;
}

void write_slice_vtk(const ZSlice& slice, const std::string& name, const std::string& path) {
    check_name(name);
    auto os = open_output(path);
    const int m = slice.samples + 1;
    os << "# vtk DataFile Version 3.0\nmatmi slice z=" << slice.level << "\nASCII\nDATASET STRUCTURED_POINTS\n";
    os << "DIMENSIONS " << m << ' ' << m << " 1\n";
    os << "ORIGIN 0 0 " << slice.level << '\n';
    os << "SPACING " << 1.0 / slice.samples << ' ' << 1.0 / slice.samples << " 1\n";
    os << "POINT_DATA " << m * m << '\n';
    os << "SCALARS " << name << " double 1\nLOOKUP_TABLE default\n";
    for (double v : slice.values) os << v << '\n';
    if (!os) throw std::runtime_error("write_slice_vtk: write failed for " + path);
}

void write_slice_csv(const ZSlice& slice, const std::string& path) {
    auto os = open_output(path);
    const int m = slice.samples + 1;
    os << "x,y,z,value\n";
    for (int j = 0; j < m; ++j)
        for (int i = 0; i < m; ++i)
            os << double(i) / slice.samples << ',' << double(j) / slice.samples << ',' << slice.level << ','
               << slice.values[static_cast<std::size_t>(j * m + i)] << '\n';
}

std::optional<Vec3> superlevel_centroid(const NodalField& field, double level) {
    const Mesh& mesh = *field.mesh;
    Vec3 moment = Vec3::Zero();
    double volume = 0.0;
    for (int c = 0; c < mesh.num_cells(); ++c) {
        if (field.at_centroid(c) < level) continue;
        moment += mesh.volume(c) * mesh.centroid(c);
        volume += mesh.volume(c);
    }
    if (volume == 0.0) return std::nullopt;
    return Vec3(moment / volume);
}

}  // namespace matmi
