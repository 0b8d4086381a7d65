#pragma once

#include "matmi/fields.hpp"

#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace matmi {

using NamedNodal = std::pair<std::string, const NodalField*>;
using NamedCell = std::pair<std::string, const CellField*>;

/// Legacy ASCII VTK unstructured grid (triangles: cell type 5, tetrahedra: 10) with point and
/// cell scalars. Field names must not contain whitespace.
void write_vtk(const std::string& path, const Mesh& mesh, const std::vector<NamedNodal>& point_data,
               const std::vector<NamedCell>& cell_data = {});

/// Samples of a 3D P1 field on the plane z = level, on a (samples + 1)^2 grid of [0, 1]^2.
struct ZSlice {
    double level = 0.0;
    int samples = 0;
    std::vector<double> values;  // row-major, x fastest
};
ZSlice sample_z_slice(const NodalField& field, double level, int samples);

/// Legacy ASCII VTK structured points (one layer) and x,y,z,value CSV of a slice.
void write_slice_vtk(const ZSlice& slice, const std::string& name, const std::string& path);
void write_slice_csv(const ZSlice& slice, const std::string& path);

/// Volume-weighted centroid of the cells whose centroid value is >= level; empty when no cell is.
std::optional<Vec3> superlevel_centroid(const NodalField& field, double level);

}  // namespace matmi
