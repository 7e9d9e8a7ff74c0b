#pragma once

#include "voroudf/geometry.hpp"

#include <string>

namespace voroudf {

// Positions and faces only; other attributes are skipped.
TriangleMesh read_mesh(const std::string& path);  // dispatch on extension
TriangleMesh read_obj(const std::string& path);
TriangleMesh read_ply(const std::string& path);   // binary_little_endian or ascii

void write_mesh(const TriangleMesh& mesh, const std::string& path);
void write_obj(const TriangleMesh& mesh, const std::string& path);
void write_ply(const TriangleMesh& mesh, const std::string& path);

// Debug dump: colored point cloud (one RGB per label id, cycling palette).
void write_labeled_points_ply(const std::vector<Vec3>& points, const std::vector<int>& labels,
                              const std::string& path);

// Plain point cloud, ascii PLY.
void write_points_ply(const std::vector<Vec3>& points, const std::string& path);

std::vector<Vec3> read_points_ply(const std::string& path);

}  // namespace voroudf
