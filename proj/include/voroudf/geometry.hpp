#pragma once

#include <Eigen/Dense>
#include <array>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <vector>

namespace voroudf {

using Vec3 = Eigen::Vector3d;
using Mat3 = Eigen::Matrix3d;

struct VoroudfError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct EmptyMeshError : VoroudfError {
    EmptyMeshError() : VoroudfError("mesh has no faces") {}
};

// Undirected edge key, vertex order independent.
inline std::uint64_t edge_key(int a, int b) {
    if (a > b) std::swap(a, b);
    return (static_cast<std::uint64_t>(a) << 32) | static_cast<std::uint32_t>(b);
}

struct TriangleMesh {
    std::vector<Vec3> vertices;
    std::vector<std::array<int, 3>> faces;

    bool empty() const { return faces.empty(); }
    std::size_t face_count() const { return faces.size(); }
    std::size_t vertex_count() const { return vertices.size(); }

    void append_face(int a, int b, int c) { faces.push_back({a, b, c}); }
};

// Map edge -> ids of incident faces. Non-manifold edges have > 2 entries.
std::unordered_map<std::uint64_t, std::vector<int>> edge_incidence(const TriangleMesh& mesh);

// Connected components of faces, joined through shared vertices.
// Returns per-face component id and the component count.
std::pair<std::vector<int>, int> face_components(const TriangleMesh& mesh);

// True if the given face subset is a 2-manifold with boundary: every edge has
// incidence <= 2 within the subset and every vertex link is a single fan.
bool is_manifold_patch(const TriangleMesh& mesh, const std::vector<int>& face_ids);

// Drop faces by flag, then drop unreferenced vertices and remap indices.
TriangleMesh remove_faces(const TriangleMesh& mesh, const std::vector<bool>& remove);

// Euler characteristic V - E + F over referenced vertices and unique edges.
long euler_characteristic(const TriangleMesh& mesh);

struct BBox {
    Vec3 lo = Vec3::Constant(std::numeric_limits<double>::infinity());
    Vec3 hi = Vec3::Constant(-std::numeric_limits<double>::infinity());
    void expand(const Vec3& p) { lo = lo.cwiseMin(p); hi = hi.cwiseMax(p); }
    Vec3 extent() const { return hi - lo; }
    Vec3 center() const { return 0.5 * (lo + hi); }
    double diagonal() const { return extent().norm(); }
};

BBox bounding_box(const TriangleMesh& mesh);
BBox bounding_box(const std::vector<Vec3>& points);

struct UnitCubeTransform {
    double scale = 1.0;       // applied scale (original -> normalized)
    Vec3 offset = Vec3::Zero();  // normalized = scale * original + offset
    Vec3 to_original(const Vec3& p) const { return (p - offset) / scale; }
    bool identity() const { return scale == 1.0 && offset.isZero(0.0); }
};

// Center the mesh at the origin and scale so the longest bbox side is 1.
std::pair<TriangleMesh, UnitCubeTransform> normalize_to_unit_cube(const TriangleMesh& mesh);

double triangle_area(const Vec3& a, const Vec3& b, const Vec3& c);

}  // namespace voroudf
