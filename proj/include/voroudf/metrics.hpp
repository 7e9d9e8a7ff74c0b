#pragma once

#include "voroudf/field.hpp"
#include "voroudf/geometry.hpp"

#include <string>
#include <vector>

namespace voroudf {

// Area-weighted uniform surface sample with its face normal.
struct SurfacePoint {
    Vec3 point = Vec3::Zero();
    Vec3 normal = Vec3::Zero();
};

std::vector<SurfacePoint> sample_mesh_surface(const TriangleMesh& mesh, int count, Rng& rng);

// Mean per-triangle quality (6/sqrt(3)) * S / (p * h) with S the area, p the
// half-perimeter and h the longest edge; 1 exactly for equilateral triangles.
// Degenerate faces are skipped (counted into *degenerate if given).
double triangle_quality(const TriangleMesh& mesh, int* degenerate = nullptr);

// L1 chamfer: 0.5 * (mean distance A-samples -> B surface + symmetric term).
// Both sides are drawn with the same rng stream, so identical meshes give 0.
double chamfer_l1(const TriangleMesh& a, const TriangleMesh& b, int n_samples,
                  std::uint64_t rng_seed = 0);

// Sampled symmetric Hausdorff, as a percentage of the joint bbox diagonal.
// Mesh vertices are included alongside the samples.
double hausdorff(const TriangleMesh& a, const TriangleMesh& b, int n_samples,
                 std::uint64_t rng_seed = 0);

// Chamfer between the "sharp" sample subsets: a sample is sharp when two
// normals within radius (0.01 * joint bbox diagonal) have dot < threshold.
// One-sided empty -> infinity; both empty -> 0.
double edge_chamfer(const TriangleMesh& a, const TriangleMesh& b, int n_samples,
                    double sharp_threshold = 0.2, std::uint64_t rng_seed = 0);

// |chi(A) - chi(B)| with chi = V - E + F over referenced vertices.
long euler_td(const TriangleMesh& a, const TriangleMesh& b);

// Non-manifold locus of a mesh: edges with incidence > 2 (as segments) and
// vertices with a disconnected or non-disk face link (as points).
struct NonManifoldLocus {
    std::vector<std::pair<Vec3, Vec3>> edges;
    std::vector<Vec3> vertices;
    bool empty() const { return edges.empty() && vertices.empty(); }
};

NonManifoldLocus non_manifold_locus(const TriangleMesh& mesh);

// Chamfer between the sampled non-manifold loci. Exactly one side empty ->
// infinity; both empty -> 0.
double nm_chamfer(const TriangleMesh& a, const TriangleMesh& b, int n_samples,
                  std::uint64_t rng_seed = 0);

// Chamfer from a's non-manifold locus to an explicit reference point set (for
// analytic ground-truth loci).
double nm_chamfer_to_points(const TriangleMesh& a, const std::vector<Vec3>& reference,
                            int n_samples, std::uint64_t rng_seed = 0);

struct MetricsConfig {
    int n_samples = 100000;
    double sharp_threshold = 0.2;
    std::uint64_t rng_seed = 0;
};

// Full report. Meshes are first normalized jointly to the centered unit cube
// (longest joint bbox side = 1); cd and nm_cd are reported x1e3, ecd x1e2, hd
// as a percentage of the joint diagonal.
struct MetricsReport {
    double cd = 0.0;
    double hd = 0.0;
    double ecd = 0.0;
    double tq = 0.0;
    long td = 0;
    double nm_cd = 0.0;
    int n_samples = 0;
    double sharp_threshold = 0.2;
    std::uint64_t rng_seed = 0;

    std::string to_json() const;
    static std::string csv_header();
    std::string to_csv_row(const std::string& label) const;
};

MetricsReport evaluate(const TriangleMesh& reconstructed, const TriangleMesh& reference,
                       const MetricsConfig& config = {});

}  // namespace voroudf
