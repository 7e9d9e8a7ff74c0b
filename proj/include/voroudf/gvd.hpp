#pragma once

#include "voroudf/config.hpp"
#include "voroudf/field.hpp"
#include "voroudf/geometry.hpp"
#include "voroudf/seed_opt.hpp"

#include <vector>

namespace voroudf {

// KNN graph over dense on-surface samples, pruned so that edges neither cross
// gaps in the field nor leave the surface; labeled by geodesic flooding from
// the seeds.
struct SurfaceGraph {
    std::vector<UdfSample> nodes;  // point on surface, gradient = normal estimate
    std::vector<std::vector<int>> edges;  // symmetric adjacency lists, sorted
    std::vector<int> labels;              // nearest seed id per node, -1 unlabeled
    std::vector<double> dist;             // geodesic distance to the labeling seed
    std::vector<std::vector<int>> source_links;  // per seed: attached node ids
    std::vector<int> disconnected_seeds;         // seeds with zero surviving links
    std::vector<int> unreachable_nodes;
    double eps_udf = 0.0;
    double eps_grad = 0.0;
    double median_spacing = 0.0;
    long edges_pruned = 0;  // candidate KNN edges rejected by either test
};

// Dense uniform draws in the domain projected onto the zero set; the normal of
// each sample is the field gradient at the last descent step (the on-surface
// gradient itself is degenerate). Deterministic per config.rng_seed.
std::vector<UdfSample> sample_surface(const UdfField& field, int count,
                                      const ReconConfig& config);

// Symmetric KNN graph with both pruning tests applied to every edge:
//   (1) F(midpoint) > eps_udf        -> crossing a gap, remove
//   (2) max(|n_a.e|, |n_b.e|) > eps_grad -> leaving the surface, remove
// Seeds attach to their k nearest samples through the same tests.
// eps_udf <= 0 selects the default 1.5 x median nearest-neighbor spacing.
SurfaceGraph build_and_prune_graph(const std::vector<UdfSample>& samples,
                                   const std::vector<SeedState>& seeds, const UdfField& field,
                                   int k, double eps_udf, double eps_grad, int threads = 1);

// Multi-source Dijkstra over Euclidean edge lengths from all attached seeds;
// ties broken toward the smaller seed id.
void label_multisource(SurfaceGraph& graph, const std::vector<SeedState>& seeds);

// One triangle {i,j,k} per node labeled i with neighbors labeled j and k
// (all distinct), deduplicated; triples confirmed by fewer than min_witness
// nodes are dropped (they are usually labeling noise near open boundaries).
// Vertices are the seed positions with unused seeds dropped. Returns the
// remap alongside the mesh.
struct DualMesh {
    TriangleMesh mesh;
    std::vector<int> seed_of_vertex;  // original seed id per output vertex
};

DualMesh extract_dual_triangles(const SurfaceGraph& graph, const std::vector<SeedState>& seeds,
                                int min_witness = 1);

}  // namespace voroudf
