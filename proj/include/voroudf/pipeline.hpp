#pragma once

#include "voroudf/config.hpp"
#include "voroudf/field.hpp"
#include "voroudf/geometry.hpp"

#include <string>
#include <vector>

namespace voroudf {

struct StageRecord {
    std::string name;
    double seconds = 0.0;
};

// Everything needed to reproduce and audit a run. Timings are the only
// non-deterministic part, so serialization can leave them out when byte
// comparison matters.
struct RunManifest {
    ReconConfig config;
    std::string input;

    std::vector<StageRecord> timings;

    int seeds = 0;
    int dense_samples = 0;
    long graph_edges = 0;
    long edges_pruned = 0;
    int disconnected_seeds = 0;
    int unreachable_nodes = 0;
    int dual_triangles = 0;
    int outer_iterations = 0;
    int total_inner_iterations = 0;
    bool outer_cap_reached = false;
    int tangent_stalls = 0;
    int tets_pruned = 0;
    int thin_faces_removed = 0;
    int output_vertices = 0;
    int output_faces = 0;

    std::vector<std::string> warnings;

    std::string to_json(bool with_timings = true) const;
};

struct ReconResult {
    TriangleMesh mesh;
    RunManifest manifest;
};

// Full reconstruction: seed optimization, surface graph labeling, dual
// extraction, thinning. Single-threaded runs (config.threads == 1) are
// bitwise reproducible for a fixed rng_seed.
ReconResult reconstruct(const UdfField& field, const ReconConfig& config,
                        const std::string& input_name = "");

}  // namespace voroudf
