#pragma once

#include <cstdint>
#include <string>

namespace voroudf {

// All pipeline knobs. Serializable as JSON with full-default merging.
struct ReconConfig {
    int seed_count = 200;             // N
    int samples_per_cell = 100;       // M
    double gamma = 10.0;              // proximity regularizer weight
    double delta = 1e-3;              // inner-loop termination threshold
    int knn = 20;                     // k for the surface sample graph
    int dense_sample_count = 0;       // 0 -> 100 * seed_count
    double eps_udf = 0.0;             // 0 -> 1.5 * median nearest-neighbor spacing
    double eps_grad = 0.8;            // |cos| threshold for edge/normal alignment
    int max_outer_iters = 30;
    int max_lbfgs_iters = 100;
    double rank_threshold = 0.1;      // tau, relative to sigma_max
    std::uint64_t rng_seed = 0;
    int halfspace_neighbor_count = 12;  // K
    double projection_tol = 1e-9;
    int projection_max_steps = 30;
    int thin_max_component_faces = 10;
    int min_triple_witness = 3;  // graph nodes required to confirm a dual triangle
    int threads = 1;

    void validate() const;  // throws VoroudfError on out-of-range values

    int effective_dense_samples() const {
        return dense_sample_count > 0 ? dense_sample_count : 100 * seed_count;
    }

    std::string to_json() const;
    // Starts from defaults, overriding only keys present in the document.
    static ReconConfig from_json(const std::string& text);
    static ReconConfig from_json_file(const std::string& path);
};

}  // namespace voroudf
