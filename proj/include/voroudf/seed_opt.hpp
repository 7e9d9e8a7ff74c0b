#pragma once

#include "voroudf/config.hpp"
#include "voroudf/field.hpp"
#include "voroudf/geometry.hpp"

#include <vector>

namespace voroudf {

using NullBasis = Eigen::Matrix<double, 3, Eigen::Dynamic>;

struct SeedState {
    int id = -1;
    Vec3 position = Vec3::Zero();
    Vec3 anchor = Vec3::Zero();     // position at the start of the current tangent solve
    Mat3 tangent_matrix = Mat3::Zero();  // reduced 3x3 system (R of the stacked normals)
    Vec3 tangent_rhs = Vec3::Zero();
    NullBasis null_basis;           // orthonormal columns spanning null(tangent_matrix)
    int rank = 0;
    bool degenerate_flagged = false;
    bool budget_flagged = false;
    bool solver_stalled = false;
};

struct CellSampleSet {
    int seed_id = -1;
    std::vector<UdfSample> samples;
    bool budget_exhausted = false;
};

// Voronoi-cell inequality against a neighboring seed: normal . x <= offset.
struct Halfspace {
    Vec3 normal;
    double offset;
    double violation(const Vec3& x) const { return normal.dot(x) - offset; }
};

struct ProjectionFailure : VoroudfError {
    ProjectionFailure() : VoroudfError("too many seeds failed to project onto the surface") {}
};

struct ZeroWidthError : VoroudfError {
    ZeroWidthError() : VoroudfError("coincident seeds give zero kernel width") {}
};

// N seeds drawn uniformly in the field's domain and projected onto the zero
// set. Deterministic per config.rng_seed.
std::vector<SeedState> init_seeds(const UdfField& field, const ReconConfig& config);

// Bisector inequalities of the cell of `anchor` against each neighbor.
std::vector<Halfspace> cell_halfspaces(const Vec3& anchor, const std::vector<Vec3>& neighbors);

// M points drawn uniformly in the ball reaching the nearest neighbor seed,
// kept only when the nearest-seed test passes, each annotated with (d, n).
CellSampleSet sample_cell(const Vec3& seed_position, int seed_id,
                          const std::vector<Vec3>& neighbor_positions, const UdfField& field,
                          int samples_per_cell, double fallback_radius, Rng& rng);

struct L1SolveResult {
    Vec3 position = Vec3::Zero();
    Mat3 reduced_matrix = Mat3::Zero();
    Vec3 reduced_rhs = Vec3::Zero();
    double objective = 0.0;
    int iterations = 0;
    bool stalled = false;  // hit the iteration cap; position reverted to anchor
};

// argmin over the halfspace polytope of
//   sum_m |n_m . (p_m - x) - d_m| + gamma * |x - anchor|^2
// solved by ADMM with soft-thresholding; the x-update projects onto the
// polytope with Dykstra's alternating projections.
L1SolveResult solve_l1_tangent(const Vec3& anchor, const CellSampleSet& samples, double gamma,
                               const std::vector<Halfspace>& halfspaces, int max_iters = 200,
                               double tol = 1e-8);

double l1_objective(const Vec3& x, const Vec3& anchor, const CellSampleSet& samples,
                    double gamma);

// QR-compress the stacked sample constraints n_m . x = n_m . p_m - d_m into an
// equivalent 3x3 upper-triangular system.
std::pair<Mat3, Vec3> reduce_tangent_system(const CellSampleSet& samples);

// Unconstrained least-squares baseline (ablation only); Tikhonov damping 1e-9
// pulls the under-determined directions toward the anchor.
Vec3 solve_l2_tangent(const CellSampleSet& samples, const Vec3& anchor);

// Dykstra projection onto an intersection of halfspaces.
Vec3 project_to_polytope(const Vec3& x, const std::vector<Halfspace>& halfspaces,
                         int max_cycles = 500, double tol = 1e-14);

// SVD-based null space: rank r = #{sigma_k > tau * sigma_max}; the basis is
// the trailing right singular vectors.
std::pair<NullBasis, int> compute_null_basis(const Mat3& A, double tau);

// Minimum pairwise seed distance (grid-accelerated).
double kernel_width(const std::vector<Vec3>& positions);

struct RepulsionResult {
    double energy = 0.0;
    std::vector<Vec3> forces;  // dE/dx_i
};

// Gaussian pair energy over all ordered pairs; pairs beyond 4*sigma are
// skipped. Accumulation order is fixed so parallel and serial runs agree.
RepulsionResult repulsive_energy_and_forces(const std::vector<Vec3>& positions, double sigma,
                                            int threads = 1);

inline Vec3 project_force(const Vec3& g, const NullBasis& basis) {
    if (basis.cols() == 0) return Vec3::Zero();
    return basis * (basis.transpose() * g);
}

struct OptimizeStats {
    int outer_iterations = 0;
    int total_inner_iterations = 0;
    int projection_retries = 0;
    bool max_iterations_reached = false;
    bool converged = false;
};

// Full seed optimization: alternating L1 tangent updates and null-space
// projected repulsion with L-BFGS, until the inner loop performs no updates.
std::vector<SeedState> optimize(const UdfField& field, const ReconConfig& config,
                                OptimizeStats* stats = nullptr);

}  // namespace voroudf
