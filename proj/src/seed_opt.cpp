#include "voroudf/seed_opt.hpp"

#include "voroudf/bvh.hpp"
#include "voroudf/parallel.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <deque>
#include <unordered_set>

namespace voroudf {

namespace {

constexpr std::uint64_t kPhaseInit = 1;
constexpr std::uint64_t kPhaseTangent = 2;
constexpr std::uint64_t kPhaseInner = 3;
constexpr std::uint64_t kPhaseJitter = 4;

bool projection_ok(const ProjectionResult& res, double tol) {
    return res.converged || res.residual <= std::max(tol, kDegenerateEps);
}

Vec3 uniform_in_box(const BBox& box, Rng& rng) {
    std::uniform_real_distribution<double> uni(0.0, 1.0);
    Vec3 p;
    for (int a = 0; a < 3; ++a) p[a] = box.lo[a] + uni(rng) * (box.hi[a] - box.lo[a]);
    return p;
}

Vec3 uniform_in_ball(const Vec3& center, double radius, Rng& rng) {
    std::normal_distribution<double> gauss;
    std::uniform_real_distribution<double> uni(0.0, 1.0);
    Vec3 dir(gauss(rng), gauss(rng), gauss(rng));
    double n = dir.norm();
    while (n < 1e-12) {
        dir = Vec3(gauss(rng), gauss(rng), gauss(rng));
        n = dir.norm();
    }
    return center + (radius * std::cbrt(uni(rng)) / n) * dir;
}

}  // namespace

std::vector<SeedState> init_seeds(const UdfField& field, const ReconConfig& config) {
    config.validate();
    const BBox box = field.domain();
    const int n = config.seed_count;
    std::vector<SeedState> seeds(n);
    std::vector<Vec3> accepted;
    accepted.reserve(n);
    int hard_failures = 0;
    for (int slot = 0; slot < n; ++slot) {
        bool placed = false;
        for (std::uint64_t attempt = 0; attempt < 100 && !placed; ++attempt) {
            Rng rng(derive_seed(config.rng_seed, kPhaseInit, attempt, slot));
            Vec3 p = uniform_in_box(box, rng);
            auto res = project_to_surface(field, p, config.projection_max_steps,
                                          config.projection_tol);
            if (!projection_ok(res, config.projection_tol)) continue;
            bool duplicate = false;
            for (const Vec3& q : accepted)
                if (q == res.point) duplicate = true;
            if (duplicate) continue;
            seeds[slot].id = slot;
            seeds[slot].position = res.point;
            seeds[slot].anchor = res.point;
            accepted.push_back(res.point);
            placed = true;
            if (attempt >= 20) ++hard_failures;
        }
        if (!placed) throw ProjectionFailure{};
    }
    if (hard_failures * 20 > n) throw ProjectionFailure{};
    return seeds;
}

std::vector<Halfspace> cell_halfspaces(const Vec3& anchor, const std::vector<Vec3>& neighbors) {
    std::vector<Halfspace> hs;
    hs.reserve(neighbors.size());
    for (const Vec3& nb : neighbors) {
        if ((nb - anchor).squaredNorm() < 1e-30) continue;  // coincident, no bisector
        hs.push_back({2.0 * (nb - anchor), nb.squaredNorm() - anchor.squaredNorm()});
    }
    return hs;
}

CellSampleSet sample_cell(const Vec3& seed_position, int seed_id,
                          const std::vector<Vec3>& neighbor_positions, const UdfField& field,
                          int samples_per_cell, double fallback_radius, Rng& rng) {
    CellSampleSet set;
    set.seed_id = seed_id;
    double radius = fallback_radius;
    if (!neighbor_positions.empty()) {
        double nearest = std::numeric_limits<double>::infinity();
        for (const Vec3& nb : neighbor_positions)
            nearest = std::min(nearest, (nb - seed_position).norm());
        if (nearest > 0) radius = nearest;
    }
    const int budget = 20 * samples_per_cell;
    for (int draw = 0; draw < budget &&
                       static_cast<int>(set.samples.size()) < samples_per_cell;
         ++draw) {
        Vec3 p = uniform_in_ball(seed_position, radius, rng);
        double own = (p - seed_position).squaredNorm();
        bool inside = true;
        for (const Vec3& nb : neighbor_positions) {
            if ((p - nb).squaredNorm() <= own) {
                inside = false;
                break;
            }
        }
        if (!inside) continue;
        UdfSample s = field.eval(p);
        if (!s.gradient_valid) continue;  // degenerate zone, redraw
        set.samples.push_back(s);
    }
    set.budget_exhausted = static_cast<int>(set.samples.size()) < samples_per_cell;
    return set;
}

std::pair<Mat3, Vec3> reduce_tangent_system(const CellSampleSet& samples) {
    const int m = static_cast<int>(samples.samples.size());
    Eigen::MatrixXd stack(std::max(m, 3), 3);
    Eigen::VectorXd rhs(std::max(m, 3));
    stack.setZero();
    rhs.setZero();
    for (int i = 0; i < m; ++i) {
        const UdfSample& s = samples.samples[i];
        stack.row(i) = s.gradient.transpose();
        rhs[i] = s.gradient.dot(s.point) - s.value;
    }
    Eigen::HouseholderQR<Eigen::MatrixXd> qr(stack);
    Mat3 reduced = qr.matrixQR()
                       .topRows<3>()
                       .template triangularView<Eigen::Upper>()
                       .toDenseMatrix();
    Eigen::MatrixXd thin_q =
        qr.householderQ() * Eigen::MatrixXd::Identity(stack.rows(), 3);
    Vec3 reduced_rhs = thin_q.transpose() * rhs;
    return {reduced, reduced_rhs};
}

Vec3 project_to_polytope(const Vec3& x, const std::vector<Halfspace>& halfspaces, int max_cycles,
                         double tol) {
    if (halfspaces.empty()) return x;
    // Dykstra's alternating projections with per-constraint corrections.
    Vec3 y = x;
    std::vector<Vec3> corrections(halfspaces.size(), Vec3::Zero());
    for (int cycle = 0; cycle < max_cycles; ++cycle) {
        double moved = 0.0;
        for (std::size_t c = 0; c < halfspaces.size(); ++c) {
            Vec3 z = y + corrections[c];
            const Halfspace& h = halfspaces[c];
            double v = h.violation(z);
            Vec3 projected = z;
            if (v > 0) projected -= (v / h.normal.squaredNorm()) * h.normal;
            corrections[c] = z - projected;
            moved = std::max(moved, (projected - y).norm());
            y = projected;
        }
        if (moved < tol) break;
    }
    return y;
}

double l1_objective(const Vec3& x, const Vec3& anchor, const CellSampleSet& samples,
                    double gamma) {
    double obj = gamma * (x - anchor).squaredNorm();
    for (const UdfSample& s : samples.samples)
        obj += std::abs(s.gradient.dot(s.point - x) - s.value);
    return obj;
}

namespace {

// Fallback when ADMM runs out of iterations: primal active-set descent with a
// smoothing-Newton inner solve. Minimizes
//   gamma |x - x0|^2 + sum_i sqrt(e_i^2 + eps^2),   e = b - A x
// over the polytope, driving eps -> 0. The iterate stays feasible; a ratio
// test against the inactive walls picks up blocking constraints.
Vec3 smooth_l1_min(const Eigen::MatrixXd& A, const Eigen::VectorXd& b, const Vec3& x0,
                   double gamma, const std::vector<Halfspace>& halfspaces, Vec3 x) {
    const int m = static_cast<int>(A.rows());
    auto smooth_obj = [&](const Vec3& p, double eps) {
        double f = gamma * (p - x0).squaredNorm();
        Eigen::VectorXd e = b - A * p;
        for (int i = 0; i < m; ++i) f += std::sqrt(e[i] * e[i] + eps * eps);
        return f;
    };
    std::vector<int> walls;  // active set
    for (std::size_t j = 0; j < halfspaces.size(); ++j)
        if (halfspaces[j].violation(x) / halfspaces[j].normal.norm() > -1e-12)
            walls.push_back(static_cast<int>(j));

    for (int outer = 0; outer < 40; ++outer) {
        // orthonormal basis of the subspace cut out by the active walls
        Eigen::Matrix<double, 3, Eigen::Dynamic> basis;
        if (walls.empty()) {
            basis = Mat3::Identity();
        } else {
            Eigen::MatrixXd hw(static_cast<int>(walls.size()), 3);
            for (std::size_t k = 0; k < walls.size(); ++k)
                hw.row(k) = halfspaces[walls[k]].normal.transpose();
            Eigen::JacobiSVD<Eigen::MatrixXd> svd(hw, Eigen::ComputeFullV);
            int rank = 0;
            for (int k = 0; k < svd.singularValues().size(); ++k)
                if (svd.singularValues()[k] > 1e-12 * svd.singularValues()[0]) ++rank;
            basis = svd.matrixV().rightCols(3 - rank);
        }

        int blocking = -1;
        for (double eps = 1e-2; eps > 5e-11 && blocking < 0; eps *= 0.1) {
            for (int newton = 0; newton < 30; ++newton) {
                Eigen::VectorXd e = b - A * x;
                Vec3 grad = 2.0 * gamma * (x - x0);
                Mat3 hess = 2.0 * gamma * Mat3::Identity();
                for (int i = 0; i < m; ++i) {
                    double s = std::sqrt(e[i] * e[i] + eps * eps);
                    grad -= (e[i] / s) * A.row(i).transpose();
                    hess += (eps * eps / (s * s * s)) * A.row(i).transpose() * A.row(i);
                }
                if (basis.cols() == 0) break;
                Eigen::VectorXd g = basis.transpose() * grad;
                if (g.norm() < 1e-12) break;
                Eigen::MatrixXd h = basis.transpose() * hess * basis;
                Vec3 dir = basis * h.ldlt().solve(-g).eval();

                // stay feasible: ratio test against the inactive walls
                double alpha_max = 1.0;
                int hit = -1;
                for (std::size_t j = 0; j < halfspaces.size(); ++j) {
                    if (std::find(walls.begin(), walls.end(), static_cast<int>(j)) !=
                        walls.end())
                        continue;
                    double along = halfspaces[j].normal.dot(dir);
                    if (along <= 1e-15) continue;
                    double room = -halfspaces[j].violation(x) / along;
                    if (room < alpha_max) {
                        alpha_max = room;
                        hit = static_cast<int>(j);
                    }
                }
                double f0 = smooth_obj(x, eps);
                double alpha = alpha_max;
                while (alpha > 1e-14 && smooth_obj(x + alpha * dir, eps) > f0) alpha *= 0.5;
                if (alpha <= 1e-14) break;
                if (hit >= 0 && alpha >= 0.99 * alpha_max) {
                    x += alpha_max * dir;  // land exactly on the blocking wall
                    blocking = hit;
                    break;
                }
                x += alpha * dir;
            }
        }
        if (blocking >= 0) {
            walls.push_back(blocking);
            continue;
        }

        if (walls.empty()) break;
        // wall multipliers: stationarity grad + sum_j lambda_j h_j = 0, need all >= 0
        Eigen::VectorXd e = b - A * x;
        Vec3 grad = 2.0 * gamma * (x - x0);
        const double eps_final = 1e-10;
        for (int i = 0; i < m; ++i) {
            double s = std::sqrt(e[i] * e[i] + eps_final * eps_final);
            grad -= (e[i] / s) * A.row(i).transpose();
        }
        Eigen::MatrixXd hw(static_cast<int>(walls.size()), 3);
        for (std::size_t k = 0; k < walls.size(); ++k)
            hw.row(k) = halfspaces[walls[k]].normal.transpose();
        Eigen::VectorXd lambda =
            hw.transpose().completeOrthogonalDecomposition().solve(-grad);
        int worst = -1;
        double worst_val = -1e-9;
        for (int k = 0; k < lambda.size(); ++k) {
            if (lambda[k] < worst_val) {
                worst_val = lambda[k];
                worst = k;
            }
        }
        if (worst < 0) break;
        walls.erase(walls.begin() + worst);
    }
    return x;
}

}  // namespace

L1SolveResult solve_l1_tangent(const Vec3& anchor, const CellSampleSet& samples, double gamma,
                               const std::vector<Halfspace>& halfspaces, int max_iters,
                               double tol) {
    const int m = static_cast<int>(samples.samples.size());
    if (m < 3) throw VoroudfError("solve_l1_tangent needs at least 3 samples");
    for (const Halfspace& h : halfspaces) {
        if (h.violation(anchor) > 1e-9)
            throw VoroudfError("anchor outside its own cell polytope");
    }

    Eigen::MatrixXd A(m, 3);
    Eigen::VectorXd b(m);
    for (int i = 0; i < m; ++i) {
        A.row(i) = samples.samples[i].gradient.transpose();
        b[i] = samples.samples[i].gradient.dot(samples.samples[i].point) -
               samples.samples[i].value;
    }
    const Mat3 ata = A.transpose() * A;
    const Vec3 atb_base = A.transpose() * b;

    // ADMM on  min |r|_1 + gamma |x - anchor|^2 + I_poly(z)
    //          s.t.  A x + r = b,  x = z
    // The extra consensus copy z keeps the polytope projection a plain
    // Euclidean projection (exact prox) instead of distorting the x-update.
    double rho = 1.0;
    const double relax = 1.7;  // over-relaxation, cuts the iteration count roughly in half
    Vec3 x = project_to_polytope(
        (ata + 2.0 * gamma * Mat3::Identity()).ldlt().solve(atb_base + 2.0 * gamma * anchor),
        halfspaces);  // warm start at the (damped) least-squares point
    Vec3 z = x;
    Eigen::VectorXd r = b - A * x;
    Eigen::VectorXd u = Eigen::VectorXd::Zero(m);
    Vec3 w = Vec3::Zero();
    L1SolveResult out;
    bool converged = false;
    for (int it = 0; it < max_iters; ++it) {
        Mat3 lhs = (2.0 * gamma + rho) * Mat3::Identity() + rho * ata;
        Vec3 rhs =
            2.0 * gamma * anchor + rho * (A.transpose() * (b - r - u)) + rho * (z - w);
        x = lhs.ldlt().solve(rhs);

        Eigen::VectorXd r_old = r;
        Eigen::VectorXd ax_hat = relax * (A * x) + (1.0 - relax) * (b - r_old);
        Eigen::VectorXd v = b - ax_hat - u;
        const double thresh = 1.0 / rho;
        for (int i = 0; i < m; ++i)
            r[i] = v[i] > thresh ? v[i] - thresh : (v[i] < -thresh ? v[i] + thresh : 0.0);
        u += ax_hat + r - b;

        Vec3 z_old = z;
        Vec3 x_hat = relax * x + (1.0 - relax) * z_old;
        z = project_to_polytope(x_hat + w, halfspaces);
        w += x_hat - z;

        out.iterations = it + 1;
        double primal_res = std::max((A * x + r - b).lpNorm<Eigen::Infinity>(),
                                     (x - z).lpNorm<Eigen::Infinity>());
        double dual_res =
            rho * std::max((A.transpose() * (r - r_old)).lpNorm<Eigen::Infinity>(),
                           (z - z_old).lpNorm<Eigen::Infinity>());
        if (primal_res < tol && dual_res < tol) {
            converged = true;
            break;
        }
        // residual balancing keeps both residuals shrinking at a similar rate
        if (primal_res > 10.0 * dual_res) {
            rho *= 2.0;
            u /= 2.0;
            w /= 2.0;
        } else if (dual_res > 10.0 * primal_res) {
            rho /= 2.0;
            u *= 2.0;
            w *= 2.0;
        }
    }
    x = project_to_polytope(x, halfspaces);
    if (!converged) {
        Vec3 alt = smooth_l1_min(A, b, anchor, gamma, halfspaces, x);
        if (l1_objective(alt, anchor, samples, gamma) <
            l1_objective(x, anchor, samples, gamma))
            x = alt;
    }

    // Active-set polish: fix the sign pattern of the residuals, treat the
    // near-zero ones (and the touching walls) as equalities, and solve the
    // resulting smooth quadratic exactly; reclassify and repeat while the
    // objective improves. Clears the slow terminal phase of ADMM around the
    // L1 kinks and certifies optimality via the KKT subgradient conditions.
    const double b_scale = std::max(1.0, b.lpNorm<Eigen::Infinity>());
    Vec3 best_x = x;
    double best_obj = l1_objective(x, anchor, samples, gamma);
    bool best_certified = converged;
    for (double tol_mult : {1e-8, 1e-6, 1e-4, 1e-3}) {
        const double act_tol = tol_mult * b_scale;
        x = best_x;
        bool certified = converged;
        for (int round = 0; round < 100; ++round) {
            Eigen::VectorXd e = b - A * x;
            std::vector<int> active_samples;
            std::vector<int> active_walls;
            Vec3 c = Vec3::Zero();
            for (int i = 0; i < m; ++i) {
                if (std::abs(e[i]) <= act_tol)
                    active_samples.push_back(i);
                else
                    c += (e[i] > 0 ? 1.0 : -1.0) * A.row(i).transpose();
            }
            for (std::size_t j = 0; j < halfspaces.size(); ++j) {
                const Halfspace& h = halfspaces[j];
                if (h.violation(x) / h.normal.norm() >= -act_tol)
                    active_walls.push_back(static_cast<int>(j));
            }
            const int na = static_cast<int>(active_samples.size());
            const int nw = static_cast<int>(active_walls.size());
            Eigen::MatrixXd eq(na + nw, 3);
            Eigen::VectorXd eq_rhs(na + nw);
            for (int k = 0; k < na; ++k) {
                eq.row(k) = A.row(active_samples[k]);
                eq_rhs[k] = b[active_samples[k]];
            }
            for (int k = 0; k < nw; ++k) {
                eq.row(na + k) = halfspaces[active_walls[k]].normal.transpose();
                eq_rhs[na + k] = halfspaces[active_walls[k]].offset;
            }
            Vec3 cand = anchor + c / (2.0 * gamma);
            if (na + nw > 0) {
                Eigen::VectorXd nu =
                    (eq * eq.transpose())
                        .completeOrthogonalDecomposition()
                        .solve(2.0 * gamma * (eq_rhs - eq * anchor) - eq * c);
                cand = anchor + (c + eq.transpose() * nu) / (2.0 * gamma);
            }
            bool feasible = true;
            for (const Halfspace& h : halfspaces)
                if (h.violation(cand) / h.normal.norm() > 1e-10) feasible = false;
            if (!feasible) break;
            double obj_x = l1_objective(x, anchor, samples, gamma);
            double obj_cand = l1_objective(cand, anchor, samples, gamma);
            bool near_opt = obj_cand <= obj_x + 1e-9 * (1.0 + obj_x);

            if (!certified && near_opt) {
                // KKT: 2*gamma*(cand-x0) - c = sum_Z g_i a_i - sum_act lambda_j h_j
                // with |g_i| <= 1 and lambda_j >= 0. Solved as a bounded
                // least-squares by projected gradient; a residual of ~0 is a
                // certificate that cand is the exact minimizer.
                Vec3 target = 2.0 * gamma * (cand - anchor) - c;
                if (na + nw == 0) {
                    certified = target.norm() < 1e-7 * std::max(1.0, b_scale);
                } else {
                    Eigen::MatrixXd et = eq.transpose();  // 3 x (na+nw)
                    Eigen::VectorXd mu = et.completeOrthogonalDecomposition().solve(target);
                    auto clamp_mu = [&](Eigen::VectorXd& v) {
                        for (int k = 0; k < na; ++k)
                            v[k] = std::clamp(v[k], -1.0, 1.0);
                        for (int k = 0; k < nw; ++k)
                            v[na + k] = std::min(v[na + k], 0.0);
                    };
                    clamp_mu(mu);
                    double step = 1.0 / (2.0 * (eq * et).trace() + 1e-30);
                    for (int pg = 0; pg < 2000; ++pg) {
                        Eigen::VectorXd grad = 2.0 * (eq * (et * mu - target));
                        mu -= step * grad;
                        clamp_mu(mu);
                    }
                    certified =
                        (et * mu - target).norm() < 1e-7 * std::max(1.0, b_scale);
                }
                if (certified) {
                    x = cand;
                    break;
                }
            }

            if (obj_cand > obj_x + 1e-13 * (1.0 + obj_x)) {
                // the sign pattern flipped past a kink; damp the step to the
                // best point on the segment toward the candidate
                double best_t = 0.0;
                double best = obj_x;
                for (double t = 0.5; t > 1e-4; t *= 0.5) {
                    double o = l1_objective(x + t * (cand - x), anchor, samples, gamma);
                    if (o < best) {
                        best = o;
                        best_t = t;
                    }
                }
                if (best_t == 0.0) break;
                cand = x + best_t * (cand - x);
            }
            bool moved = (cand - x).norm() > 1e-13;
            x = cand;
            if (!moved) break;
        }
        double obj_here = l1_objective(x, anchor, samples, gamma);
        // a certified point is the exact minimizer; never trade it away for an
        // uncertified point that is better only at noise level
        bool take = certified ? (!best_certified || obj_here < best_obj)
                              : (!best_certified && obj_here < best_obj);
        if (take) {
            best_obj = obj_here;
            best_x = x;
            best_certified = certified;
        }
    }
    x = best_x;
    converged = converged || best_certified;

    auto [reduced, reduced_rhs] = reduce_tangent_system(samples);
    out.reduced_matrix = reduced;
    out.reduced_rhs = reduced_rhs;
    if (!converged) {
        out.stalled = true;
        x = anchor;
    }
    // never worse than the anchor
    double obj_x = l1_objective(x, anchor, samples, gamma);
    double obj_anchor = l1_objective(anchor, anchor, samples, gamma);
    if (obj_x > obj_anchor) {
        x = anchor;
        obj_x = obj_anchor;
    }
    out.position = x;
    out.objective = obj_x;
    return out;
}

Vec3 solve_l2_tangent(const CellSampleSet& samples, const Vec3& anchor) {
    const int m = static_cast<int>(samples.samples.size());
    Mat3 ata = Mat3::Zero();
    Vec3 atb = Vec3::Zero();
    for (int i = 0; i < m; ++i) {
        const Vec3& n = samples.samples[i].gradient;
        double rhs = n.dot(samples.samples[i].point) - samples.samples[i].value;
        ata += n * n.transpose();
        atb += n * rhs;
    }
    const double damping = 1e-9;
    return (ata + damping * Mat3::Identity()).ldlt().solve(atb + damping * anchor);
}

std::pair<NullBasis, int> compute_null_basis(const Mat3& A, double tau) {
    Eigen::JacobiSVD<Mat3> svd(A, Eigen::ComputeFullV);
    const Vec3& sigma = svd.singularValues();
    int rank = 0;
    if (sigma[0] > 0) {
        for (int i = 0; i < 3; ++i)
            if (sigma[i] > tau * sigma[0]) ++rank;
    }
    NullBasis basis = svd.matrixV().rightCols(3 - rank);
    return {basis, rank};
}

double kernel_width(const std::vector<Vec3>& positions) {
    if (positions.size() < 2) throw VoroudfError("kernel_width needs at least 2 seeds");
    PointGrid grid(positions);
    double w = grid.min_pairwise_distance();
    if (w <= 0.0) throw ZeroWidthError{};
    return w;
}

RepulsionResult repulsive_energy_and_forces(const std::vector<Vec3>& positions, double sigma,
                                            int threads) {
    if (sigma <= 0) throw VoroudfError("repulsion kernel width must be positive");
    const int n = static_cast<int>(positions.size());
    RepulsionResult out;
    out.forces.assign(n, Vec3::Zero());
    std::vector<double> per_seed_energy(n, 0.0);
    PointGrid grid(positions);
    const double cutoff = 4.0 * sigma;
    const double inv_two_sigma2 = 1.0 / (2.0 * sigma * sigma);
    const double inv_sigma2 = 1.0 / (sigma * sigma);
    parallel_for(n, threads, [&](int i) {
        double e = 0.0;
        Vec3 f = Vec3::Zero();
        for (int j : grid.radius_query(positions[i], cutoff)) {
            if (j == i) continue;
            Vec3 diff = positions[j] - positions[i];
            double w = std::exp(-diff.squaredNorm() * inv_two_sigma2);
            e += w;
            // both ordered pair terms (i,j) and (j,i) depend on x_i
            f += 2.0 * w * inv_sigma2 * diff;
        }
        per_seed_energy[i] = e;
        out.forces[i] = f;
    });
    for (int i = 0; i < n; ++i) out.energy += per_seed_energy[i];
    return out;
}

// ---------------------------------------------------------------------------
// L-BFGS with strong Wolfe line search over the concatenated seed positions

namespace {

struct LbfgsMemory {
    std::deque<std::pair<Eigen::VectorXd, Eigen::VectorXd>> pairs;  // (s, y)
    int capacity = 10;

    void push(Eigen::VectorXd s, Eigen::VectorXd y) {
        if (s.dot(y) <= 1e-12) return;  // keep the inverse Hessian positive definite
        pairs.emplace_back(std::move(s), std::move(y));
        if (static_cast<int>(pairs.size()) > capacity) pairs.pop_front();
    }

    void clear() { pairs.clear(); }

    Eigen::VectorXd direction(const Eigen::VectorXd& g) const {
        Eigen::VectorXd q = g;
        std::vector<double> alpha(pairs.size());
        for (int i = static_cast<int>(pairs.size()) - 1; i >= 0; --i) {
            const auto& [s, y] = pairs[i];
            double rho = 1.0 / s.dot(y);
            alpha[i] = rho * s.dot(q);
            q -= alpha[i] * y;
        }
        if (!pairs.empty()) {
            const auto& [s, y] = pairs.back();
            q *= s.dot(y) / y.squaredNorm();
        }
        for (std::size_t i = 0; i < pairs.size(); ++i) {
            const auto& [s, y] = pairs[i];
            double rho = 1.0 / s.dot(y);
            double beta = rho * y.dot(q);
            q += (alpha[i] - beta) * s;
        }
        return -q;
    }
};

struct LineEval {
    double f = 0.0;
    Eigen::VectorXd grad;
};

// phi(alpha) with gradient; Evaluator exposes operator()(alpha) -> LineEval
// and deriv(ev) -> phi'(alpha).
template <typename Evaluator>
double strong_wolfe(Evaluator&& eval, double f0, double g0, LineEval& accepted,
                    double alpha_max, double c1 = 1e-4, double c2 = 0.9) {
    if (g0 >= 0) return 0.0;
    double alpha_prev = 0.0, f_prev = f0;
    double alpha = std::min(1.0, alpha_max);
    double lo = 0.0, hi = 0.0, f_lo = f0;
    bool bracketed = false;
    LineEval ev;
    double last_alpha = 0.0;
    for (int i = 0; i < 12 && !bracketed; ++i) {
        ev = eval(alpha);
        last_alpha = alpha;
        if (ev.f > f0 + c1 * alpha * g0 || (i > 0 && ev.f >= f_prev)) {
            lo = alpha_prev;
            f_lo = f_prev;
            hi = alpha;
            bracketed = true;
            break;
        }
        double deriv = eval.deriv(ev);
        if (std::abs(deriv) <= -c2 * g0) {
            accepted = ev;
            return alpha;
        }
        if (deriv >= 0) {
            lo = alpha;
            f_lo = ev.f;
            hi = alpha_prev;
            bracketed = true;
            break;
        }
        alpha_prev = alpha;
        f_prev = ev.f;
        alpha = std::min(2.0 * alpha, alpha_max);
        if (alpha >= alpha_max) break;
    }
    if (!bracketed) {
        // ran out of expansions; accept the last point if it decreased
        if (ev.f < f0 + c1 * last_alpha * g0) {
            accepted = ev;
            return last_alpha;
        }
        return 0.0;
    }
    // zoom by bisection
    double best_alpha = 0.0;
    for (int i = 0; i < 25; ++i) {
        double mid = 0.5 * (lo + hi);
        ev = eval(mid);
        if (ev.f > f0 + c1 * mid * g0 || ev.f >= f_lo) {
            hi = mid;
        } else {
            double deriv = eval.deriv(ev);
            if (std::abs(deriv) <= -c2 * g0) {
                accepted = ev;
                return mid;
            }
            if (deriv * (hi - lo) >= 0) hi = lo;
            lo = mid;
            f_lo = ev.f;
            best_alpha = mid;
        }
        if (std::abs(hi - lo) < 1e-14) break;
    }
    if (best_alpha > 0 && f_lo < f0) {
        accepted = eval(best_alpha);
        return best_alpha;
    }
    return 0.0;
}

}  // namespace

std::vector<SeedState> optimize(const UdfField& field, const ReconConfig& config,
                                OptimizeStats* stats) {
    config.validate();
    std::vector<SeedState> seeds = init_seeds(field, config);
    const int n = config.seed_count;
    const double diag = field.domain().diagonal();
    const double fallback_radius = 0.1 * diag;
    OptimizeStats st;

    auto positions_of = [&] {
        std::vector<Vec3> p(n);
        for (int i = 0; i < n; ++i) p[i] = seeds[i].position;
        return p;
    };

    std::atomic<int> retries{0};
    auto project_all = [&](std::uint64_t iter_tag) {
        parallel_for(n, config.threads, [&](int i) {
            auto res = project_to_surface(field, seeds[i].position,
                                          config.projection_max_steps, config.projection_tol);
            int tries = 0;
            Rng jrng(derive_seed(config.rng_seed, kPhaseJitter, iter_tag, i));
            std::normal_distribution<double> gauss;
            while (!projection_ok(res, config.projection_tol) && tries < 5) {
                Vec3 q = seeds[i].position +
                         1e-4 * diag * Vec3(gauss(jrng), gauss(jrng), gauss(jrng));
                res = project_to_surface(field, q, config.projection_max_steps,
                                        config.projection_tol);
                ++tries;
            }
            retries += tries;
            if (projection_ok(res, config.projection_tol)) {
                seeds[i].position = res.point;
            } else {
                seeds[i].degenerate_flagged = true;
            }
        });
    };

    // Resample every cell at the current positions and refresh the reduced
    // tangent system and null basis of each seed.
    auto refresh_tangent_systems = [&](std::uint64_t iter_tag) {
        std::vector<Vec3> pos = positions_of();
        PointGrid grid(pos);
        parallel_for(n, config.threads, [&](int i) {
            auto nn = grid.knn(pos[i], config.halfspace_neighbor_count, i);
            std::vector<Vec3> neighbors;
            neighbors.reserve(nn.size());
            for (int j : nn) neighbors.push_back(pos[j]);
            Rng rng(derive_seed(config.rng_seed, kPhaseInner, iter_tag, i));
            CellSampleSet cell = sample_cell(pos[i], i, neighbors, field,
                                             config.samples_per_cell, fallback_radius, rng);
            seeds[i].budget_flagged = seeds[i].budget_flagged || cell.budget_exhausted;
            auto [reduced, rhs] = reduce_tangent_system(cell);
            seeds[i].tangent_matrix = reduced;
            seeds[i].tangent_rhs = rhs;
            auto [basis, rank] = compute_null_basis(reduced, config.rank_threshold);
            seeds[i].null_basis = basis;
            seeds[i].rank = rank;
        });
    };

    auto dedupe_positions = [&] {
        // coincident seeds break the kernel width; nudge duplicates apart
        for (int round = 0; round < 10; ++round) {
            bool any = false;
            std::vector<Vec3> pos = positions_of();
            PointGrid grid(pos);
            for (int i = 0; i < n; ++i) {
                auto nn = grid.knn(pos[i], 1, i);
                if (!nn.empty() && nn[0] > i && (pos[nn[0]] - pos[i]).norm() == 0.0) {
                    Rng jrng(derive_seed(config.rng_seed, kPhaseJitter, 1000 + round, nn[0]));
                    std::normal_distribution<double> gauss;
                    seeds[nn[0]].position +=
                        1e-9 * diag * Vec3(gauss(jrng), gauss(jrng), gauss(jrng));
                    any = true;
                }
            }
            if (!any) break;
        }
    };

    bool converged = false;
    for (int outer = 0; outer < config.max_outer_iters && !converged; ++outer) {
        // --- tangent update for every seed
        {
            std::vector<Vec3> pos = positions_of();
            PointGrid grid(pos);
            parallel_for(n, config.threads, [&](int i) {
                auto nn = grid.knn(pos[i], config.halfspace_neighbor_count, i);
                std::vector<Vec3> neighbors;
                for (int j : nn) neighbors.push_back(pos[j]);
                Rng rng(derive_seed(config.rng_seed, kPhaseTangent, outer, i));
                CellSampleSet cell = sample_cell(pos[i], i, neighbors, field,
                                                 config.samples_per_cell, fallback_radius, rng);
                seeds[i].anchor = pos[i];
                seeds[i].budget_flagged = seeds[i].budget_flagged || cell.budget_exhausted;
                if (static_cast<int>(cell.samples.size()) >= 3) {
                    auto hs = cell_halfspaces(pos[i], neighbors);
                    L1SolveResult res = solve_l1_tangent(pos[i], cell, config.gamma, hs);
                    seeds[i].position = res.position;
                    seeds[i].tangent_matrix = res.reduced_matrix;
                    seeds[i].tangent_rhs = res.reduced_rhs;
                    seeds[i].solver_stalled = seeds[i].solver_stalled || res.stalled;
                } else {
                    auto [reduced, rhs] = reduce_tangent_system(cell);
                    seeds[i].tangent_matrix = reduced;
                    seeds[i].tangent_rhs = rhs;
                }
                auto [basis, rank] =
                    compute_null_basis(seeds[i].tangent_matrix, config.rank_threshold);
                seeds[i].null_basis = basis;
                seeds[i].rank = rank;
            });
        }

        // --- kernel width
        dedupe_positions();
        double sigma = kernel_width(positions_of());

        // --- inner repulsion loop
        LbfgsMemory memory;
        Eigen::VectorXd g_prev;
        int inner_updates = 0;
        for (int t = 0; t < config.max_lbfgs_iters; ++t) {
            std::uint64_t tag = static_cast<std::uint64_t>(outer) * 10000 + t;
            project_all(tag);
            refresh_tangent_systems(tag);

            std::vector<Vec3> pos = positions_of();
            RepulsionResult rep = repulsive_energy_and_forces(pos, sigma, config.threads);
            Eigen::VectorXd g(3 * n);
            for (int i = 0; i < n; ++i)
                g.segment<3>(3 * i) = project_force(rep.forces[i], seeds[i].null_basis);

            if (g.norm() < 1e-14) break;
            if (g_prev.size()) {
                double rel = (g - g_prev).norm() / std::max(g_prev.norm(), 1e-12);
                if (rel < config.delta) break;
            }
            g_prev = g;

            Eigen::VectorXd d = memory.direction(g);
            if (d.dot(g) >= 0) d = -g;

            // phi(alpha) evaluated at raw (unprojected) trial positions with the
            // null bases frozen for the duration of the search
            struct Evaluator {
                const std::vector<Vec3>* base;
                const Eigen::VectorXd* dir;
                const std::vector<SeedState>* seeds;
                double sigma;
                int threads, n;
                LineEval operator()(double alpha) const {
                    std::vector<Vec3> trial(n);
                    for (int i = 0; i < n; ++i)
                        trial[i] = (*base)[i] + alpha * dir->segment<3>(3 * i);
                    RepulsionResult r = repulsive_energy_and_forces(trial, sigma, threads);
                    LineEval ev;
                    ev.f = r.energy;
                    ev.grad.resize(3 * n);
                    for (int i = 0; i < n; ++i)
                        ev.grad.segment<3>(3 * i) =
                            project_force(r.forces[i], (*seeds)[i].null_basis);
                    return ev;
                }
                double deriv(const LineEval& ev) const { return ev.grad.dot(*dir); }
            };
            Evaluator eval{&pos, &d, &seeds, sigma, config.threads, n};
            // trust region: the energy is only meaningful near the surface, so
            // no seed may move further than half a kernel width per step (the
            // unprojected energy otherwise rewards flying off along the tangent
            // plane, and re-projection then scrambles the distribution)
            double d_max = 0.0;
            for (int i = 0; i < n; ++i) d_max = std::max(d_max, d.segment<3>(3 * i).norm());
            if (d_max <= 0) break;
            LineEval accepted;
            double alpha = strong_wolfe(eval, rep.energy, g.dot(d), accepted, 0.5 * sigma / d_max);
            if (alpha <= 0) break;  // no downhill step exists
            if (alpha * d_max < 1e-10 * diag) break;  // no meaningful movement left

            for (int i = 0; i < n; ++i)
                seeds[i].position = pos[i] + alpha * d.segment<3>(3 * i);
            memory.push(alpha * d, accepted.grad - g);
            ++inner_updates;
            ++st.total_inner_iterations;
        }
        project_all(static_cast<std::uint64_t>(outer) * 10000 + 9999);
        ++st.outer_iterations;
        if (inner_updates == 0) converged = true;
        if (std::getenv("VOROUDF_TRACE")) {
            std::vector<Vec3> pos = positions_of();
            PointGrid grid(pos);
            std::vector<double> nn(n);
            for (int i = 0; i < n; ++i) {
                auto v = grid.knn(pos[i], 1, i);
                nn[i] = v.empty() ? 0.0 : (pos[v[0]] - pos[i]).norm();
            }
            std::sort(nn.begin(), nn.end());
            double e = repulsive_energy_and_forces(pos, sigma, config.threads).energy;
            std::fprintf(stderr,
                         "outer=%d sigma=%.4f inner=%d E=%.3f nn min=%.4f med=%.4f max=%.4f\n",
                         outer, sigma, inner_updates, e, nn.front(), nn[n / 2], nn.back());
        }
    }
    st.converged = converged;
    st.max_iterations_reached = !converged;
    st.projection_retries = retries.load();
    if (stats) *stats = st;
    return seeds;
}

}  // namespace voroudf
