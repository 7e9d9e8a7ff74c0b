#include <doctest.h>

#include "voroudf/parallel.hpp"
#include "voroudf/presets.hpp"
#include "voroudf/seed_opt.hpp"

#include <random>

using namespace voroudf;

namespace {

UdfSample make_sample(const Vec3& p, double d, const Vec3& n) {
    UdfSample s;
    s.point = p;
    s.value = d;
    s.gradient = n;
    s.gradient_valid = true;
    return s;
}

// coarse-to-fine grid scan around a center point; independent check of the
// convex solver
double grid_scan_objective(const Vec3& center, double radius, const Vec3& anchor,
                           const CellSampleSet& samples, double gamma) {
    Vec3 best = center;
    double best_obj = l1_objective(center, anchor, samples, gamma);
    Vec3 c = center;
    double r = radius;
    for (int level = 0; level < 6; ++level) {
        for (int ix = -8; ix <= 8; ++ix)
            for (int iy = -8; iy <= 8; ++iy)
                for (int iz = -8; iz <= 8; ++iz) {
                    Vec3 x = c + (r / 8.0) * Vec3(ix, iy, iz);
                    double obj = l1_objective(x, anchor, samples, gamma);
                    if (obj < best_obj) {
                        best_obj = obj;
                        best = x;
                    }
                }
        c = best;
        r /= 8.0;
    }
    return best_obj;
}

}  // namespace

TEST_CASE("l1 tangent solve soft-thresholds the off-plane coordinate") {
    // all samples on the plane z=0 with upward normals: x, y have no data
    // term and stay at the anchor; |anchor_z| is far below M/(2*gamma) so the
    // L1 term snaps z to the plane exactly
    CellSampleSet cell;
    cell.seed_id = 0;
    std::mt19937_64 rng(17);
    std::uniform_real_distribution<double> uni(-0.5, 0.5);
    for (int i = 0; i < 100; ++i)
        cell.samples.push_back(make_sample(Vec3(uni(rng), uni(rng), 0.0), 0.0, Vec3::UnitZ()));
    Vec3 anchor(0.1, 0.2, 0.03);
    auto res = solve_l1_tangent(anchor, cell, 10.0, {});
    CHECK_FALSE(res.stalled);
    CHECK(res.position[0] == doctest::Approx(0.1).epsilon(1e-6));
    CHECK(res.position[1] == doctest::Approx(0.2).epsilon(1e-6));
    CHECK(std::abs(res.position[2]) < 1e-6);
    CHECK(res.objective == doctest::Approx(l1_objective(res.position, anchor, cell, 10.0)));
}

TEST_CASE("l1 tangent solve snaps onto the intersection of two planes") {
    CellSampleSet cell;
    std::mt19937_64 rng(18);
    std::uniform_real_distribution<double> uni(-0.5, 0.5);
    for (int i = 0; i < 50; ++i) {
        cell.samples.push_back(make_sample(Vec3(uni(rng), uni(rng), 0.0), 0.0, Vec3::UnitZ()));
        cell.samples.push_back(make_sample(Vec3(0.0, uni(rng), uni(rng)), 0.0, Vec3::UnitX()));
    }
    Vec3 anchor(0.05, 0.3, 0.04);
    auto res = solve_l1_tangent(anchor, cell, 10.0, {});
    CHECK(std::abs(res.position[0]) < 1e-6);
    CHECK(res.position[1] == doctest::Approx(0.3).epsilon(1e-6));
    CHECK(std::abs(res.position[2]) < 1e-6);
}

TEST_CASE("l1 tangent solve matches a brute-force scan on random instances") {
    std::mt19937_64 rng(19);
    std::uniform_real_distribution<double> uni(-1, 1);
    std::normal_distribution<double> gauss;
    for (int trial = 0; trial < 5; ++trial) {
        CellSampleSet cell;
        for (int i = 0; i < 40; ++i) {
            Vec3 n(gauss(rng), gauss(rng), gauss(rng));
            n.normalize();
            cell.samples.push_back(
                make_sample(Vec3(uni(rng), uni(rng), uni(rng)), 0.1 * std::abs(uni(rng)), n));
        }
        Vec3 anchor(0.2 * uni(rng), 0.2 * uni(rng), 0.2 * uni(rng));
        auto res = solve_l1_tangent(anchor, cell, 10.0, {});
        double oracle = grid_scan_objective(anchor, 1.0, anchor, cell, 10.0);
        CHECK(res.objective <= oracle + 1e-4);
        CHECK(res.objective <= l1_objective(anchor, anchor, cell, 10.0) + 1e-12);
    }
}

TEST_CASE("l1 tangent solve respects the cell polytope") {
    // data pulls x toward (2,0,0) but the bisector against a neighbor at
    // (1,0,0) caps x at 0.5
    CellSampleSet cell;
    for (int i = 0; i < 60; ++i)
        cell.samples.push_back(make_sample(Vec3(2, 0.01 * i, 0), 0.0, Vec3::UnitX()));
    Vec3 anchor = Vec3::Zero();
    auto hs = cell_halfspaces(anchor, {Vec3(1, 0, 0)});
    REQUIRE(hs.size() == 1);
    auto res = solve_l1_tangent(anchor, cell, 0.5, hs);
    CHECK(res.position[0] <= 0.5 + 1e-6);
    CHECK(res.position[0] > 0.4);  // pushed all the way to the wall
    CHECK(res.objective <= l1_objective(anchor, anchor, cell, 0.5) + 1e-12);
}

TEST_CASE("dykstra projection lands inside the polytope") {
    std::mt19937_64 rng(23);
    std::normal_distribution<double> gauss;
    std::uniform_real_distribution<double> uni(0.2, 1.0);
    std::vector<Halfspace> hs;
    for (int i = 0; i < 8; ++i) {
        Vec3 n(gauss(rng), gauss(rng), gauss(rng));
        n.normalize();
        hs.push_back({n, uni(rng)});  // all contain the origin strictly
    }
    for (int t = 0; t < 50; ++t) {
        Vec3 x(3 * gauss(rng), 3 * gauss(rng), 3 * gauss(rng));
        Vec3 p = project_to_polytope(x, hs);
        for (const auto& h : hs) CHECK(h.violation(p) < 1e-9);
        // idempotent
        CHECK(project_to_polytope(p, hs).isApprox(p, 1e-9));
    }
    // single halfspace: closed-form projection
    Halfspace one{Vec3::UnitX(), 0.5};
    Vec3 p = project_to_polytope(Vec3(2, 1, -1), {one});
    CHECK(p.isApprox(Vec3(0.5, 1, -1), 1e-12));
}

TEST_CASE("null basis rank thresholding") {
    Mat3 a = Vec3(1.0, 0.5, 0.001).asDiagonal();
    auto [basis, rank] = compute_null_basis(a, 0.1);
    CHECK(rank == 2);
    REQUIRE(basis.cols() == 1);
    CHECK(std::abs(basis.col(0).dot(Vec3::UnitZ())) == doctest::Approx(1.0));

    auto [b0, r0] = compute_null_basis(Mat3::Zero(), 0.1);
    CHECK(r0 == 0);
    CHECK(b0.cols() == 3);
    CHECK((b0.transpose() * b0).isIdentity(1e-12));

    auto [b3, r3] = compute_null_basis(Mat3::Identity(), 0.1);
    CHECK(r3 == 3);
    CHECK(b3.cols() == 0);
    CHECK(project_force(Vec3(1, 2, 3), b3).norm() == 0.0);
}

TEST_CASE("kernel width equals the brute-force minimum pair distance") {
    std::mt19937_64 rng(29);
    std::uniform_real_distribution<double> uni(-1, 1);
    std::vector<Vec3> pts;
    for (int i = 0; i < 1000; ++i) pts.emplace_back(uni(rng), uni(rng), uni(rng));
    double brute = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < pts.size(); ++i)
        for (std::size_t j = i + 1; j < pts.size(); ++j)
            brute = std::min(brute, (pts[i] - pts[j]).norm());
    CHECK(kernel_width(pts) == doctest::Approx(brute).epsilon(1e-15));

    pts.push_back(pts[3]);
    CHECK_THROWS_AS(kernel_width(pts), ZeroWidthError);
}

TEST_CASE("repulsion energy of a pair at distance sigma") {
    double sigma = 0.25;
    std::vector<Vec3> pts = {Vec3::Zero(), Vec3(sigma, 0, 0)};
    auto rep = repulsive_energy_and_forces(pts, sigma);
    CHECK(rep.energy == doctest::Approx(2.0 * std::exp(-0.5)));
    CHECK(rep.forces[0].isApprox(-rep.forces[1], 1e-12));
    CHECK(rep.forces[0][0] == doctest::Approx(2.0 * std::exp(-0.5) / sigma));
}

TEST_CASE("repulsion forces match finite differences") {
    std::mt19937_64 rng(31);
    std::uniform_real_distribution<double> uni(-0.5, 0.5);
    std::vector<Vec3> pts;
    for (int i = 0; i < 20; ++i) pts.emplace_back(uni(rng), uni(rng), uni(rng));
    double sigma = 0.5;  // 4*sigma covers the whole box, no cutoff kinks
    auto rep = repulsive_energy_and_forces(pts, sigma);
    const double h = 1e-6;
    for (int i = 0; i < 20; ++i) {
        for (int a = 0; a < 3; ++a) {
            auto plus = pts, minus = pts;
            plus[i][a] += h;
            minus[i][a] -= h;
            double fd = (repulsive_energy_and_forces(plus, sigma).energy -
                         repulsive_energy_and_forces(minus, sigma).energy) /
                        (2 * h);
            CHECK(rep.forces[i][a] == doctest::Approx(fd).epsilon(1e-5));
        }
    }
}

TEST_CASE("repulsion is bitwise identical across thread counts") {
    std::mt19937_64 rng(37);
    std::uniform_real_distribution<double> uni(-1, 1);
    std::vector<Vec3> pts;
    for (int i = 0; i < 300; ++i) pts.emplace_back(uni(rng), uni(rng), uni(rng));
    auto serial = repulsive_energy_and_forces(pts, 0.1, 1);
    auto parallel = repulsive_energy_and_forces(pts, 0.1, 4);
    CHECK(serial.energy == parallel.energy);
    for (int i = 0; i < 300; ++i) CHECK(serial.forces[i] == parallel.forces[i]);
}

TEST_CASE("cell samples stay strictly inside their voronoi cell") {
    SphereField sphere(Vec3::Zero(), 1.0);
    Vec3 seed(-0.5, -0.5, -0.5);
    std::vector<Vec3> neighbors;
    for (int i = 1; i < 8; ++i)
        neighbors.emplace_back((i & 1) ? 0.5 : -0.5, (i & 2) ? 0.5 : -0.5, (i & 4) ? 0.5 : -0.5);
    Rng rng(42);
    auto cell = sample_cell(seed, 0, neighbors, sphere, 100, 0.2, rng);
    CHECK_FALSE(cell.budget_exhausted);
    REQUIRE(cell.samples.size() == 100);
    for (const auto& s : cell.samples) {
        CHECK(s.gradient_valid);
        double own = (s.point - seed).squaredNorm();
        for (const auto& nb : neighbors) CHECK((s.point - nb).squaredNorm() > own);
        // annotation is the true field value at the sample
        CHECK(s.value == doctest::Approx(sphere.eval(s.point).value));
    }
}

TEST_CASE("seed initialization lands on the surface and is reproducible") {
    Preset preset = make_preset("sphere");
    ReconConfig cfg;
    cfg.seed_count = 100;
    cfg.rng_seed = 7;
    auto seeds = init_seeds(*preset.field, cfg);
    REQUIRE(seeds.size() == 100);
    for (const auto& s : seeds) CHECK(std::abs(s.position.norm() - 1.0) < 1e-9);
    for (std::size_t i = 0; i < seeds.size(); ++i)
        for (std::size_t j = i + 1; j < seeds.size(); ++j)
            CHECK((seeds[i].position - seeds[j].position).norm() > 0);

    auto again = init_seeds(*preset.field, cfg);
    for (std::size_t i = 0; i < seeds.size(); ++i)
        CHECK(seeds[i].position == again[i].position);

    cfg.rng_seed = 8;
    auto other = init_seeds(*preset.field, cfg);
    CHECK(seeds[0].position != other[0].position);
}

TEST_CASE("optimization spreads seeds over the sphere and stays on it") {
    Preset preset = make_preset("sphere");
    ReconConfig cfg;
    cfg.seed_count = 40;
    cfg.samples_per_cell = 30;
    cfg.max_outer_iters = 3;
    cfg.max_lbfgs_iters = 15;
    cfg.rng_seed = 3;

    auto initial = init_seeds(*preset.field, cfg);
    std::vector<Vec3> init_pos;
    for (const auto& s : initial) init_pos.push_back(s.position);
    double width_before = kernel_width(init_pos);

    OptimizeStats stats;
    auto seeds = optimize(*preset.field, cfg, &stats);
    REQUIRE(seeds.size() == 40);
    std::vector<Vec3> pos;
    for (const auto& s : seeds) {
        CHECK(std::abs(s.position.norm() - 1.0) < 1e-7);
        CHECK_FALSE(s.degenerate_flagged);
        pos.push_back(s.position);
    }
    CHECK(kernel_width(pos) > width_before);  // repulsion pushed the closest pair apart
    CHECK(stats.outer_iterations >= 1);
    CHECK(stats.total_inner_iterations >= 1);

    SUBCASE("parallel run is bitwise identical") {
        ReconConfig par = cfg;
        par.threads = 4;
        auto same = optimize(*preset.field, par);
        for (std::size_t i = 0; i < seeds.size(); ++i)
            CHECK(seeds[i].position == same[i].position);
    }
}
