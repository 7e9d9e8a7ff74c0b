// End-to-end acceptance checks. Each criterion prints one [PASS]/[FAIL] line;
// the exit code is the number of failures.

#include "voroudf/gvd.hpp"
#include "voroudf/metrics.hpp"
#include "voroudf/pipeline.hpp"
#include "voroudf/presets.hpp"
#include "voroudf/seed_opt.hpp"
#include "voroudf/thinning.hpp"

#include "test_shapes.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

using namespace voroudf;
using voroudf::testshapes::make_box;
using voroudf::testshapes::make_fan;
using voroudf::testshapes::make_icosphere;
using voroudf::testshapes::make_planted_mesh;
using voroudf::testshapes::make_torus;

namespace {

int failures = 0;

struct Criterion {
    std::string notes;
    bool ok = true;

    void require(bool condition, const std::string& what) {
        if (!condition) {
            ok = false;
            notes += (notes.empty() ? "" : "; ") + what;
        }
    }
};

void run(int number, const std::string& title, double budget_seconds,
         const std::function<void(Criterion&)>& body) {
    Criterion c;
    auto start = std::chrono::steady_clock::now();
    try {
        body(c);
    } catch (const std::exception& e) {
        c.require(false, std::string("exception: ") + e.what());
    }
    double elapsed = std::chrono::duration<double>(std::chrono::steady_clock::now() - start)
                         .count();
    c.require(elapsed < budget_seconds, "over time budget");
    std::printf("[%s] criterion %d: %s (%.1fs)%s%s\n", c.ok ? "PASS" : "FAIL", number,
                title.c_str(), elapsed, c.notes.empty() ? "" : " -- ", c.notes.c_str());
    std::fflush(stdout);
    if (!c.ok) ++failures;
}

UdfSample make_sample(const Vec3& p, double d, const Vec3& n) {
    UdfSample s;
    s.point = p;
    s.value = d;
    s.gradient = n;
    return s;
}

// coarse-to-fine scan of the L1 objective over the constraint polytope;
// independent of the convex solver
double polytope_scan(const Vec3& anchor, double radius, const CellSampleSet& samples,
                     double gamma, const std::vector<Halfspace>& halfspaces) {
    auto feasible = [&](const Vec3& x) {
        for (const auto& h : halfspaces)
            if (h.violation(x) > 1e-12) return false;
        return true;
    };
    Vec3 best = anchor;
    double best_obj = l1_objective(anchor, anchor, samples, gamma);
    Vec3 c = anchor;
    double r = radius;
    for (int level = 0; level < 6; ++level) {
        for (int ix = -8; ix <= 8; ++ix)
            for (int iy = -8; iy <= 8; ++iy)
                for (int iz = -8; iz <= 8; ++iz) {
                    Vec3 x = c + (r / 8.0) * Vec3(ix, iy, iz);
                    if (!feasible(x)) continue;
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

void criterion_1(Criterion& c) {
    std::mt19937_64 rng(101);
    std::uniform_real_distribution<double> uni(-1, 1);
    std::normal_distribution<double> gauss;
    double worst_gap = 0.0;
    for (int trial = 0; trial < 50; ++trial) {
        CellSampleSet cell;
        int m = 5 + static_cast<int>(15 * std::abs(uni(rng)));
        for (int i = 0; i < m; ++i) {
            Vec3 n(gauss(rng), gauss(rng), gauss(rng));
            n.normalize();
            cell.samples.push_back(
                make_sample(Vec3(uni(rng), uni(rng), uni(rng)), 0.1 * std::abs(uni(rng)), n));
        }
        Vec3 anchor(0.2 * uni(rng), 0.2 * uni(rng), 0.2 * uni(rng));
        std::vector<Vec3> neighbors;
        for (int k = 0; k < trial % 5; ++k)
            neighbors.push_back(anchor + Vec3(uni(rng), uni(rng), uni(rng)));
        auto hs = cell_halfspaces(anchor, neighbors);
        double gamma = 10.0;
        auto res = solve_l1_tangent(anchor, cell, gamma, hs);
        double oracle = polytope_scan(anchor, 1.0, cell, gamma, hs);
        worst_gap = std::max(worst_gap, std::abs(res.objective - oracle));
    }
    c.require(worst_gap < 1e-4, "objective gap " + std::to_string(worst_gap));
}

void criterion_2(Criterion& c) {
    std::mt19937_64 rng(102);
    std::uniform_real_distribution<double> uni(-1, 1);
    double worst_rel = 0.0;
    for (int trial = 0; trial < 100; ++trial) {
        int n = 4 + trial % 17;
        std::vector<Vec3> pos(n);
        for (auto& p : pos) p = Vec3(uni(rng), uni(rng), uni(rng));
        double sigma = 0.3 + 0.3 * std::abs(uni(rng));
        auto res = repulsive_energy_and_forces(pos, sigma);
        const double h = 1e-6;
        for (int i = 0; i < n; ++i) {
            for (int a = 0; a < 3; ++a) {
                std::vector<Vec3> plus = pos, minus = pos;
                plus[i][a] += h;
                minus[i][a] -= h;
                double fd = (repulsive_energy_and_forces(plus, sigma).energy -
                             repulsive_energy_and_forces(minus, sigma).energy) /
                            (2 * h);
                double denom = std::max(std::abs(res.forces[i][a]), 1e-6);
                worst_rel = std::max(worst_rel, std::abs(fd - res.forces[i][a]) / denom);
            }
        }
    }
    c.require(worst_rel < 1e-5, "force FD rel err " + std::to_string(worst_rel));

    std::normal_distribution<double> gauss;
    bool projection_ok = true;
    for (int trial = 0; trial < 1000; ++trial) {
        Mat3 a;
        for (int i = 0; i < 3; ++i)
            for (int j = 0; j < 3; ++j) a(i, j) = gauss(rng);
        if (trial % 3 == 0) a.row(2) = a.row(0) + a.row(1);  // force rank deficiency
        auto [basis, rank] = compute_null_basis(a, 0.1);
        Vec3 g(gauss(rng), gauss(rng), gauss(rng));
        Vec3 p = project_force(g, basis);
        Vec3 pp = project_force(p, basis);
        projection_ok = projection_ok && (pp - p).norm() <= 1e-12 * std::max(1.0, g.norm());
        projection_ok = projection_ok && p.norm() <= g.norm() * (1 + 1e-12);
    }
    c.require(projection_ok, "null-space projection not idempotent/nonexpansive");
}

void criterion_3(Criterion& c) {
    Preset preset = make_preset("two-disks");
    ReconConfig cfg;
    cfg.seed_count = 300;
    cfg.threads = 4;
    cfg.rng_seed = 1;
    ReconResult res = reconstruct(*preset.field, cfg, "two-disks");

    auto incidence = edge_incidence(res.mesh);
    int high = 0;
    for (const auto& [key, faces] : incidence)
        if (faces.size() >= 3) ++high;
    c.require(high > 0, "no non-manifold edges recovered");

    auto [normalized, transform] = normalize_to_unit_cube(res.mesh);
    std::vector<Vec3> reference;
    for (const Vec3& q : preset.nonmanifold_locus)
        reference.push_back(transform.scale * q + transform.offset);
    double nmcd = nm_chamfer_to_points(normalized, reference, 20000, 1);
    c.require(std::isfinite(nmcd), "NM-CD infinite (double-sheet outcome)");
    c.require(nmcd < 0.02, "NM-CD " + std::to_string(nmcd));
}

void criterion_4(Criterion& c) {
    Preset preset = make_preset("thin-plate");
    ReconConfig cfg;
    cfg.seed_count = 200;
    cfg.threads = 4;
    cfg.rng_seed = 1;
    auto seeds = optimize(*preset.field, cfg);
    auto samples = sample_surface(*preset.field, cfg.effective_dense_samples(), cfg);
    auto graph = build_and_prune_graph(samples, seeds, *preset.field, cfg.knn, cfg.eps_udf,
                                       cfg.eps_grad, cfg.threads);
    long cross_edges = 0;
    for (std::size_t i = 0; i < graph.nodes.size(); ++i)
        for (int j : graph.edges[i])
            if ((graph.nodes[i].point.z() > 0) != (graph.nodes[j].point.z() > 0)) ++cross_edges;
    c.require(cross_edges == 0, "graph edges cross the sheet gap");

    label_multisource(graph, seeds);
    auto dual = extract_dual_triangles(graph, seeds);
    long cross_triangles = 0;
    for (const auto& f : dual.mesh.faces) {
        bool side = dual.mesh.vertices[f[0]].z() > 0;
        if ((dual.mesh.vertices[f[1]].z() > 0) != side ||
            (dual.mesh.vertices[f[2]].z() > 0) != side)
            ++cross_triangles;
    }
    c.require(cross_triangles == 0, "output triangles connect seeds across sheets");
}

void criterion_5(Criterion& c) {
    SphereField sphere(Vec3::Zero(), 1.0);
    ReconConfig cfg;
    cfg.seed_count = 200;
    cfg.threads = 4;
    cfg.rng_seed = 1;
    ReconResult res = reconstruct(sphere, cfg, "sphere");

    c.require(detect_solid_tets(res.mesh).empty(), "solid tets remain");
    TriangleMesh reference = make_icosphere(3);
    MetricsConfig mcfg;
    mcfg.n_samples = 50000;
    mcfg.rng_seed = 1;
    MetricsReport rep = evaluate(res.mesh, reference, mcfg);
    c.require(rep.td == 0, "TD " + std::to_string(rep.td));
    c.require(rep.cd < 5.0, "CD x1e3 " + std::to_string(rep.cd));  // bound 5e-3
    c.require(rep.tq > 0.7, "mean TQ " + std::to_string(rep.tq));
}

void criterion_6(Criterion& c) {
    Preset preset = make_preset("cube");
    TriangleMesh reference = make_box(Vec3::Zero(), Vec3::Constant(0.4));
    std::vector<double> ecd;
    std::vector<int> inner;
    for (double delta : {1e-2, 1e-3, 1e-4}) {
        ReconConfig cfg;
        cfg.seed_count = 200;
        cfg.threads = 4;
        cfg.rng_seed = 1;
        cfg.delta = delta;
        ReconResult res = reconstruct(*preset.field, cfg, "cube");
        MetricsConfig mcfg;
        mcfg.n_samples = 50000;
        mcfg.rng_seed = 1;
        MetricsReport rep = evaluate(res.mesh, reference, mcfg);
        ecd.push_back(rep.ecd);
        inner.push_back(res.manifest.total_inner_iterations);
    }
    std::ostringstream desc;
    desc << "ecd " << ecd[0] << "/" << ecd[1] << "/" << ecd[2] << ", inner " << inner[0] << "/"
         << inner[1] << "/" << inner[2];
    c.require(ecd[0] >= ecd[1] && ecd[1] >= ecd[2], "ECD not nonincreasing: " + desc.str());
    c.require(inner[0] <= inner[1] && inner[1] <= inner[2],
              "inner iterations not nondecreasing: " + desc.str());
}

void criterion_7(Criterion& c) {
    // TQ of an equilateral triangle is exactly 1
    TriangleMesh equilateral;
    equilateral.vertices = {Vec3(0, 0, 0), Vec3(1, 0, 0), Vec3(0.5, std::sqrt(3.0) / 2, 0)};
    equilateral.append_face(0, 1, 2);
    c.require(triangle_quality(equilateral) == 1.0, "TQ(equilateral) != 1");

    c.require(euler_td(make_torus(1.0, 0.3, 24, 16), make_icosphere(2)) == 2,
              "torus-vs-sphere TD != 2");

    TriangleMesh sphere = make_icosphere(2);
    c.require(chamfer_l1(sphere, sphere, 20000, 1) == 0.0, "identical CD != 0");
    c.require(hausdorff(sphere, sphere, 20000, 1) == 0.0, "identical HD != 0");
    TriangleMesh cube = make_box();
    c.require(edge_chamfer(cube, cube, 20000, 0.2, 1) == 0.0, "identical ECD != 0");
    c.require(nm_chamfer(sphere, sphere, 20000, 1) == 0.0, "identical NM-CD != 0");

    // three faces on one edge vs a manifold mesh: exactly one locus empty
    TriangleMesh cross;
    cross.vertices = {Vec3(0, -1, 0), Vec3(0, 1, 0), Vec3(1, 0, 0), Vec3(0, 0, 1),
                      Vec3(-1, 0, 0)};
    cross.append_face(0, 1, 2);
    cross.append_face(0, 1, 3);
    cross.append_face(0, 1, 4);
    c.require(std::isinf(nm_chamfer(cross, sphere, 20000, 1)), "one-sided NM-CD not Infinite");
}

void criterion_8(Criterion& c) {
    std::mt19937_64 rng(108);
    bool components_preserved = true;
    for (int trial = 0; trial < 100; ++trial) {
        TriangleMesh mesh = make_planted_mesh(30, 40, 1 + trial % 3, rng);
        PlaneField plane(Vec3::Zero(), Vec3::UnitZ());
        auto tets = detect_solid_tets(mesh);
        if (tets.empty()) continue;
        int before = face_components(mesh).second;
        TriangleMesh pruned = prune_tet(mesh, tets.front(), plane);
        components_preserved =
            components_preserved && face_components(pruned).second == before;
    }
    c.require(components_preserved, "prune_tet changed component count");

    std::mt19937_64 rng2(109);
    TriangleMesh mesh = make_planted_mesh(40, 60, 3, rng2);
    PlaneField plane(Vec3::Zero(), Vec3::UnitZ());
    TriangleMesh once = thin(mesh, plane);
    TriangleMesh twice = thin(once, plane);
    auto face_set = [](const TriangleMesh& m) {
        std::set<std::array<int, 3>> s;
        for (auto f : m.faces) {
            std::sort(f.begin(), f.end());
            s.insert(f);
        }
        return s;
    };
    c.require(face_set(once) == face_set(twice), "thin not idempotent");

    TriangleMesh fans = make_fan(10, Vec3(0, 0, 0));
    voroudf::testshapes::append_mesh(fans, make_fan(9, Vec3(5, 0, 0)));
    TriangleMesh kept = remove_small_components(fans, 10);
    c.require(kept.faces.size() == 10, "10-face kept / 9-face removed rule broken");
}

void criterion_9(Criterion& c) {
    SphereField sphere(Vec3::Zero(), 1.0);
    ReconConfig cfg;
    cfg.seed_count = 80;
    cfg.threads = 1;
    cfg.rng_seed = 5;
    ReconResult a = reconstruct(sphere, cfg, "sphere");
    ReconResult b = reconstruct(sphere, cfg, "sphere");
    bool meshes_equal = a.mesh.faces == b.mesh.faces &&
                        a.mesh.vertices.size() == b.mesh.vertices.size();
    for (std::size_t i = 0; meshes_equal && i < a.mesh.vertices.size(); ++i)
        meshes_equal = a.mesh.vertices[i] == b.mesh.vertices[i];
    c.require(meshes_equal, "meshes differ between runs");
    // timings are wall-clock; everything else must match byte-for-byte
    c.require(a.manifest.to_json(false) == b.manifest.to_json(false), "manifests differ");
}

}  // namespace

int main() {
    run(1, "L1 tangent solve matches polytope brute force", 10, criterion_1);
    run(2, "repulsion gradient and projection checks", 5, criterion_2);
    run(3, "two-orthogonal-disks feature capture", 120, criterion_3);
    run(4, "thin-plate sheet separation", 60, criterion_4);
    run(5, "closed-surface sanity on the unit sphere", 120, criterion_5);
    run(6, "delta ablation trend on the cube", 300, criterion_6);
    run(7, "metric unit behaviors", 30, criterion_7);
    run(8, "thinning contracts", 60, criterion_8);
    run(9, "single-threaded determinism", 120, criterion_9);
    std::printf("%s: %d criterion(s) failed\n", failures ? "FAIL" : "PASS", failures);
    return failures;
}
