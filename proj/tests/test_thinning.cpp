#include <doctest.h>

#include "voroudf/thinning.hpp"

#include "test_shapes.hpp"

#include <algorithm>
#include <random>
#include <set>

using namespace voroudf;
using namespace voroudf::testshapes;

namespace {

// every 4-vertex subset whose 4 faces are all present; only viable for tiny meshes
std::set<std::array<int, 4>> brute_force_tets(const TriangleMesh& mesh) {
    std::set<std::array<int, 3>> faces;
    for (const auto& f : mesh.faces) {
        std::array<int, 3> s = f;
        std::sort(s.begin(), s.end());
        faces.insert(s);
    }
    std::set<std::array<int, 4>> tets;
    const int n = static_cast<int>(mesh.vertices.size());
    for (int a = 0; a < n; ++a)
        for (int b = a + 1; b < n; ++b)
            for (int c = b + 1; c < n; ++c)
                for (int d = c + 1; d < n; ++d)
                    if (faces.count({a, b, c}) && faces.count({a, b, d}) &&
                        faces.count({a, c, d}) && faces.count({b, c, d}))
                        tets.insert({a, b, c, d});
    return tets;
}

std::set<std::array<int, 3>> face_set(const TriangleMesh& mesh) {
    std::set<std::array<int, 3>> out;
    for (const auto& f : mesh.faces) {
        std::array<int, 3> s = f;
        std::sort(s.begin(), s.end());
        out.insert(s);
    }
    return out;
}

}  // namespace

TEST_CASE("solid tet detection") {
    SUBCASE("a closed tetrahedron is one tet") {
        auto tets = detect_solid_tets(make_tet_shell(Vec3::Zero()));
        REQUIRE(tets.size() == 1);
        CHECK(tets[0].vertices == std::array<int, 4>{0, 1, 2, 3});
        // faces[i] omits vertices[i]
        for (int i = 0; i < 4; ++i) {
            const auto& f = make_tet_shell(Vec3::Zero()).faces[tets[0].faces[i]];
            CHECK(std::find(f.begin(), f.end(), tets[0].vertices[i]) == f.end());
        }
    }

    SUBCASE("an octahedron surface has none") {
        TriangleMesh octa;
        octa.vertices = {{1, 0, 0}, {-1, 0, 0}, {0, 1, 0}, {0, -1, 0}, {0, 0, 1}, {0, 0, -1}};
        octa.faces = {{0, 2, 4}, {2, 1, 4}, {1, 3, 4}, {3, 0, 4},
                      {2, 0, 5}, {1, 2, 5}, {3, 1, 5}, {0, 3, 5}};
        CHECK(detect_solid_tets(octa).empty());
    }

    SUBCASE("random meshes match the brute-force subset oracle") {
        std::mt19937_64 rng(17);
        for (int trial = 0; trial < 20; ++trial) {
            TriangleMesh mesh = make_planted_mesh(24, 60, trial % 4, rng);
            REQUIRE(mesh.vertices.size() <= 40);
            auto oracle = brute_force_tets(mesh);
            auto found = detect_solid_tets(mesh);
            REQUIRE(found.size() == oracle.size());
            for (const auto& tet : found) CHECK(oracle.count(tet.vertices) == 1);
            CHECK(found.size() >= static_cast<std::size_t>(trial % 4));
        }
    }

    SUBCASE("three planted tets in a larger soup are found exactly") {
        std::mt19937_64 rng(23);
        TriangleMesh mesh = make_planted_mesh(60, 488, 3, rng);
        CHECK(mesh.faces.size() == 500);
        auto found = detect_solid_tets(mesh);
        REQUIRE(found.size() == 3);
        // the planted tets use the last 12 vertices
        for (const auto& tet : found)
            for (int v : tet.vertices) CHECK(v >= 60);
    }
}

TEST_CASE("tet pair pruning") {
    SUBCASE("removes the pair with the highest shared-edge UDF") {
        PlaneField plane(Vec3::Zero(), Vec3::UnitZ());
        TriangleMesh tet;
        tet.vertices = {{0, 0, 0}, {1, 0, 0}, {0.5, 0.5, 0.3}, {0.5, -0.5, 0.3}};
        tet.faces = {{0, 1, 2}, {0, 1, 3}, {0, 2, 3}, {1, 2, 3}};
        auto tets = detect_solid_tets(tet);
        REQUIRE(tets.size() == 1);
        TriangleMesh pruned = prune_tet(tet, tets[0], plane);
        REQUIRE(pruned.faces.size() == 2);
        // edge (2,3) sits at z = 0.3, the farthest from the plane, so the two
        // faces containing it go; the survivors share the on-plane edge (0,1)
        auto remaining = face_set(pruned);
        CHECK(remaining.count({0, 1, 2}) == 1);
        CHECK(remaining.count({0, 1, 3}) == 1);
    }

    SUBCASE("component count is preserved") {
        SphereField field(Vec3::Zero(), 1.0);
        std::mt19937_64 rng(31);
        for (int trial = 0; trial < 10; ++trial) {
            TriangleMesh mesh = make_planted_mesh(20, 40, 2, rng);
            int components = face_components(mesh).second;
            auto tets = detect_solid_tets(mesh);
            for (std::size_t done = 0; done < 2 && !tets.empty(); ++done) {
                mesh = prune_tet(mesh, tets[0], field);
                CHECK(face_components(mesh).second == components);
                tets = detect_solid_tets(mesh);
            }
        }
    }

    SUBCASE("a tet with no manifold edge is refused") {
        TriangleMesh mesh = make_tet_shell(Vec3::Zero(), 1.0);
        // one extra face on each of the 6 edges lifts every incidence to 3
        int extra = 4;
        for (int a = 0; a < 4; ++a) {
            for (int b = a + 1; b < 4; ++b) {
                mesh.vertices.push_back(mesh.vertices[a] + Vec3(0, 0, 2.0 + extra));
                mesh.append_face(a, b, extra);
                ++extra;
            }
        }
        auto tets = detect_solid_tets(mesh);
        REQUIRE(tets.size() == 1);
        SphereField field(Vec3::Zero(), 1.0);
        CHECK_THROWS_AS(prune_tet(mesh, tets[0], field), NoManifoldPair);
    }
}

TEST_CASE("small component removal") {
    SUBCASE("floating fragment goes, sphere stays") {
        TriangleMesh mesh = make_icosphere(2);
        append_mesh(mesh, make_tet_shell(Vec3(3, 0, 0)));
        TriangleMesh cleaned = remove_small_components(mesh, 10);
        CHECK(cleaned.faces.size() == make_icosphere(2).faces.size());
        for (const auto& v : cleaned.vertices) CHECK(v.norm() < 1.5);
    }

    SUBCASE("exactly 10 faces is kept, 9 is removed") {
        TriangleMesh keep = make_fan(10, Vec3(5, 0, 0));
        TriangleMesh drop = make_fan(9, Vec3(-5, 0, 0));
        TriangleMesh mesh = keep;
        append_mesh(mesh, drop);
        TriangleMesh cleaned = remove_small_components(mesh, 10);
        CHECK(cleaned.faces.size() == 10);
        for (const auto& v : cleaned.vertices) CHECK(v[0] > 0);
    }

    SUBCASE("a non-manifold small component survives") {
        // two triangle pairs glued along one edge three times over
        TriangleMesh mesh;
        mesh.vertices = {{0, 0, 0}, {1, 0, 0}, {0.5, 1, 0}, {0.5, -1, 0}, {0.5, 0, 1}};
        mesh.faces = {{0, 1, 2}, {0, 1, 3}, {0, 1, 4}};
        TriangleMesh cleaned = remove_small_components(mesh, 10);
        CHECK(cleaned.faces.size() == 3);
    }

    SUBCASE("vertex-chained fans all dissolve at the fixpoint") {
        TriangleMesh mesh = make_icosphere(1);
        // fan A hangs off the sphere by one vertex; fan B hangs off fan A
        Vec3 anchor = mesh.vertices[0];
        TriangleMesh fan_a = make_fan(6, anchor + Vec3(0.2, 0, 0));
        fan_a.vertices[1] = anchor;  // share a single vertex with the sphere
        append_mesh(mesh, fan_a);
        int fan_a_apex = static_cast<int>(mesh.vertices.size()) - 8;  // fan_a vertex 0
        TriangleMesh fan_b = make_fan(5, mesh.vertices[fan_a_apex] + Vec3(0.2, 0, 0));
        fan_b.vertices[1] = mesh.vertices[fan_a_apex];
        append_mesh(mesh, fan_b);

        TriangleMesh cleaned = remove_small_components(mesh, 10);
        CHECK(cleaned.faces.size() == make_icosphere(1).faces.size());
        CHECK(detect_solid_tets(cleaned).empty());
    }
}

TEST_CASE("full thinning") {
    SphereField field(Vec3::Zero(), 1.0);

    SUBCASE("planted tets dissolve and their residue is swept") {
        TriangleMesh mesh = make_icosphere(2);
        std::size_t base_faces = mesh.faces.size();
        for (int k = 0; k < 3; ++k) append_mesh(mesh, make_tet_shell(Vec3(2.0 + k, 0, 0)));

        ThinStats stats;
        TriangleMesh thinned = thin(mesh, field, 10, &stats);
        CHECK(detect_solid_tets(thinned).empty());
        CHECK(stats.tets_pruned == 3);
        CHECK_FALSE(stats.stalled);
        // each pruned tet leaves a 2-face flap, removed as a small component
        CHECK(thinned.faces.size() == base_faces);
    }

    SUBCASE("thin is idempotent") {
        std::mt19937_64 rng(41);
        TriangleMesh mesh = make_planted_mesh(30, 80, 2, rng);
        TriangleMesh once = thin(mesh, field, 10);
        TriangleMesh twice = thin(once, field, 10);
        CHECK(face_set(once) == face_set(twice));
        CHECK(once.vertices.size() == twice.vertices.size());
    }

    SUBCASE("an already-thin mesh passes through unchanged") {
        TriangleMesh mesh = make_icosphere(2);
        ThinStats stats;
        TriangleMesh thinned = thin(mesh, field, 10, &stats);
        CHECK(face_set(thinned) == face_set(mesh));
        CHECK(stats.tets_pruned == 0);
        CHECK(stats.faces_removed == 0);
    }

    SUBCASE("a winged tet is unlocked by flap removal") {
        // every tet edge carries an extra wing face, so its incidence is 3 and
        // pair pruning cannot start; the wings are flaps (one saturated edge,
        // two dangling) and their removal frees the tet
        TriangleMesh mesh = make_tet_shell(Vec3::Zero(), 1.0);
        int extra = 4;
        for (int a = 0; a < 4; ++a) {
            for (int b = a + 1; b < 4; ++b) {
                mesh.vertices.push_back(mesh.vertices[a] + Vec3(0, 0, 2.0 + extra));
                mesh.append_face(a, b, extra);
                ++extra;
            }
        }
        ThinStats stats;
        TriangleMesh thinned = thin(mesh, field, 10, &stats);
        CHECK_FALSE(stats.stalled);
        CHECK(stats.flaps_removed == 6);
        CHECK(detect_solid_tets(thinned).empty());
        CHECK(thinned.faces.empty());  // tet residue is a small component
    }
}
