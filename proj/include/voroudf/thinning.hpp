#pragma once

#include "voroudf/field.hpp"
#include "voroudf/geometry.hpp"

#include <array>
#include <string>
#include <vector>

namespace voroudf {

// Solid tetrahedron embedded in the face set: 4 vertices whose 4 triangles are
// all present.
struct SolidTet {
    std::array<int, 4> vertices;  // ascending
    std::array<int, 4> faces;     // face ids; faces[i] omits vertices[i]
};

struct NoManifoldPair : VoroudfError {
    NoManifoldPair() : VoroudfError("tetrahedron has no face pair on a manifold edge") {}
};

// All solid tets, found by hashing faces and intersecting vertex
// neighborhoods (no brute force over vertex quadruples).
std::vector<SolidTet> detect_solid_tets(const TriangleMesh& mesh);

// Remove the tet face pair sharing a manifold edge (incidence exactly 2 in the
// whole mesh) whose shared-edge midpoint has the highest UDF value; ties break
// on the sum of UDF at the two face centroids. Component count is preserved.
TriangleMesh prune_tet(const TriangleMesh& mesh, const SolidTet& tet, const UdfField& field);

// Repeatedly delete connected components that are 2-manifold (with boundary)
// and have fewer than max_faces faces, until a fixpoint.
TriangleMesh remove_small_components(const TriangleMesh& mesh, int max_faces = 10);

struct ThinStats {
    int passes = 0;
    int tets_pruned = 0;
    int cluster_faces_removed = 0;  // stall fallback: single faces shared by >= 2 tets
    int flaps_removed = 0;          // faces with a dangling edge across a junction quad
    int small_components_removed = 0;
    int faces_removed = 0;
    bool stalled = false;  // a pass removed nothing while tets remain
    std::vector<std::string> warnings;
};

// Alternate tet detection and pair pruning until no solid tets remain, then
// drop small manifold components. Vertex positions are never modified.
TriangleMesh thin(const TriangleMesh& mesh, const UdfField& field, int max_faces = 10,
                  ThinStats* stats = nullptr);

}  // namespace voroudf
