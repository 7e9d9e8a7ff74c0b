#include "voroudf/geometry.hpp"

#include <algorithm>
#include <numeric>
#include <unordered_set>

namespace voroudf {

std::unordered_map<std::uint64_t, std::vector<int>> edge_incidence(const TriangleMesh& mesh) {
    std::unordered_map<std::uint64_t, std::vector<int>> inc;
    inc.reserve(mesh.faces.size() * 2);
    for (int f = 0; f < static_cast<int>(mesh.faces.size()); ++f) {
        const auto& t = mesh.faces[f];
        inc[edge_key(t[0], t[1])].push_back(f);
        inc[edge_key(t[1], t[2])].push_back(f);
        inc[edge_key(t[2], t[0])].push_back(f);
    }
    return inc;
}

namespace {

struct UnionFind {
    std::vector<int> parent;
    explicit UnionFind(int n) : parent(n) { std::iota(parent.begin(), parent.end(), 0); }
    int find(int a) {
        while (parent[a] != a) a = parent[a] = parent[parent[a]];
        return a;
    }
    void unite(int a, int b) {
        a = find(a);
        b = find(b);
        if (a != b) parent[b] = a;
    }
};

}  // namespace

std::pair<std::vector<int>, int> face_components(const TriangleMesh& mesh) {
    const int nf = static_cast<int>(mesh.faces.size());
    UnionFind uf(nf);
    // Faces sharing any vertex belong to the same component.
    std::unordered_map<int, int> first_face_at_vertex;
    first_face_at_vertex.reserve(mesh.vertices.size());
    for (int f = 0; f < nf; ++f) {
        for (int v : mesh.faces[f]) {
            auto [it, inserted] = first_face_at_vertex.try_emplace(v, f);
            if (!inserted) uf.unite(it->second, f);
        }
    }
    std::vector<int> comp(nf, -1);
    std::unordered_map<int, int> root_to_id;
    int count = 0;
    for (int f = 0; f < nf; ++f) {
        int r = uf.find(f);
        auto [it, inserted] = root_to_id.try_emplace(r, count);
        if (inserted) ++count;
        comp[f] = it->second;
    }
    return {comp, count};
}

bool is_manifold_patch(const TriangleMesh& mesh, const std::vector<int>& face_ids) {
    std::unordered_map<std::uint64_t, int> edge_count;
    std::unordered_map<int, std::vector<int>> vertex_faces;
    for (int f : face_ids) {
        const auto& t = mesh.faces[f];
        for (int e = 0; e < 3; ++e) {
            if (++edge_count[edge_key(t[e], t[(e + 1) % 3])] > 2) return false;
        }
        for (int v : t) vertex_faces[v].push_back(f);
    }
    // Each vertex link must be a single fan (disk or half-disk): the incident
    // faces form one chain/cycle when connected through the vertex's edges,
    // and the number of boundary edges at the vertex is 0 or 2.
    for (const auto& [v, inc_faces] : vertex_faces) {
        std::unordered_map<std::uint64_t, std::vector<int>> local;  // v-edge -> local face ids
        for (int li = 0; li < static_cast<int>(inc_faces.size()); ++li) {
            const auto& t = mesh.faces[inc_faces[li]];
            for (int u : t)
                if (u != v) local[edge_key(v, u)].push_back(li);
        }
        int boundary = 0;
        for (const auto& [k, fs] : local)
            if (fs.size() == 1) ++boundary;
        if (boundary != 0 && boundary != 2) return false;
        // connectivity of the fan
        UnionFind uf(static_cast<int>(inc_faces.size()));
        for (const auto& [k, fs] : local)
            for (std::size_t i = 1; i < fs.size(); ++i) uf.unite(fs[0], fs[i]);
        int root = uf.find(0);
        for (int li = 1; li < static_cast<int>(inc_faces.size()); ++li)
            if (uf.find(li) != root) return false;
    }
    return true;
}

TriangleMesh remove_faces(const TriangleMesh& mesh, const std::vector<bool>& remove) {
    TriangleMesh out;
    std::vector<int> remap(mesh.vertices.size(), -1);
    for (std::size_t f = 0; f < mesh.faces.size(); ++f) {
        if (remove[f]) continue;
        std::array<int, 3> tri;
        for (int e = 0; e < 3; ++e) {
            int v = mesh.faces[f][e];
            if (remap[v] < 0) {
                remap[v] = static_cast<int>(out.vertices.size());
                out.vertices.push_back(mesh.vertices[v]);
            }
            tri[e] = remap[v];
        }
        out.faces.push_back(tri);
    }
    return out;
}

long euler_characteristic(const TriangleMesh& mesh) {
    std::unordered_set<int> verts;
    std::unordered_set<std::uint64_t> edges;
    for (const auto& t : mesh.faces) {
        for (int v : t) verts.insert(v);
        edges.insert(edge_key(t[0], t[1]));
        edges.insert(edge_key(t[1], t[2]));
        edges.insert(edge_key(t[2], t[0]));
    }
    return static_cast<long>(verts.size()) - static_cast<long>(edges.size()) +
           static_cast<long>(mesh.faces.size());
}

BBox bounding_box(const TriangleMesh& mesh) {
    BBox box;
    for (const auto& v : mesh.vertices) box.expand(v);
    return box;
}

BBox bounding_box(const std::vector<Vec3>& points) {
    BBox box;
    for (const auto& p : points) box.expand(p);
    return box;
}

std::pair<TriangleMesh, UnitCubeTransform> normalize_to_unit_cube(const TriangleMesh& mesh) {
    if (mesh.vertices.empty()) throw EmptyMeshError{};
    BBox box = bounding_box(mesh);
    double max_extent = box.extent().maxCoeff();
    UnitCubeTransform xf;
    xf.scale = max_extent > 0 ? 1.0 / max_extent : 1.0;
    xf.offset = -box.center() * xf.scale;
    TriangleMesh out = mesh;
    for (auto& v : out.vertices) v = v * xf.scale + xf.offset;
    return {out, xf};
}

double triangle_area(const Vec3& a, const Vec3& b, const Vec3& c) {
    return 0.5 * (b - a).cross(c - a).norm();
}

}  // namespace voroudf
