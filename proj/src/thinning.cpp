#include "voroudf/thinning.hpp"

#include <algorithm>
#include <functional>
#include <cmath>
#include <unordered_map>
#include <unordered_set>

namespace voroudf {

namespace {

struct TripleHash {
    std::size_t operator()(const std::array<int, 3>& t) const {
        std::uint64_t h = 0xcbf29ce484222325ULL;
        for (int v : t) {
            h ^= static_cast<std::uint64_t>(v) + 0x9e3779b97f4a7c15ULL;
            h *= 0x100000001b3ULL;
        }
        return static_cast<std::size_t>(h);
    }
};

std::array<int, 3> sorted_face(const std::array<int, 3>& f) {
    std::array<int, 3> s = f;
    std::sort(s.begin(), s.end());
    return s;
}

// Best prunable pair of a tet: the manifold edge (whole-mesh incidence exactly
// 2) with the highest UDF at its midpoint; ties break on the summed UDF at the
// two incident face centroids.
struct PairChoice {
    bool found = false;
    int face_a = -1, face_b = -1;
    double edge_value = -std::numeric_limits<double>::infinity();
    double centroid_sum = -std::numeric_limits<double>::infinity();
};

PairChoice select_pair(const TriangleMesh& mesh, const SolidTet& tet, const UdfField& field,
                       const std::unordered_map<std::uint64_t, int>& incidence) {
    PairChoice best;
    for (int i = 0; i < 4; ++i) {
        for (int j = i + 1; j < 4; ++j) {
            // tet edge skipping vertices i and j is shared by faces[i] and faces[j]
            int a = -1, b = -1;
            for (int k = 0; k < 4; ++k) {
                if (k == i || k == j) continue;
                (a < 0 ? a : b) = tet.vertices[k];
            }
            auto it = incidence.find(edge_key(a, b));
            if (it == incidence.end() || it->second != 2) continue;
            Vec3 mid = 0.5 * (mesh.vertices[a] + mesh.vertices[b]);
            double value = field.eval(mid).value;
            double tie = 0.0;
            for (int f : {tet.faces[i], tet.faces[j]}) {
                const auto& face = mesh.faces[f];
                Vec3 centroid = (mesh.vertices[face[0]] + mesh.vertices[face[1]] +
                                 mesh.vertices[face[2]]) / 3.0;
                tie += field.eval(centroid).value;
            }
            if (!best.found || value > best.edge_value ||
                (value == best.edge_value && tie > best.centroid_sum)) {
                best.found = true;
                best.face_a = tet.faces[i];
                best.face_b = tet.faces[j];
                best.edge_value = value;
                best.centroid_sum = tie;
            }
        }
    }
    return best;
}

// Components joined through shared *edges*. Vertex-joined components (as in
// face_components) can never shrink below the removal threshold in stages;
// edge-joined ones can, e.g. a fan hanging off a larger body by one vertex.
std::pair<std::vector<int>, int> edge_components(const TriangleMesh& mesh) {
    const int nf = static_cast<int>(mesh.faces.size());
    std::vector<int> parent(nf);
    for (int f = 0; f < nf; ++f) parent[f] = f;
    std::function<int(int)> find = [&](int x) {
        while (parent[x] != x) x = parent[x] = parent[parent[x]];
        return x;
    };
    std::unordered_map<std::uint64_t, int> first_face_at_edge;
    for (int f = 0; f < nf; ++f) {
        const auto& t = mesh.faces[f];
        for (int e = 0; e < 3; ++e) {
            auto [it, inserted] = first_face_at_edge.try_emplace(
                edge_key(t[e], t[(e + 1) % 3]), f);
            if (!inserted) parent[find(f)] = find(it->second);
        }
    }
    std::vector<int> comp(nf, -1);
    std::unordered_map<int, int> root_to_id;
    int count = 0;
    for (int f = 0; f < nf; ++f) {
        auto [it, inserted] = root_to_id.try_emplace(find(f), count);
        if (inserted) ++count;
        comp[f] = it->second;
    }
    return {comp, count};
}

std::unordered_map<std::uint64_t, int> build_incidence(const TriangleMesh& mesh) {
    std::unordered_map<std::uint64_t, int> counts;
    for (const auto& f : mesh.faces) {
        ++counts[edge_key(f[0], f[1])];
        ++counts[edge_key(f[1], f[2])];
        ++counts[edge_key(f[0], f[2])];
    }
    return counts;
}

}  // namespace

std::vector<SolidTet> detect_solid_tets(const TriangleMesh& mesh) {
    std::unordered_map<std::array<int, 3>, int, TripleHash> face_of;
    face_of.reserve(mesh.faces.size());
    std::vector<std::unordered_set<int>> adjacent(mesh.vertices.size());
    for (int f = 0; f < static_cast<int>(mesh.faces.size()); ++f) {
        auto s = sorted_face(mesh.faces[f]);
        face_of.emplace(s, f);
        adjacent[s[0]].insert(s[1]);
        adjacent[s[0]].insert(s[2]);
        adjacent[s[1]].insert(s[0]);
        adjacent[s[1]].insert(s[2]);
        adjacent[s[2]].insert(s[0]);
        adjacent[s[2]].insert(s[1]);
    }

    std::vector<SolidTet> tets;
    for (int f = 0; f < static_cast<int>(mesh.faces.size()); ++f) {
        auto [a, b, c] = sorted_face(mesh.faces[f]);
        // a tet {a,b,c,d} with a<b<c<d is discovered once, from its abc face
        for (int d : adjacent[a]) {
            if (d <= c || !adjacent[b].count(d) || !adjacent[c].count(d)) continue;
            auto abd = face_of.find({a, b, d});
            auto acd = face_of.find({a, c, d});
            auto bcd = face_of.find({b, c, d});
            if (abd == face_of.end() || acd == face_of.end() || bcd == face_of.end()) continue;
            SolidTet tet;
            tet.vertices = {a, b, c, d};
            tet.faces = {bcd->second, acd->second, abd->second, f};
            tets.push_back(tet);
        }
    }
    std::sort(tets.begin(), tets.end(),
              [](const SolidTet& x, const SolidTet& y) { return x.vertices < y.vertices; });
    return tets;
}

TriangleMesh prune_tet(const TriangleMesh& mesh, const SolidTet& tet, const UdfField& field) {
    auto incidence = build_incidence(mesh);
    PairChoice pick = select_pair(mesh, tet, field, incidence);
    if (!pick.found) throw NoManifoldPair{};

    std::vector<bool> remove(mesh.faces.size(), false);
    remove[pick.face_a] = remove[pick.face_b] = true;
    TriangleMesh out = remove_faces(mesh, remove);
    if (face_components(out).second != face_components(mesh).second)
        throw VoroudfError("tet pruning changed the component count");
    return out;
}

TriangleMesh remove_small_components(const TriangleMesh& mesh, int max_faces) {
    TriangleMesh current = mesh;
    bool changed = true;
    while (changed && !current.faces.empty()) {
        changed = false;
        auto [component_of, count] = edge_components(current);
        std::vector<std::vector<int>> members(count);
        for (int f = 0; f < static_cast<int>(current.faces.size()); ++f)
            members[component_of[f]].push_back(f);
        std::vector<bool> remove(current.faces.size(), false);
        for (const auto& faces : members) {
            if (static_cast<int>(faces.size()) >= max_faces) continue;
            if (!is_manifold_patch(current, faces)) continue;
            for (int f : faces) remove[f] = true;
            changed = true;
        }
        if (changed) current = remove_faces(current, remove);
    }
    return current;
}

TriangleMesh thin(const TriangleMesh& mesh, const UdfField& field, int max_faces,
                  ThinStats* stats) {
    ThinStats local;
    ThinStats& st = stats ? *stats : local;
    st = ThinStats{};

    TriangleMesh current = mesh;
    bool cycle_changed = true;
    while (cycle_changed) {
        cycle_changed = false;
        while (true) {
            auto tets = detect_solid_tets(current);
            if (tets.empty()) break;
            ++st.passes;

            auto incidence = build_incidence(current);
            std::vector<bool> dead(current.faces.size(), false);

            // most off-surface volumes dissolve first
            std::vector<std::pair<double, int>> order;
            for (int t = 0; t < static_cast<int>(tets.size()); ++t) {
                PairChoice pick = select_pair(current, tets[t], field, incidence);
                order.emplace_back(pick.found ? pick.edge_value
                                              : -std::numeric_limits<double>::infinity(),
                                   t);
            }
            std::sort(order.begin(), order.end(), [](const auto& x, const auto& y) {
                return x.first > y.first || (x.first == y.first && x.second < y.second);
            });

            int pruned = 0;
            for (auto [key, t] : order) {
                const SolidTet& tet = tets[t];
                bool intact = true;
                for (int f : tet.faces) intact = intact && !dead[f];
                if (!intact) continue;
                // incidence shifts as faces go, so reselect before each removal
                PairChoice pick = select_pair(current, tet, field, incidence);
                if (!pick.found) continue;
                for (int f : {pick.face_a, pick.face_b}) {
                    dead[f] = true;
                    const auto& face = current.faces[f];
                    --incidence[edge_key(face[0], face[1])];
                    --incidence[edge_key(face[1], face[2])];
                    --incidence[edge_key(face[0], face[2])];
                }
                ++pruned;
            }
            if (pruned == 0) {
                // no manifold pair anywhere: interlocked tet cluster (k seeds at a
                // junction emit every triple and each tet edge is oversaturated).
                // Deleting the worst face shared by several tets breaks the
                // deadlock and lets pair pruning resume.
                std::unordered_map<int, int> live_tets_of_face;
                for (const auto& tet : tets)
                    for (int f : tet.faces) ++live_tets_of_face[f];
                int best = -1;
                double best_value = -std::numeric_limits<double>::infinity();
                int components = face_components(current).second;
                for (const auto& [f, uses] : live_tets_of_face) {
                    if (uses < 2) continue;
                    const auto& face = current.faces[f];
                    Vec3 centroid = (current.vertices[face[0]] + current.vertices[face[1]] +
                                     current.vertices[face[2]]) / 3.0;
                    double value = field.eval(centroid).value;
                    if (value <= best_value) continue;
                    std::vector<bool> remove(current.faces.size(), false);
                    remove[f] = true;
                    if (face_components(remove_faces(current, remove)).second != components)
                        continue;
                    best_value = value;
                    best = f;
                }
                if (best < 0) break;  // flap removal below may still unlock the cluster
                std::vector<bool> remove(current.faces.size(), false);
                remove[best] = true;
                current = remove_faces(current, remove);
                ++st.cluster_faces_removed;
                ++st.faces_removed;
                cycle_changed = true;
                continue;
            }
            st.tets_pruned += pruned;
            st.faces_removed += 2 * pruned;
            current = remove_faces(current, dead);
            cycle_changed = true;
        }

        // flap faces hang off the rest of the surface by an oversaturated edge
        // while another of their edges dangles (incidence 1). They come from
        // junction quads where only three of the four dual triples were witnessed,
        // and from sliver overlaps along open boundaries. Dropping them restores
        // manifoldness; genuine border faces keep manifold side edges and survive.
        while (true) {
            auto incidence = build_incidence(current);
            std::vector<bool> remove(current.faces.size(), false);
            int flaps = 0;
            for (int f = 0; f < static_cast<int>(current.faces.size()); ++f) {
                const auto& face = current.faces[f];
                int dangling = 0, saturated = 0;
                for (int e = 0; e < 3; ++e) {
                    int count = incidence[edge_key(face[e], face[(e + 1) % 3])];
                    if (count == 1) ++dangling;
                    if (count >= 3) ++saturated;
                }
                if (dangling >= 1 && saturated >= 1) {
                    remove[f] = true;
                    ++flaps;
                }
            }
            if (flaps == 0) break;
            current = remove_faces(current, remove);
            st.flaps_removed += flaps;
            st.faces_removed += flaps;
            cycle_changed = true;
        }
    }  // alternate tet pruning and flap removal until neither makes progress

    if (!detect_solid_tets(current).empty()) {
        st.stalled = true;
        st.warnings.push_back("thinning stalled with " +
                              std::to_string(detect_solid_tets(current).size()) +
                              " solid tets remaining (no manifold pair available)");
    }

    int before = static_cast<int>(current.faces.size());
    auto [component_of, count] = face_components(current);
    current = remove_small_components(current, max_faces);
    st.faces_removed += before - static_cast<int>(current.faces.size());
    st.small_components_removed = count - face_components(current).second;
    return current;
}

}  // namespace voroudf
