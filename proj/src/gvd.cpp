#include "voroudf/gvd.hpp"

#include "voroudf/bvh.hpp"
#include "voroudf/parallel.hpp"

#include <algorithm>
#include <map>
#include <queue>
#include <set>
#include <tuple>

namespace voroudf {

namespace {

constexpr std::uint64_t kPhaseSurface = 5;

bool projection_ok(const ProjectionResult& res, double tol) {
    return res.converged || res.residual <= std::max(tol, kDegenerateEps);
}

}  // namespace

std::vector<UdfSample> sample_surface(const UdfField& field, int count,
                                      const ReconConfig& config) {
    const BBox box = field.domain();
    std::vector<UdfSample> samples(count);
    std::vector<char> failed(count, 0);
    parallel_for(count, config.threads, [&](int i) {
        std::uniform_real_distribution<double> uni(0.0, 1.0);
        bool placed = false;
        for (std::uint64_t attempt = 0; attempt < 50 && !placed; ++attempt) {
            Rng rng(derive_seed(config.rng_seed, kPhaseSurface, attempt, i));
            Vec3 p;
            for (int a = 0; a < 3; ++a) p[a] = box.lo[a] + uni(rng) * (box.hi[a] - box.lo[a]);
            auto res = project_to_surface(field, p, config.projection_max_steps,
                                          config.projection_tol);
            if (!projection_ok(res, config.projection_tol) || !res.normal_valid) continue;
            UdfSample s;
            s.point = res.point;
            s.value = res.residual;
            s.gradient = res.normal.normalized();
            s.gradient_valid = true;
            samples[i] = s;
            placed = true;
        }
        failed[i] = placed ? 0 : 1;
    });
    int failures = 0;
    for (char f : failed) failures += f;
    if (failures * 20 > count) throw ProjectionFailure{};
    if (failures > 0) {
        // drop the stragglers; density is what matters here
        std::vector<UdfSample> kept;
        kept.reserve(count - failures);
        for (int i = 0; i < count; ++i)
            if (!failed[i]) kept.push_back(samples[i]);
        samples = std::move(kept);
    }
    return samples;
}

SurfaceGraph build_and_prune_graph(const std::vector<UdfSample>& samples,
                                   const std::vector<SeedState>& seeds, const UdfField& field,
                                   int k, double eps_udf, double eps_grad, int threads) {
    if (k < 3) throw VoroudfError("knn graph needs k >= 3");
    const int n = static_cast<int>(samples.size());
    SurfaceGraph graph;
    graph.nodes = samples;
    graph.eps_grad = eps_grad;

    std::vector<Vec3> points(n);
    for (int i = 0; i < n; ++i) points[i] = samples[i].point;
    PointGrid grid(points);

    // median nearest-neighbor spacing drives the default gap threshold
    std::vector<double> nn_dist(n, 0.0);
    parallel_for(n, threads, [&](int i) {
        auto nn = grid.knn(points[i], 1, i);
        if (!nn.empty()) nn_dist[i] = (points[nn[0]] - points[i]).norm();
    });
    {
        std::vector<double> sorted = nn_dist;
        std::sort(sorted.begin(), sorted.end());
        graph.median_spacing = n ? sorted[n / 2] : 0.0;
    }
    graph.eps_udf = eps_udf > 0.0 ? eps_udf : 1.5 * graph.median_spacing;

    auto edge_ok = [&](const Vec3& a, const Vec3& b, const Vec3* na, const Vec3* nb) {
        Vec3 dir = b - a;
        double len = dir.norm();
        if (len <= 0.0) return false;
        dir /= len;
        if (field.eval(0.5 * (a + b)).value > graph.eps_udf) return false;
        if (na && std::abs(na->dot(dir)) > eps_grad) return false;
        if (nb && std::abs(nb->dot(dir)) > eps_grad) return false;
        return true;
    };

    // symmetric KNN edges, both pruning tests on every edge
    std::vector<std::vector<int>> half(n);
    std::vector<int> rejected(n, 0);
    parallel_for(n, threads, [&](int i) {
        for (int j : grid.knn(points[i], k, i)) {
            if (edge_ok(points[i], points[j], &samples[i].gradient, &samples[j].gradient))
                half[i].push_back(j);
            else
                ++rejected[i];
        }
    });
    for (int r : rejected) graph.edges_pruned += r;
    graph.edges.assign(n, {});
    for (int i = 0; i < n; ++i) {
        for (int j : half[i]) {
            graph.edges[i].push_back(j);
            graph.edges[j].push_back(i);
        }
    }
    for (auto& adj : graph.edges) {
        std::sort(adj.begin(), adj.end());
        adj.erase(std::unique(adj.begin(), adj.end()), adj.end());
    }

    // seeds attach as extra sources through the same tests (the seed sits on
    // the surface, so only the sample-side normal test applies)
    graph.source_links.assign(seeds.size(), {});
    parallel_for(static_cast<int>(seeds.size()), threads, [&](int s) {
        for (int j : grid.knn(seeds[s].position, k, -1)) {
            if (edge_ok(seeds[s].position, points[j], nullptr, &samples[j].gradient))
                graph.source_links[s].push_back(j);
        }
    });
    for (std::size_t s = 0; s < seeds.size(); ++s)
        if (graph.source_links[s].empty())
            graph.disconnected_seeds.push_back(static_cast<int>(s));

    graph.labels.assign(n, -1);
    graph.dist.assign(n, std::numeric_limits<double>::infinity());
    return graph;
}

void label_multisource(SurfaceGraph& graph, const std::vector<SeedState>& seeds) {
    const int n = static_cast<int>(graph.nodes.size());
    graph.labels.assign(n, -1);
    graph.dist.assign(n, std::numeric_limits<double>::infinity());
    graph.unreachable_nodes.clear();

    bool any_source = false;
    for (const auto& links : graph.source_links)
        if (!links.empty()) any_source = true;
    if (!any_source) throw VoroudfError("no seed is attached to the surface graph");

    // (distance, label, node); the label in the key makes equidistant floods
    // resolve toward the smaller seed id
    using Entry = std::tuple<double, int, int>;
    std::priority_queue<Entry, std::vector<Entry>, std::greater<Entry>> queue;
    for (std::size_t s = 0; s < graph.source_links.size(); ++s) {
        for (int node : graph.source_links[s]) {
            double d = (seeds[s].position - graph.nodes[node].point).norm();
            queue.emplace(d, static_cast<int>(s), node);
        }
    }
    while (!queue.empty()) {
        auto [d, label, node] = queue.top();
        queue.pop();
        if (d > graph.dist[node] ||
            (d == graph.dist[node] && graph.labels[node] != -1 && label >= graph.labels[node]))
            continue;
        graph.dist[node] = d;
        graph.labels[node] = label;
        for (int next : graph.edges[node]) {
            double nd = d + (graph.nodes[next].point - graph.nodes[node].point).norm();
            if (nd < graph.dist[next] || (nd == graph.dist[next] && label < graph.labels[next]))
                queue.emplace(nd, label, next);
        }
    }
    for (int i = 0; i < n; ++i)
        if (graph.labels[i] < 0) graph.unreachable_nodes.push_back(i);
}

DualMesh extract_dual_triangles(const SurfaceGraph& graph, const std::vector<SeedState>& seeds,
                                int min_witness) {
    const int n = static_cast<int>(graph.nodes.size());
    // triple -> number of nodes whose neighborhoods contain all three labels.
    // Triples seen by a single node are usually labeling noise (slivers along
    // open boundaries), so the caller can demand more witnesses.
    std::map<std::array<int, 3>, int> witness;
    std::vector<int> distinct;
    for (int u = 0; u < n; ++u) {
        int i = graph.labels[u];
        if (i < 0) continue;
        distinct.clear();
        for (int v : graph.edges[u]) {
            int l = graph.labels[v];
            if (l >= 0 && l != i) distinct.push_back(l);
        }
        std::sort(distinct.begin(), distinct.end());
        distinct.erase(std::unique(distinct.begin(), distinct.end()), distinct.end());
        for (std::size_t a = 0; a < distinct.size(); ++a) {
            for (std::size_t b = a + 1; b < distinct.size(); ++b) {
                std::array<int, 3> t = {i, distinct[a], distinct[b]};
                std::sort(t.begin(), t.end());
                ++witness[t];
            }
        }
    }
    std::set<std::array<int, 3>> triples;
    for (const auto& [t, count] : witness)
        if (count >= min_witness) triples.insert(t);
    if (triples.empty()) throw EmptyMeshError{};

    DualMesh out;
    std::vector<int> remap(seeds.size(), -1);
    for (const auto& t : triples) {
        for (int s : t) {
            if (remap[s] < 0) {
                remap[s] = static_cast<int>(out.mesh.vertices.size());
                out.mesh.vertices.push_back(seeds[s].position);
                out.seed_of_vertex.push_back(s);
            }
        }
        out.mesh.faces.push_back({remap[t[0]], remap[t[1]], remap[t[2]]});
    }
    return out;
}

}  // namespace voroudf
