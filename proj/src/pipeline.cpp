#include "voroudf/pipeline.hpp"

#include "voroudf/gvd.hpp"
#include "voroudf/seed_opt.hpp"
#include "voroudf/thinning.hpp"

#include <chrono>
#include <json.hpp>

namespace voroudf {

namespace {

class StageTimer {
public:
    explicit StageTimer(RunManifest& manifest) : manifest_(manifest) {}
    template <typename F>
    auto run(const std::string& name, F&& body) {
        auto start = std::chrono::steady_clock::now();
        if constexpr (std::is_void_v<decltype(body())>) {
            body();
            record(name, start);
        } else {
            auto result = body();
            record(name, start);
            return result;
        }
    }

private:
    void record(const std::string& name, std::chrono::steady_clock::time_point start) {
        double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start)
                             .count();
        manifest_.timings.push_back({name, seconds});
    }
    RunManifest& manifest_;
};

}  // namespace

std::string RunManifest::to_json(bool with_timings) const {
    nlohmann::json j;
    j["input"] = input;
    j["config"] = nlohmann::json::parse(config.to_json());
    j["counters"] = {{"seeds", seeds},
                     {"dense_samples", dense_samples},
                     {"graph_edges", graph_edges},
                     {"edges_pruned", edges_pruned},
                     {"disconnected_seeds", disconnected_seeds},
                     {"unreachable_nodes", unreachable_nodes},
                     {"dual_triangles", dual_triangles},
                     {"outer_iterations", outer_iterations},
                     {"total_inner_iterations", total_inner_iterations},
                     {"outer_cap_reached", outer_cap_reached},
                     {"tangent_stalls", tangent_stalls},
                     {"tets_pruned", tets_pruned},
                     {"thin_faces_removed", thin_faces_removed},
                     {"output_vertices", output_vertices},
                     {"output_faces", output_faces}};
    j["warnings"] = warnings;
    if (with_timings) {
        nlohmann::json t = nlohmann::json::array();
        for (const auto& s : timings) t.push_back({{"stage", s.name}, {"seconds", s.seconds}});
        j["timings"] = t;
    }
    return j.dump(2);
}

ReconResult reconstruct(const UdfField& field, const ReconConfig& config,
                        const std::string& input_name) {
    config.validate();
    ReconResult result;
    RunManifest& manifest = result.manifest;
    manifest.config = config;
    manifest.input = input_name;
    StageTimer timer(manifest);

    // sampled grids cannot reach the analytic projection tolerance; the
    // trilinear interpolant of an unsigned field bottoms out at about half a
    // cell over surface-crossing cells, so accept anything within one voxel
    ReconConfig effective = config;
    if (const auto* grid = dynamic_cast<const GridField*>(&field))
        effective.projection_tol = std::max(config.projection_tol, grid->spacing());

    OptimizeStats opt_stats;
    auto seeds = timer.run("seed_optimization",
                           [&] { return optimize(field, effective, &opt_stats); });
    manifest.seeds = static_cast<int>(seeds.size());
    manifest.outer_iterations = opt_stats.outer_iterations;
    manifest.total_inner_iterations = opt_stats.total_inner_iterations;
    // hitting the outer cap and the occasional reverted tangent solve are
    // routine; they land in the counters, not in the warning list
    manifest.outer_cap_reached = opt_stats.max_iterations_reached;
    int degenerate = 0;
    for (const auto& s : seeds) {
        degenerate += s.degenerate_flagged ? 1 : 0;
        manifest.tangent_stalls += s.solver_stalled ? 1 : 0;
    }
    if (degenerate > 0)
        manifest.warnings.push_back(std::to_string(degenerate) +
                                    " seeds flagged degenerate during projection");

    auto samples = timer.run("surface_sampling", [&] {
        return sample_surface(field, effective.effective_dense_samples(), effective);
    });
    manifest.dense_samples = static_cast<int>(samples.size());

    auto graph = timer.run("graph_construction", [&] {
        return build_and_prune_graph(samples, seeds, field, effective.knn, effective.eps_udf,
                                     effective.eps_grad, effective.threads);
    });
    long degree_sum = 0;
    for (const auto& adj : graph.edges) degree_sum += static_cast<long>(adj.size());
    manifest.graph_edges = degree_sum / 2;
    manifest.edges_pruned = graph.edges_pruned;
    manifest.disconnected_seeds = static_cast<int>(graph.disconnected_seeds.size());
    if (!graph.disconnected_seeds.empty())
        manifest.warnings.push_back(std::to_string(graph.disconnected_seeds.size()) +
                                    " seeds have no surviving graph attachment");

    timer.run("labeling", [&] { label_multisource(graph, seeds); });
    manifest.unreachable_nodes = static_cast<int>(graph.unreachable_nodes.size());
    if (!graph.unreachable_nodes.empty())
        manifest.warnings.push_back(std::to_string(graph.unreachable_nodes.size()) +
                                    " surface samples unreachable from any seed");

    auto dual = timer.run("dual_extraction", [&] {
        return extract_dual_triangles(graph, seeds, effective.min_triple_witness);
    });
    manifest.dual_triangles = static_cast<int>(dual.mesh.faces.size());

    ThinStats thin_stats;
    result.mesh = timer.run("thinning", [&] {
        return thin(dual.mesh, field, effective.thin_max_component_faces, &thin_stats);
    });
    manifest.tets_pruned = thin_stats.tets_pruned;
    manifest.thin_faces_removed = thin_stats.faces_removed;
    for (const auto& w : thin_stats.warnings) manifest.warnings.push_back(w);

    manifest.output_vertices = static_cast<int>(result.mesh.vertices.size());
    manifest.output_faces = static_cast<int>(result.mesh.faces.size());
    return result;
}

}  // namespace voroudf
