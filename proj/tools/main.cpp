#include "voroudf/field.hpp"
#include "voroudf/mesh_io.hpp"
#include "voroudf/metrics.hpp"
#include "voroudf/pipeline.hpp"
#include "voroudf/presets.hpp"
#include "voroudf/thinning.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <algorithm>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <set>
#include <sstream>

namespace fs = std::filesystem;
using namespace voroudf;
using nlohmann::json;

namespace {

int log_level() {
    static int level = [] {
        const char* env = std::getenv("VOROUDF_LOG");
        return env && *env ? std::atoi(env) : 0;
    }();
    return level;
}

void log(int level, const std::string& msg) {
    if (log_level() >= level) std::cerr << "[voroudf] " << msg << "\n";
}

void write_text(const std::string& path, const std::string& text) {
    std::ofstream out(path);
    if (!out) throw VoroudfError(path + ": cannot open for writing");
    out << text;
}

// Input selection shared by reconstruct and info: exactly one of a mesh file,
// a grid file, or an analytic field (preset name or field-spec JSON path).
struct FieldInput {
    std::string mesh_path, grid_path, analytic;

    void add_flags(CLI::App* cmd) {
        cmd->add_option("--input", mesh_path, "triangle mesh input (.obj/.ply)");
        cmd->add_option("--grid", grid_path, "sampled UDF grid input");
        cmd->add_option("--analytic", analytic, "analytic field: preset name or field-spec JSON");
    }

    std::string name() const {
        if (!mesh_path.empty()) return mesh_path;
        if (!grid_path.empty()) return grid_path;
        return analytic;
    }

    std::unique_ptr<UdfField> open() const {
        int given = (!mesh_path.empty()) + (!grid_path.empty()) + (!analytic.empty());
        if (given != 1)
            throw VoroudfError("give exactly one of --input, --grid, --analytic");
        if (!mesh_path.empty()) return std::make_unique<MeshField>(read_mesh(mesh_path));
        if (!grid_path.empty()) return std::make_unique<GridField>(GridField::load(grid_path));
        auto names = preset_names();
        if (std::find(names.begin(), names.end(), analytic) != names.end()) {
            auto preset = make_preset(analytic);
            return std::make_unique<AnalyticField>(preset.field->children());
        }
        if (fs::exists(analytic))
            return std::make_unique<AnalyticField>(field_from_json_file(analytic)->children());
        std::string known;
        for (const auto& n : names) known += (known.empty() ? "" : ", ") + n;
        throw VoroudfError("unknown analytic field '" + analytic + "' (presets: " + known + ")");
    }
};

// Config assembly: defaults, then the config file, then explicit flags.
struct ConfigFlags {
    std::string config_path;
    int seeds = -1;
    double delta = -1;
    int threads = -1;
    long long rng_seed = -1;

    void add_flags(CLI::App* cmd) {
        cmd->add_option("--config", config_path, "JSON config (missing keys keep defaults)");
        cmd->add_option("--seeds", seeds, "seed count N");
        cmd->add_option("--delta", delta, "inner-loop termination threshold");
        cmd->add_option("--threads", threads, "worker threads (1 = bitwise deterministic)");
        cmd->add_option("--rng-seed", rng_seed, "master RNG seed");
    }

    ReconConfig resolve() const {
        ReconConfig cfg = config_path.empty() ? ReconConfig{}
                                              : ReconConfig::from_json_file(config_path);
        if (seeds >= 0) cfg.seed_count = seeds;
        if (delta >= 0) cfg.delta = delta;
        if (threads >= 0) cfg.threads = threads;
        if (rng_seed >= 0) cfg.rng_seed = static_cast<std::uint64_t>(rng_seed);
        cfg.validate();
        return cfg;
    }
};

std::string manifest_path_for(const std::string& out) {
    return out + ".manifest.json";
}

int cmd_reconstruct(const FieldInput& input, const ConfigFlags& flags, const std::string& out) {
    ReconConfig cfg = flags.resolve();
    auto field = input.open();
    log(1, "reconstructing '" + input.name() + "' with N=" + std::to_string(cfg.seed_count));
    ReconResult result = reconstruct(*field, cfg, input.name());
    write_mesh(result.mesh, out);
    write_text(manifest_path_for(out), result.manifest.to_json());
    for (const auto& rec : result.manifest.timings)
        log(1, rec.name + ": " + std::to_string(rec.seconds) + "s");
    for (const auto& w : result.manifest.warnings) std::cerr << "warning: " << w << "\n";
    log(1, "wrote " + out + " (" + std::to_string(result.mesh.vertices.size()) + " vertices, " +
               std::to_string(result.mesh.faces.size()) + " faces)");
    return result.manifest.warnings.empty() ? 0 : 2;
}

const std::set<std::string> kMetricKeys = {"cd", "hd", "ecd", "tq", "td", "nm_cd"};

std::set<std::string> parse_metric_subset(const std::string& metrics) {
    std::set<std::string> keep;
    std::stringstream ss(metrics);
    std::string item;
    while (std::getline(ss, item, ',')) {
        if (item.empty()) continue;
        if (!kMetricKeys.count(item)) throw VoroudfError("unknown metric '" + item + "'");
        keep.insert(item);
    }
    if (keep.empty()) throw VoroudfError("--metrics selected nothing");
    return keep;
}

json report_to_json(const MetricsReport& rep, const std::set<std::string>& keep) {
    json j = json::parse(rep.to_json());
    if (!keep.empty()) {
        // report keys carry the scale suffix; match on the metric stem
        json filtered = json::object();
        for (const auto& [key, value] : j.items()) {
            std::string stem = key.substr(0, key.find("_x1e"));
            if (stem == "hd_pct_diag") stem = "hd";
            if (keep.count(stem)) filtered[key] = value;
        }
        j = filtered;
    }
    return j;
}

int cmd_eval(const std::string& path_a, const std::string& path_b, const std::string& metrics,
             const std::string& out, bool json_out, long long rng_seed) {
    std::set<std::string> keep;
    if (!metrics.empty()) keep = parse_metric_subset(metrics);
    MetricsConfig mcfg;
    if (rng_seed >= 0) mcfg.rng_seed = static_cast<std::uint64_t>(rng_seed);

    if (fs::is_directory(path_a) != fs::is_directory(path_b))
        throw VoroudfError("eval needs two files or two directories");

    if (fs::is_directory(path_a)) {
        // batch mode: pair files in the two directories by file name
        std::map<std::string, fs::path> left, right;
        for (const auto& e : fs::directory_iterator(path_a))
            if (e.is_regular_file()) left[e.path().filename().string()] = e.path();
        for (const auto& e : fs::directory_iterator(path_b))
            if (e.is_regular_file()) right[e.path().filename().string()] = e.path();
        std::ostringstream csv;
        csv << MetricsReport::csv_header() << "\n";
        int rows = 0;
        for (const auto& [name, lp] : left) {
            auto it = right.find(name);
            if (it == right.end()) continue;
            log(1, "evaluating " + name);
            MetricsReport rep = evaluate(read_mesh(lp.string()), read_mesh(it->second.string()),
                                         mcfg);
            csv << rep.to_csv_row(name) << "\n";
            ++rows;
        }
        if (rows == 0) throw VoroudfError("no file names shared between the two directories");
        if (out.empty())
            std::cout << csv.str();
        else
            write_text(out, csv.str());
        log(1, std::to_string(rows) + " pairs evaluated");
        return 0;
    }

    MetricsReport rep = evaluate(read_mesh(path_a), read_mesh(path_b), mcfg);
    json j = report_to_json(rep, keep);
    std::string text = json_out ? j.dump(2) : j.dump();
    std::cout << text << "\n";
    if (!out.empty()) write_text(out, j.dump(2));
    return 0;
}

int cmd_synth(const std::string& preset_name, const std::string& out_dir, bool list) {
    if (list) {
        for (const auto& name : preset_names()) {
            auto p = make_preset(name);
            std::cout << name << ": " << p.description << "\n";
        }
        return 0;
    }
    if (preset_name.empty()) throw VoroudfError("give --preset or --list");
    Preset preset = make_preset(preset_name);
    fs::create_directories(out_dir.empty() ? "." : out_dir);
    fs::path base = fs::path(out_dir.empty() ? "." : out_dir) / preset.name;
    write_text(base.string() + ".json", field_to_json(*preset.field));
    std::string locus_path = base.string() + "_locus.ply";
    write_points_ply(preset.nonmanifold_locus, locus_path);
    std::cout << "wrote " << base.string() << ".json ("
              << preset.field->children().size() << " primitives), " << locus_path << " ("
              << preset.nonmanifold_locus.size() << " locus points)\n";
    return 0;
}

int cmd_info(const FieldInput& input, bool json_out) {
    if (input.name().empty()) {
        json j;
        j["presets"] = preset_names();
        j["default_config"] = json::parse(ReconConfig{}.to_json());
        std::cout << (json_out ? j.dump(2) : j.dump()) << "\n";
        return 0;
    }
    if (!input.mesh_path.empty()) {
        TriangleMesh mesh = read_mesh(input.mesh_path);
        auto [ids, components] = face_components(mesh);
        NonManifoldLocus locus = non_manifold_locus(mesh);
        json j;
        j["path"] = input.mesh_path;
        j["vertices"] = mesh.vertices.size();
        j["faces"] = mesh.faces.size();
        j["euler_characteristic"] = euler_characteristic(mesh);
        j["components"] = components;
        j["solid_tets"] = detect_solid_tets(mesh).size();
        j["non_manifold_edges"] = locus.edges.size();
        j["non_manifold_vertices"] = locus.vertices.size();
        j["mean_triangle_quality"] = mesh.empty() ? 0.0 : triangle_quality(mesh);
        BBox box = bounding_box(mesh);
        j["bbox_lo"] = {box.lo.x(), box.lo.y(), box.lo.z()};
        j["bbox_hi"] = {box.hi.x(), box.hi.y(), box.hi.z()};
        std::cout << (json_out ? j.dump(2) : j.dump()) << "\n";
        return 0;
    }
    auto field = input.open();
    json j;
    j["input"] = input.name();
    BBox box = field->domain();
    j["domain_lo"] = {box.lo.x(), box.lo.y(), box.lo.z()};
    j["domain_hi"] = {box.hi.x(), box.hi.y(), box.hi.z()};
    if (const auto* grid = dynamic_cast<const GridField*>(field.get())) {
        j["grid_dims"] = {grid->dims()[0], grid->dims()[1], grid->dims()[2]};
        j["grid_spacing"] = grid->spacing();
    }
    std::cout << (json_out ? j.dump(2) : j.dump()) << "\n";
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Voronoi-based surface reconstruction from unsigned distance fields"};
    app.require_subcommand(1);

    auto* rec = app.add_subcommand("reconstruct", "reconstruct a mesh from a UDF");
    FieldInput rec_input;
    ConfigFlags rec_flags;
    std::string rec_out;
    rec_input.add_flags(rec);
    rec_flags.add_flags(rec);
    rec->add_option("--out", rec_out, "output mesh path (.obj/.ply)")->required();

    auto* ev = app.add_subcommand("eval", "compare a reconstruction against a reference");
    std::string ev_a, ev_b, ev_metrics, ev_out;
    bool ev_json = false;
    long long ev_seed = -1;
    ev->add_option("reconstructed", ev_a, "mesh file or directory")->required();
    ev->add_option("reference", ev_b, "mesh file or directory")->required();
    ev->add_option("--metrics", ev_metrics, "comma list of cd,hd,ecd,tq,td,nm_cd");
    ev->add_option("--out", ev_out, "write report (.json) or batch table (.csv)");
    ev->add_flag("--json", ev_json, "pretty-print the JSON report");
    ev->add_option("--rng-seed", ev_seed, "metric sampling seed");

    auto* sy = app.add_subcommand("synth", "emit an analytic test field and its ground truth");
    std::string sy_preset, sy_out;
    bool sy_list = false;
    sy->add_option("--preset", sy_preset, "preset name");
    sy->add_option("--out", sy_out, "output directory (default: current)");
    sy->add_flag("--list", sy_list, "list available presets");

    auto* in = app.add_subcommand("info", "dump diagnostics for a mesh, grid, or field");
    FieldInput in_input;
    bool in_json = false;
    in_input.add_flags(in);
    in->add_flag("--json", in_json, "pretty-print");

    CLI11_PARSE(app, argc, argv);
    try {
        if (rec->parsed()) return cmd_reconstruct(rec_input, rec_flags, rec_out);
        if (ev->parsed()) return cmd_eval(ev_a, ev_b, ev_metrics, ev_out, ev_json, ev_seed);
        if (sy->parsed()) return cmd_synth(sy_preset, sy_out, sy_list);
        if (in->parsed()) return cmd_info(in_input, in_json);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 1;
}
