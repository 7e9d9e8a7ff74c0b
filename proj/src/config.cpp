#include "voroudf/config.hpp"

#include "voroudf/geometry.hpp"

#include <fstream>
#include <json.hpp>

namespace voroudf {

using nlohmann::json;

namespace {

json to_json_obj(const ReconConfig& c) {
    return json{{"seed_count", c.seed_count},
                {"samples_per_cell", c.samples_per_cell},
                {"gamma", c.gamma},
                {"delta", c.delta},
                {"knn", c.knn},
                {"dense_sample_count", c.dense_sample_count},
                {"eps_udf", c.eps_udf},
                {"eps_grad", c.eps_grad},
                {"max_outer_iters", c.max_outer_iters},
                {"max_lbfgs_iters", c.max_lbfgs_iters},
                {"rank_threshold", c.rank_threshold},
                {"rng_seed", c.rng_seed},
                {"halfspace_neighbor_count", c.halfspace_neighbor_count},
                {"projection_tol", c.projection_tol},
                {"projection_max_steps", c.projection_max_steps},
                {"thin_max_component_faces", c.thin_max_component_faces},
                {"min_triple_witness", c.min_triple_witness},
                {"threads", c.threads}};
}

}  // namespace

void ReconConfig::validate() const {
    auto require = [](bool ok, const char* what) {
        if (!ok) throw VoroudfError(std::string("invalid config: ") + what);
    };
    require(seed_count >= 4, "seed_count must be >= 4");
    require(samples_per_cell >= 1, "samples_per_cell must be >= 1");
    require(gamma > 0, "gamma must be > 0");
    require(delta > 0, "delta must be > 0");
    require(knn >= 3, "knn must be >= 3");
    require(eps_grad > 0 && eps_grad <= 1, "eps_grad must be in (0,1]");
    require(max_outer_iters >= 1, "max_outer_iters must be >= 1");
    require(max_lbfgs_iters >= 1, "max_lbfgs_iters must be >= 1");
    require(rank_threshold > 0 && rank_threshold < 1, "rank_threshold must be in (0,1)");
    require(halfspace_neighbor_count >= 1, "halfspace_neighbor_count must be >= 1");
    require(projection_tol > 0, "projection_tol must be > 0");
    require(projection_max_steps >= 1, "projection_max_steps must be >= 1");
    require(thin_max_component_faces >= 1, "thin_max_component_faces must be >= 1");
    require(min_triple_witness >= 1, "min_triple_witness must be >= 1");
    require(threads >= 1, "threads must be >= 1");
}

std::string ReconConfig::to_json() const { return to_json_obj(*this).dump(2); }

ReconConfig ReconConfig::from_json(const std::string& text) {
    json j = json::parse(text);
    ReconConfig c;  // defaults
    json defaults = to_json_obj(c);
    for (const auto& [key, value] : j.items()) {
        if (!defaults.contains(key))
            throw VoroudfError("unknown config key '" + key + "'");
        defaults[key] = value;
    }
    c.seed_count = defaults["seed_count"];
    c.samples_per_cell = defaults["samples_per_cell"];
    c.gamma = defaults["gamma"];
    c.delta = defaults["delta"];
    c.knn = defaults["knn"];
    c.dense_sample_count = defaults["dense_sample_count"];
    c.eps_udf = defaults["eps_udf"];
    c.eps_grad = defaults["eps_grad"];
    c.max_outer_iters = defaults["max_outer_iters"];
    c.max_lbfgs_iters = defaults["max_lbfgs_iters"];
    c.rank_threshold = defaults["rank_threshold"];
    c.rng_seed = defaults["rng_seed"];
    c.halfspace_neighbor_count = defaults["halfspace_neighbor_count"];
    c.projection_tol = defaults["projection_tol"];
    c.projection_max_steps = defaults["projection_max_steps"];
    c.thin_max_component_faces = defaults["thin_max_component_faces"];
    c.min_triple_witness = defaults["min_triple_witness"];
    c.threads = defaults["threads"];
    c.validate();
    return c;
}

ReconConfig ReconConfig::from_json_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw VoroudfError(path + ": cannot open config file");
    std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    return from_json(text);
}

}  // namespace voroudf
