#pragma once

#include "voroudf/field.hpp"

#include <string>
#include <vector>

namespace voroudf {

struct Preset {
    std::string name;
    std::string description;
    std::shared_ptr<AnalyticField> field;
    std::vector<Vec3> nonmanifold_locus;  // empty for manifold/open presets
};

// Named analytic test fields: sphere, cube, disk (open boundary),
// two-disks, three-disks, sphere-plane, thin-plate.
Preset make_preset(const std::string& name);
std::vector<std::string> preset_names();

// JSON field spec <-> analytic field (primitive list).
std::string field_to_json(const AnalyticField& field);
std::shared_ptr<AnalyticField> field_from_json(const std::string& text);
std::shared_ptr<AnalyticField> field_from_json_file(const std::string& path);

}  // namespace voroudf
