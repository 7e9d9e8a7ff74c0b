#include "voroudf/presets.hpp"

#include <cmath>
#include <fstream>
#include <json.hpp>
#include <numbers>

namespace voroudf {

using nlohmann::json;

namespace {

std::vector<Vec3> segment_samples(const Vec3& a, const Vec3& b, int n) {
    std::vector<Vec3> out;
    out.reserve(n);
    for (int i = 0; i < n; ++i) out.push_back(a + (b - a) * (static_cast<double>(i) / (n - 1)));
    return out;
}

std::vector<Vec3> circle_samples(const Vec3& center, const Vec3& normal, double radius, int n) {
    Vec3 nn = normal.normalized();
    Vec3 a = std::abs(nn[0]) < 0.9 ? Vec3::UnitX() : Vec3::UnitY();
    Vec3 u = nn.cross(a).normalized();
    Vec3 v = nn.cross(u);
    std::vector<Vec3> out;
    out.reserve(n);
    for (int i = 0; i < n; ++i) {
        double t = 2.0 * std::numbers::pi * i / n;
        out.push_back(center + radius * (std::cos(t) * u + std::sin(t) * v));
    }
    return out;
}

}  // namespace

Preset make_preset(const std::string& name) {
    Preset p;
    p.name = name;
    auto field = std::make_shared<AnalyticField>();
    const double r = 0.4;
    if (name == "sphere") {
        p.description = "unit sphere, closed manifold";
        field->add(std::make_shared<SphereField>(Vec3::Zero(), 1.0));
    } else if (name == "cube") {
        p.description = "axis-aligned box shell with sharp edges, half extent 0.4";
        field->add(std::make_shared<BoxShellField>(Vec3::Zero(), Vec3::Constant(r)));
    } else if (name == "disk" || name == "open-disk") {
        p.description = "single open disk of radius 0.4 (open boundary case)";
        field->add(std::make_shared<DiskField>(Vec3::Zero(), Vec3::UnitZ(), r));
    } else if (name == "two-disks") {
        p.description = "two orthogonal disks of radius 0.4; non-manifold segment x=z=0";
        field->add(std::make_shared<DiskField>(Vec3::Zero(), Vec3::UnitZ(), r));
        field->add(std::make_shared<DiskField>(Vec3::Zero(), Vec3::UnitX(), r));
        p.nonmanifold_locus = segment_samples(Vec3(0, -r, 0), Vec3(0, r, 0), 800);
    } else if (name == "three-disks") {
        p.description = "three pairwise-orthogonal disks; three segments meeting at the origin";
        field->add(std::make_shared<DiskField>(Vec3::Zero(), Vec3::UnitX(), r));
        field->add(std::make_shared<DiskField>(Vec3::Zero(), Vec3::UnitY(), r));
        field->add(std::make_shared<DiskField>(Vec3::Zero(), Vec3::UnitZ(), r));
        for (const Vec3& axis : {Vec3(Vec3::UnitX()), Vec3(Vec3::UnitY()), Vec3(Vec3::UnitZ())}) {
            auto seg = segment_samples(-r * axis, r * axis, 400);
            p.nonmanifold_locus.insert(p.nonmanifold_locus.end(), seg.begin(), seg.end());
        }
    } else if (name == "sphere-plane") {
        p.description = "sphere of radius 0.4 cut by a disk; non-manifold circle x^2+y^2=0.16";
        field->add(std::make_shared<SphereField>(Vec3::Zero(), r));
        field->add(std::make_shared<DiskField>(Vec3::Zero(), Vec3::UnitZ(), 0.6));
        p.nonmanifold_locus = circle_samples(Vec3::Zero(), Vec3::UnitZ(), r, 1200);
    } else if (name == "thin-plate") {
        p.description = "two parallel disks at z=+/-0.05 (thin-plate separation case)";
        field->add(std::make_shared<DiskField>(Vec3(0, 0, 0.05), Vec3::UnitZ(), r));
        field->add(std::make_shared<DiskField>(Vec3(0, 0, -0.05), Vec3::UnitZ(), r));
    } else {
        throw VoroudfError("unknown preset '" + name + "'");
    }
    p.field = field;
    return p;
}

std::vector<std::string> preset_names() {
    return {"sphere", "cube", "open-disk", "two-disks", "three-disks", "sphere-plane",
            "thin-plate"};
}

namespace {

json vec_to_json(const Vec3& v) { return json::array({v[0], v[1], v[2]}); }

Vec3 vec_from_json(const json& j) { return Vec3(j.at(0), j.at(1), j.at(2)); }

}  // namespace

std::string field_to_json(const AnalyticField& field) {
    json prims = json::array();
    for (const auto& child : field.children()) {
        json p;
        if (auto* s = dynamic_cast<const SphereField*>(child.get())) {
            p = {{"type", "sphere"}, {"center", vec_to_json(s->center())},
                 {"radius", s->radius()}};
        } else if (auto* d = dynamic_cast<const DiskField*>(child.get())) {
            p = {{"type", "disk"},
                 {"center", vec_to_json(d->center())},
                 {"normal", vec_to_json(d->normal())},
                 {"radius", d->radius()}};
        } else if (auto* pl = dynamic_cast<const PlaneField*>(child.get())) {
            p = {{"type", "plane"},
                 {"point", vec_to_json(pl->point())},
                 {"normal", vec_to_json(pl->normal())},
                 {"patch_half_extent", pl->patch_half_extent()}};
        } else if (auto* b = dynamic_cast<const BoxShellField*>(child.get())) {
            p = {{"type", "box"},
                 {"center", vec_to_json(b->center())},
                 {"half_extents", vec_to_json(b->half_extents())}};
        } else {
            throw VoroudfError("unserializable analytic primitive");
        }
        prims.push_back(p);
    }
    return json{{"primitives", prims}}.dump(2);
}

std::shared_ptr<AnalyticField> field_from_json(const std::string& text) {
    json j = json::parse(text);
    auto field = std::make_shared<AnalyticField>();
    for (const auto& p : j.at("primitives")) {
        std::string type = p.at("type");
        if (type == "sphere") {
            field->add(std::make_shared<SphereField>(vec_from_json(p.at("center")),
                                                     p.at("radius").get<double>()));
        } else if (type == "disk") {
            field->add(std::make_shared<DiskField>(vec_from_json(p.at("center")),
                                                   vec_from_json(p.at("normal")),
                                                   p.at("radius").get<double>()));
        } else if (type == "plane") {
            field->add(std::make_shared<PlaneField>(
                vec_from_json(p.at("point")), vec_from_json(p.at("normal")),
                p.value("patch_half_extent", 0.6)));
        } else if (type == "box") {
            field->add(std::make_shared<BoxShellField>(vec_from_json(p.at("center")),
                                                       vec_from_json(p.at("half_extents"))));
        } else {
            throw VoroudfError("unknown primitive type '" + type + "'");
        }
    }
    if (field->children().empty()) throw VoroudfError("field spec contains no primitives");
    return field;
}

std::shared_ptr<AnalyticField> field_from_json_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw VoroudfError(path + ": cannot open field spec");
    std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    return field_from_json(text);
}

}  // namespace voroudf
