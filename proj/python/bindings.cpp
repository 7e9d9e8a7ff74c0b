#include "voroudf/field.hpp"
#include "voroudf/mesh_io.hpp"
#include "voroudf/metrics.hpp"
#include "voroudf/pipeline.hpp"
#include "voroudf/presets.hpp"
#include "voroudf/thinning.hpp"

#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <json.hpp>

namespace py = pybind11;
using namespace voroudf;

namespace {

using VertexArray = Eigen::Matrix<double, Eigen::Dynamic, 3, Eigen::RowMajor>;
using FaceArray = Eigen::Matrix<int, Eigen::Dynamic, 3, Eigen::RowMajor>;

TriangleMesh mesh_from_arrays(const VertexArray& vertices, const FaceArray& faces) {
    TriangleMesh mesh;
    mesh.vertices.reserve(vertices.rows());
    for (Eigen::Index i = 0; i < vertices.rows(); ++i)
        mesh.vertices.push_back(vertices.row(i).transpose());
    mesh.faces.reserve(faces.rows());
    for (Eigen::Index i = 0; i < faces.rows(); ++i)
        mesh.faces.push_back({faces(i, 0), faces(i, 1), faces(i, 2)});
    return mesh;
}

std::pair<VertexArray, FaceArray> arrays_from_mesh(const TriangleMesh& mesh) {
    VertexArray vertices(mesh.vertices.size(), 3);
    for (std::size_t i = 0; i < mesh.vertices.size(); ++i)
        vertices.row(i) = mesh.vertices[i].transpose();
    FaceArray faces(mesh.faces.size(), 3);
    for (std::size_t i = 0; i < mesh.faces.size(); ++i)
        for (int a = 0; a < 3; ++a) faces(i, a) = mesh.faces[i][a];
    return {vertices, faces};
}

}  // namespace

PYBIND11_MODULE(_voroudf, m) {
    m.doc() = "Voronoi-based surface reconstruction from unsigned distance fields";

    py::register_exception<VoroudfError>(m, "VoroudfError");

    py::class_<ReconConfig>(m, "ReconConfig")
        .def(py::init([](py::kwargs kwargs) {
            ReconConfig cfg;
            auto merged = nlohmann::json::parse(cfg.to_json());
            for (auto item : kwargs) {
                std::string key = py::cast<std::string>(item.first);
                if (!merged.contains(key))
                    throw VoroudfError("unknown config key '" + key + "'");
                py::handle v = item.second;
                if (py::isinstance<py::int_>(v))
                    merged[key] = py::cast<long long>(v);
                else if (py::isinstance<py::float_>(v))
                    merged[key] = py::cast<double>(v);
                else
                    throw VoroudfError("config key '" + key + "' must be numeric");
            }
            return ReconConfig::from_json(merged.dump());
        }))
        .def_readwrite("seed_count", &ReconConfig::seed_count)
        .def_readwrite("samples_per_cell", &ReconConfig::samples_per_cell)
        .def_readwrite("gamma", &ReconConfig::gamma)
        .def_readwrite("delta", &ReconConfig::delta)
        .def_readwrite("knn", &ReconConfig::knn)
        .def_readwrite("dense_sample_count", &ReconConfig::dense_sample_count)
        .def_readwrite("eps_udf", &ReconConfig::eps_udf)
        .def_readwrite("eps_grad", &ReconConfig::eps_grad)
        .def_readwrite("max_outer_iters", &ReconConfig::max_outer_iters)
        .def_readwrite("max_lbfgs_iters", &ReconConfig::max_lbfgs_iters)
        .def_readwrite("rank_threshold", &ReconConfig::rank_threshold)
        .def_readwrite("rng_seed", &ReconConfig::rng_seed)
        .def_readwrite("projection_tol", &ReconConfig::projection_tol)
        .def_readwrite("thin_max_component_faces", &ReconConfig::thin_max_component_faces)
        .def_readwrite("threads", &ReconConfig::threads)
        .def("to_json", &ReconConfig::to_json)
        .def_static("from_json", &ReconConfig::from_json);

    py::class_<UdfField, std::shared_ptr<UdfField>>(m, "Field")
        .def("eval", [](const UdfField& f, const Vec3& p) {
            UdfSample s = f.eval(p);
            return py::make_tuple(s.value, s.gradient, s.gradient_valid);
        })
        .def("domain", [](const UdfField& f) {
            BBox box = f.domain();
            return py::make_tuple(box.lo, box.hi);
        });

    m.def("preset_names", &preset_names);
    m.def(
        "preset_field",
        [](const std::string& name) -> std::shared_ptr<UdfField> {
            return make_preset(name).field;
        },
        py::arg("name"), "analytic test field by preset name");
    m.def(
        "preset_locus",
        [](const std::string& name) {
            auto locus = make_preset(name).nonmanifold_locus;
            VertexArray points(locus.size(), 3);
            for (std::size_t i = 0; i < locus.size(); ++i)
                points.row(i) = locus[i].transpose();
            return points;
        },
        py::arg("name"), "ground-truth non-manifold locus samples of a preset");
    m.def(
        "mesh_field",
        [](const VertexArray& vertices, const FaceArray& faces) -> std::shared_ptr<UdfField> {
            return std::make_shared<MeshField>(mesh_from_arrays(vertices, faces));
        },
        py::arg("vertices"), py::arg("faces"), "exact UDF of a triangle mesh");
    m.def(
        "field_from_json",
        [](const std::string& text) -> std::shared_ptr<UdfField> {
            return field_from_json(text);
        },
        py::arg("text"), "analytic field from a field-spec JSON document");

    m.def(
        "reconstruct",
        [](const std::shared_ptr<UdfField>& field, const ReconConfig& config) {
            ReconResult result;
            {
                py::gil_scoped_release release;
                result = reconstruct(*field, config);
            }
            auto [vertices, faces] = arrays_from_mesh(result.mesh);
            return py::make_tuple(vertices, faces, result.manifest.to_json());
        },
        py::arg("field"), py::arg("config") = ReconConfig{},
        "run the full pipeline; returns (vertices, faces, manifest_json)");

    m.def(
        "evaluate",
        [](const VertexArray& va, const FaceArray& fa, const VertexArray& vb,
           const FaceArray& fb, int n_samples, double sharp_threshold,
           std::uint64_t rng_seed) {
            MetricsConfig cfg;
            cfg.n_samples = n_samples;
            cfg.sharp_threshold = sharp_threshold;
            cfg.rng_seed = rng_seed;
            MetricsReport rep;
            TriangleMesh a = mesh_from_arrays(va, fa), b = mesh_from_arrays(vb, fb);
            {
                py::gil_scoped_release release;
                rep = evaluate(a, b, cfg);
            }
            return rep.to_json();
        },
        py::arg("vertices_a"), py::arg("faces_a"), py::arg("vertices_b"), py::arg("faces_b"),
        py::arg("n_samples") = 100000, py::arg("sharp_threshold") = 0.2,
        py::arg("rng_seed") = 0, "metric report JSON for a reconstruction vs a reference");

    m.def("read_mesh", [](const std::string& path) {
        auto [vertices, faces] = arrays_from_mesh(read_mesh(path));
        return py::make_tuple(vertices, faces);
    });
    m.def("write_mesh", [](const VertexArray& vertices, const FaceArray& faces,
                           const std::string& path) {
        write_mesh(mesh_from_arrays(vertices, faces), path);
    });

    m.def("euler_characteristic", [](const VertexArray& v, const FaceArray& f) {
        return euler_characteristic(mesh_from_arrays(v, f));
    });
    m.def("solid_tet_count", [](const VertexArray& v, const FaceArray& f) {
        return detect_solid_tets(mesh_from_arrays(v, f)).size();
    });
}
