#include "voroudf/mesh_io.hpp"

#include <algorithm>
#include <cstring>
#include <fstream>
#include <sstream>

namespace voroudf {

namespace {

std::string lower_ext(const std::string& path) {
    auto dot = path.find_last_of('.');
    if (dot == std::string::npos) return "";
    std::string ext = path.substr(dot + 1);
    std::transform(ext.begin(), ext.end(), ext.begin(), ::tolower);
    return ext;
}

[[noreturn]] void fail(const std::string& path, const std::string& what, long line = -1) {
    std::ostringstream os;
    os << path;
    if (line >= 0) os << ":" << line;
    os << ": " << what;
    throw VoroudfError(os.str());
}

}  // namespace

TriangleMesh read_mesh(const std::string& path) {
    std::string ext = lower_ext(path);
    if (ext == "obj") return read_obj(path);
    if (ext == "ply") return read_ply(path);
    fail(path, "unsupported mesh extension '" + ext + "' (expected .obj or .ply)");
}

TriangleMesh read_obj(const std::string& path) {
    std::ifstream in(path);
    if (!in) fail(path, "cannot open file");
    TriangleMesh mesh;
    std::string line;
    long lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        std::istringstream ss(line);
        std::string tag;
        ss >> tag;
        if (tag == "v") {
            Vec3 p;
            if (!(ss >> p[0] >> p[1] >> p[2])) fail(path, "malformed vertex", lineno);
            mesh.vertices.push_back(p);
        } else if (tag == "f") {
            std::vector<int> idx;
            std::string tok;
            while (ss >> tok) {
                // accept v, v/vt, v//vn, v/vt/vn
                int v = std::stoi(tok.substr(0, tok.find('/')));
                if (v < 0) v = static_cast<int>(mesh.vertices.size()) + v + 1;
                if (v < 1 || v > static_cast<int>(mesh.vertices.size()))
                    fail(path, "face index out of range", lineno);
                idx.push_back(v - 1);
            }
            if (idx.size() < 3) fail(path, "face with fewer than 3 vertices", lineno);
            for (std::size_t i = 1; i + 1 < idx.size(); ++i)  // fan-triangulate
                mesh.append_face(idx[0], idx[i], idx[i + 1]);
        }
    }
    return mesh;
}

namespace {

struct PlyProperty {
    std::string type;
    std::string name;
    bool is_list = false;
    std::string count_type;
};

struct PlyElement {
    std::string name;
    long count = 0;
    std::vector<PlyProperty> props;
};

std::size_t scalar_size(const std::string& t) {
    if (t == "char" || t == "uchar" || t == "int8" || t == "uint8") return 1;
    if (t == "short" || t == "ushort" || t == "int16" || t == "uint16") return 2;
    if (t == "int" || t == "uint" || t == "int32" || t == "uint32" || t == "float" ||
        t == "float32")
        return 4;
    if (t == "double" || t == "float64") return 8;
    throw VoroudfError("unknown PLY scalar type '" + t + "'");
}

double read_scalar(std::istream& in, const std::string& t) {
    unsigned char buf[8];
    in.read(reinterpret_cast<char*>(buf), static_cast<std::streamsize>(scalar_size(t)));
    if (t == "float" || t == "float32") {
        float f;
        std::memcpy(&f, buf, 4);
        return f;
    }
    if (t == "double" || t == "float64") {
        double d;
        std::memcpy(&d, buf, 8);
        return d;
    }
    if (t == "uchar" || t == "uint8") return buf[0];
    if (t == "char" || t == "int8") return static_cast<signed char>(buf[0]);
    if (t == "ushort" || t == "uint16") {
        std::uint16_t v;
        std::memcpy(&v, buf, 2);
        return v;
    }
    if (t == "short" || t == "int16") {
        std::int16_t v;
        std::memcpy(&v, buf, 2);
        return v;
    }
    if (t == "uint" || t == "uint32") {
        std::uint32_t v;
        std::memcpy(&v, buf, 4);
        return v;
    }
    std::int32_t v;
    std::memcpy(&v, buf, 4);
    return v;
}

}  // namespace

TriangleMesh read_ply(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) fail(path, "cannot open file");
    std::string line;
    std::getline(in, line);
    if (line.rfind("ply", 0) != 0) fail(path, "not a PLY file", 1);

    bool binary = false, ascii = false;
    std::vector<PlyElement> elements;
    long lineno = 1;
    while (std::getline(in, line)) {
        ++lineno;
        std::istringstream ss(line);
        std::string tag;
        ss >> tag;
        if (tag == "comment" || tag == "obj_info") continue;
        if (tag == "format") {
            std::string fmt;
            ss >> fmt;
            if (fmt == "binary_little_endian") binary = true;
            else if (fmt == "ascii") ascii = true;
            else fail(path, "unsupported PLY format '" + fmt + "'", lineno);
        } else if (tag == "element") {
            PlyElement el;
            ss >> el.name >> el.count;
            elements.push_back(el);
        } else if (tag == "property") {
            if (elements.empty()) fail(path, "property before element", lineno);
            PlyProperty p;
            std::string t;
            ss >> t;
            if (t == "list") {
                p.is_list = true;
                ss >> p.count_type >> p.type >> p.name;
            } else {
                p.type = t;
                ss >> p.name;
            }
            elements.back().props.push_back(p);
        } else if (tag == "end_header") {
            break;
        }
    }
    if (!binary && !ascii) fail(path, "missing PLY format line");

    TriangleMesh mesh;
    auto next_ascii = [&](const std::string&) {
        double v;
        if (!(in >> v)) fail(path, "truncated ascii PLY data");
        return v;
    };
    for (const auto& el : elements) {
        bool is_vertex = el.name == "vertex";
        bool is_face = el.name == "face";
        for (long i = 0; i < el.count; ++i) {
            Vec3 pos = Vec3::Zero();
            for (const auto& p : el.props) {
                if (p.is_list) {
                    long n = static_cast<long>(binary ? read_scalar(in, p.count_type)
                                                      : next_ascii(p.count_type));
                    std::vector<long> idx(n);
                    for (long j = 0; j < n; ++j)
                        idx[j] = static_cast<long>(binary ? read_scalar(in, p.type)
                                                          : next_ascii(p.type));
                    if (is_face && (p.name == "vertex_indices" || p.name == "vertex_index")) {
                        if (n < 3) fail(path, "face with fewer than 3 vertices");
                        for (long j = 1; j + 1 < n; ++j)
                            mesh.append_face(static_cast<int>(idx[0]), static_cast<int>(idx[j]),
                                             static_cast<int>(idx[j + 1]));
                    }
                } else {
                    double v = binary ? read_scalar(in, p.type) : next_ascii(p.type);
                    if (is_vertex) {
                        if (p.name == "x") pos[0] = v;
                        else if (p.name == "y") pos[1] = v;
                        else if (p.name == "z") pos[2] = v;
                    }
                }
            }
            if (is_vertex) mesh.vertices.push_back(pos);
        }
    }
    for (const auto& f : mesh.faces)
        for (int v : f)
            if (v < 0 || v >= static_cast<int>(mesh.vertices.size()))
                fail(path, "face index out of range");
    return mesh;
}

void write_mesh(const TriangleMesh& mesh, const std::string& path) {
    std::string ext = lower_ext(path);
    if (ext == "obj") return write_obj(mesh, path);
    if (ext == "ply") return write_ply(mesh, path);
    fail(path, "unsupported mesh extension '" + ext + "' (expected .obj or .ply)");
}

void write_obj(const TriangleMesh& mesh, const std::string& path) {
    std::ofstream out(path);
    if (!out) fail(path, "cannot open file for writing");
    out.precision(17);
    for (const auto& v : mesh.vertices) out << "v " << v[0] << " " << v[1] << " " << v[2] << "\n";
    for (const auto& f : mesh.faces)
        out << "f " << f[0] + 1 << " " << f[1] + 1 << " " << f[2] + 1 << "\n";
}

void write_ply(const TriangleMesh& mesh, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) fail(path, "cannot open file for writing");
    out << "ply\nformat binary_little_endian 1.0\n"
        << "element vertex " << mesh.vertices.size() << "\n"
        << "property double x\nproperty double y\nproperty double z\n"
        << "element face " << mesh.faces.size() << "\n"
        << "property list uchar int vertex_indices\nend_header\n";
    for (const auto& v : mesh.vertices) {
        double xyz[3] = {v[0], v[1], v[2]};
        out.write(reinterpret_cast<const char*>(xyz), 24);
    }
    for (const auto& f : mesh.faces) {
        unsigned char n = 3;
        std::int32_t idx[3] = {f[0], f[1], f[2]};
        out.write(reinterpret_cast<const char*>(&n), 1);
        out.write(reinterpret_cast<const char*>(idx), 12);
    }
}

void write_labeled_points_ply(const std::vector<Vec3>& points, const std::vector<int>& labels,
                              const std::string& path) {
    static const unsigned char palette[12][3] = {
        {230, 25, 75},  {60, 180, 75},   {255, 225, 25}, {0, 130, 200},
        {245, 130, 48}, {145, 30, 180},  {70, 240, 240}, {240, 50, 230},
        {210, 245, 60}, {250, 190, 212}, {0, 128, 128},  {220, 190, 255}};
    std::ofstream out(path);
    if (!out) fail(path, "cannot open file for writing");
    out << "ply\nformat ascii 1.0\nelement vertex " << points.size()
        << "\nproperty float x\nproperty float y\nproperty float z\n"
        << "property uchar red\nproperty uchar green\nproperty uchar blue\nend_header\n";
    for (std::size_t i = 0; i < points.size(); ++i) {
        const auto* c = palette[labels[i] >= 0 ? labels[i] % 12 : 0];
        out << points[i][0] << " " << points[i][1] << " " << points[i][2] << " " << int(c[0])
            << " " << int(c[1]) << " " << int(c[2]) << "\n";
    }
}

void write_points_ply(const std::vector<Vec3>& points, const std::string& path) {
    std::ofstream out(path);
    if (!out) fail(path, "cannot open file for writing");
    out.precision(17);
    out << "ply\nformat ascii 1.0\nelement vertex " << points.size()
        << "\nproperty double x\nproperty double y\nproperty double z\nend_header\n";
    for (const auto& p : points) out << p[0] << " " << p[1] << " " << p[2] << "\n";
}

std::vector<Vec3> read_points_ply(const std::string& path) {
    TriangleMesh m = read_ply(path);
    return m.vertices;
}

}  // namespace voroudf
