#include "voroudf/metrics.hpp"

#include "voroudf/bvh.hpp"

#include <algorithm>
#include <cmath>
#include <json.hpp>
#include <sstream>
#include <unordered_map>

namespace voroudf {

namespace {

double mesh_area(const TriangleMesh& mesh, std::vector<double>& cumulative) {
    cumulative.resize(mesh.faces.size());
    double total = 0.0;
    for (std::size_t f = 0; f < mesh.faces.size(); ++f) {
        const auto& t = mesh.faces[f];
        total += triangle_area(mesh.vertices[t[0]], mesh.vertices[t[1]], mesh.vertices[t[2]]);
        cumulative[f] = total;
    }
    return total;
}

BBox joint_bbox(const TriangleMesh& a, const TriangleMesh& b) {
    BBox box;
    for (const auto& v : a.vertices) box.expand(v);
    for (const auto& v : b.vertices) box.expand(v);
    return box;
}

// closest-point roundoff floor: samples lying on the target mesh must measure
// exactly zero
double snapped(double d, double floor_eps) { return d < floor_eps ? 0.0 : d; }

double mean_distance(const std::vector<SurfacePoint>& samples, const TriangleBvh& target,
                     double floor_eps) {
    if (samples.empty()) return 0.0;
    double sum = 0.0;
    for (const auto& s : samples) sum += snapped(target.closest(s.point).distance, floor_eps);
    return sum / samples.size();
}

double max_distance(const std::vector<Vec3>& points, const TriangleBvh& target,
                    double floor_eps) {
    double best = 0.0;
    for (const auto& p : points)
        best = std::max(best, snapped(target.closest(p).distance, floor_eps));
    return best;
}

// "sharp" = some pair of normals in the radius neighborhood has dot < threshold
std::vector<Vec3> sharp_subset(const std::vector<SurfacePoint>& samples, double radius,
                               double threshold) {
    std::vector<Vec3> points(samples.size());
    for (std::size_t i = 0; i < samples.size(); ++i) points[i] = samples[i].point;
    PointGrid grid(points);
    std::vector<Vec3> sharp;
    for (std::size_t i = 0; i < samples.size(); ++i) {
        auto near = grid.radius_query(samples[i].point, radius);
        bool is_sharp = false;
        for (std::size_t p = 0; p < near.size() && !is_sharp; ++p)
            for (std::size_t q = p + 1; q < near.size() && !is_sharp; ++q)
                if (samples[near[p]].normal.dot(samples[near[q]].normal) < threshold)
                    is_sharp = true;
        if (is_sharp) sharp.push_back(samples[i].point);
    }
    return sharp;
}

double point_set_chamfer(const std::vector<Vec3>& a, const std::vector<Vec3>& b) {
    PointGrid ga(a), gb(b);
    double sum_a = 0.0;
    for (const auto& p : a) sum_a += (b[gb.knn(p, 1)[0]] - p).norm();
    double sum_b = 0.0;
    for (const auto& p : b) sum_b += (a[ga.knn(p, 1)[0]] - p).norm();
    return 0.5 * (sum_a / a.size() + sum_b / b.size());
}

// Length-weighted samples along the non-manifold locus plus its isolated
// vertices.
std::vector<Vec3> sample_locus(const NonManifoldLocus& locus, int count, Rng& rng) {
    std::vector<Vec3> out = locus.vertices;
    if (!locus.edges.empty()) {
        std::vector<double> cumulative(locus.edges.size());
        double total = 0.0;
        for (std::size_t e = 0; e < locus.edges.size(); ++e) {
            total += (locus.edges[e].second - locus.edges[e].first).norm();
            cumulative[e] = total;
        }
        std::uniform_real_distribution<double> uni(0.0, 1.0);
        for (int i = 0; i < count; ++i) {
            double pick = uni(rng) * total;
            std::size_t e = std::lower_bound(cumulative.begin(), cumulative.end(), pick) -
                            cumulative.begin();
            if (e >= locus.edges.size()) e = locus.edges.size() - 1;
            double t = uni(rng);
            out.push_back(locus.edges[e].first +
                          t * (locus.edges[e].second - locus.edges[e].first));
        }
    }
    return out;
}

}  // namespace

std::vector<SurfacePoint> sample_mesh_surface(const TriangleMesh& mesh, int count, Rng& rng) {
    if (mesh.empty()) throw EmptyMeshError{};
    std::vector<double> cumulative;
    double total = mesh_area(mesh, cumulative);
    if (total <= 0.0) throw VoroudfError("mesh has zero total area");
    std::uniform_real_distribution<double> uni(0.0, 1.0);
    std::vector<SurfacePoint> out(count);
    for (int i = 0; i < count; ++i) {
        double pick = uni(rng) * total;
        std::size_t f = std::lower_bound(cumulative.begin(), cumulative.end(), pick) -
                        cumulative.begin();
        if (f >= mesh.faces.size()) f = mesh.faces.size() - 1;
        const auto& t = mesh.faces[f];
        const Vec3 &a = mesh.vertices[t[0]], &b = mesh.vertices[t[1]], &c = mesh.vertices[t[2]];
        double r1 = std::sqrt(uni(rng)), r2 = uni(rng);
        out[i].point = (1.0 - r1) * a + r1 * (1.0 - r2) * b + r1 * r2 * c;
        Vec3 n = (b - a).cross(c - a);
        double len = n.norm();
        out[i].normal = len > 0.0 ? Vec3(n / len) : Vec3::UnitZ();
    }
    return out;
}

double triangle_quality(const TriangleMesh& mesh, int* degenerate) {
    if (mesh.empty()) throw EmptyMeshError{};
    double sum = 0.0;
    int used = 0, skipped = 0;
    for (const auto& t : mesh.faces) {
        const Vec3 &a = mesh.vertices[t[0]], &b = mesh.vertices[t[1]], &c = mesh.vertices[t[2]];
        double ab = (b - a).norm(), bc = (c - b).norm(), ca = (a - c).norm();
        double h = std::max({ab, bc, ca});
        double p = 0.5 * (ab + bc + ca);
        double s = triangle_area(a, b, c);
        if (h <= 0.0 || p <= 0.0 || s <= 0.0) {
            ++skipped;
            continue;
        }
        sum += (6.0 / std::sqrt(3.0)) * s / (p * h);
        ++used;
    }
    if (degenerate) *degenerate = skipped;
    if (used == 0) throw VoroudfError("all faces degenerate");
    return sum / used;
}

double chamfer_l1(const TriangleMesh& a, const TriangleMesh& b, int n_samples,
                  std::uint64_t rng_seed) {
    if (a.empty() || b.empty()) throw EmptyMeshError{};
    // one stream per side, restarted identically: identical meshes sample the
    // same points and the metric is exactly zero
    Rng rng_a(rng_seed), rng_b(rng_seed);
    auto sa = sample_mesh_surface(a, n_samples, rng_a);
    auto sb = sample_mesh_surface(b, n_samples, rng_b);
    TriangleBvh ba(a), bb(b);
    double eps = 1e-12 * joint_bbox(a, b).diagonal();
    return 0.5 * (mean_distance(sa, bb, eps) + mean_distance(sb, ba, eps));
}

double hausdorff(const TriangleMesh& a, const TriangleMesh& b, int n_samples,
                 std::uint64_t rng_seed) {
    if (a.empty() || b.empty()) throw EmptyMeshError{};
    Rng rng_a(rng_seed), rng_b(rng_seed);
    auto sa = sample_mesh_surface(a, n_samples, rng_a);
    auto sb = sample_mesh_surface(b, n_samples, rng_b);
    std::vector<Vec3> pa, pb;
    for (const auto& s : sa) pa.push_back(s.point);
    for (const auto& s : sb) pb.push_back(s.point);
    pa.insert(pa.end(), a.vertices.begin(), a.vertices.end());
    pb.insert(pb.end(), b.vertices.begin(), b.vertices.end());
    TriangleBvh ba(a), bb(b);
    double diag = joint_bbox(a, b).diagonal();
    double raw = std::max(max_distance(pa, bb, 1e-12 * diag), max_distance(pb, ba, 1e-12 * diag));
    if (diag <= 0.0) return 0.0;
    return raw / diag * 100.0;
}

double edge_chamfer(const TriangleMesh& a, const TriangleMesh& b, int n_samples,
                    double sharp_threshold, std::uint64_t rng_seed) {
    if (a.empty() || b.empty()) throw EmptyMeshError{};
    Rng rng_a(rng_seed), rng_b(rng_seed);
    auto sa = sample_mesh_surface(a, n_samples, rng_a);
    auto sb = sample_mesh_surface(b, n_samples, rng_b);
    double radius = 0.01 * joint_bbox(a, b).diagonal();
    auto sharp_a = sharp_subset(sa, radius, sharp_threshold);
    auto sharp_b = sharp_subset(sb, radius, sharp_threshold);
    if (sharp_a.empty() && sharp_b.empty()) return 0.0;
    if (sharp_a.empty() || sharp_b.empty())
        return std::numeric_limits<double>::infinity();
    return point_set_chamfer(sharp_a, sharp_b);
}

long euler_td(const TriangleMesh& a, const TriangleMesh& b) {
    return std::labs(euler_characteristic(a) - euler_characteristic(b));
}

NonManifoldLocus non_manifold_locus(const TriangleMesh& mesh) {
    NonManifoldLocus locus;
    auto incidence = edge_incidence(mesh);
    std::unordered_map<int, std::vector<int>> vertex_faces;
    for (int f = 0; f < static_cast<int>(mesh.faces.size()); ++f)
        for (int v : mesh.faces[f]) vertex_faces[v].push_back(f);

    for (const auto& [key, faces] : incidence) {
        if (faces.size() <= 2) continue;
        int va = static_cast<int>(key >> 32), vb = static_cast<int>(key & 0xffffffffu);
        locus.edges.emplace_back(mesh.vertices[va], mesh.vertices[vb]);
    }

    for (const auto& [v, inc_faces] : vertex_faces) {
        // link graph: incident faces joined through this vertex's edges
        std::unordered_map<std::uint64_t, std::vector<int>> local;
        for (int li = 0; li < static_cast<int>(inc_faces.size()); ++li)
            for (int u : mesh.faces[inc_faces[li]])
                if (u != v) local[edge_key(v, u)].push_back(li);
        bool bad = false;
        int boundary = 0;
        for (const auto& [k, fs] : local) {
            if (fs.size() > 2) bad = true;
            if (fs.size() == 1) ++boundary;
        }
        if (boundary != 0 && boundary != 2) bad = true;
        if (!bad) {
            std::vector<int> parent(inc_faces.size());
            for (std::size_t i = 0; i < parent.size(); ++i) parent[i] = static_cast<int>(i);
            auto find = [&](int x) {
                while (parent[x] != x) x = parent[x] = parent[parent[x]];
                return x;
            };
            for (const auto& [k, fs] : local)
                for (std::size_t i = 1; i < fs.size(); ++i) parent[find(fs[0])] = find(fs[i]);
            for (std::size_t i = 1; i < parent.size() && !bad; ++i)
                if (find(static_cast<int>(i)) != find(0)) bad = true;
        }
        if (bad) locus.vertices.push_back(mesh.vertices[v]);
    }
    return locus;
}

double nm_chamfer(const TriangleMesh& a, const TriangleMesh& b, int n_samples,
                  std::uint64_t rng_seed) {
    NonManifoldLocus la = non_manifold_locus(a), lb = non_manifold_locus(b);
    if (la.empty() && lb.empty()) return 0.0;
    if (la.empty() || lb.empty()) return std::numeric_limits<double>::infinity();
    Rng rng_a(rng_seed), rng_b(rng_seed);
    return point_set_chamfer(sample_locus(la, n_samples, rng_a),
                             sample_locus(lb, n_samples, rng_b));
}

double nm_chamfer_to_points(const TriangleMesh& a, const std::vector<Vec3>& reference,
                            int n_samples, std::uint64_t rng_seed) {
    NonManifoldLocus la = non_manifold_locus(a);
    if (la.empty() && reference.empty()) return 0.0;
    if (la.empty() || reference.empty()) return std::numeric_limits<double>::infinity();
    Rng rng(rng_seed);
    return point_set_chamfer(sample_locus(la, n_samples, rng), reference);
}

namespace {

nlohmann::json metric_value(double v) {
    if (std::isinf(v)) return "Infinite";
    return v;
}

std::string metric_csv(double v) {
    if (std::isinf(v)) return "Inf";
    std::ostringstream ss;
    ss << v;
    return ss.str();
}

}  // namespace

std::string MetricsReport::to_json() const {
    nlohmann::json j{{"cd_x1e3", metric_value(cd)},
                     {"hd_pct_diag", metric_value(hd)},
                     {"ecd_x1e2", metric_value(ecd)},
                     {"tq", tq},
                     {"td", td},
                     {"nm_cd_x1e3", metric_value(nm_cd)},
                     {"n_samples", n_samples},
                     {"sharp_threshold", sharp_threshold},
                     {"rng_seed", rng_seed},
                     {"normalization", "joint bbox scaled to centered unit cube"}};
    return j.dump(2);
}

std::string MetricsReport::csv_header() {
    return "label,cd_x1e3,hd_pct_diag,ecd_x1e2,tq,td,nm_cd_x1e3";
}

std::string MetricsReport::to_csv_row(const std::string& label) const {
    std::ostringstream ss;
    ss << label << ',' << metric_csv(cd) << ',' << metric_csv(hd) << ',' << metric_csv(ecd)
       << ',' << tq << ',' << td << ',' << metric_csv(nm_cd);
    return ss.str();
}

MetricsReport evaluate(const TriangleMesh& reconstructed, const TriangleMesh& reference,
                       const MetricsConfig& config) {
    // joint normalization to the centered unit cube fixes the scale the x1e3
    // / x1e2 factors presuppose
    BBox box = joint_bbox(reconstructed, reference);
    double longest = box.extent().maxCoeff();
    double scale = longest > 0.0 ? 1.0 / longest : 1.0;
    Vec3 center = box.center();
    auto normalized = [&](const TriangleMesh& mesh) {
        TriangleMesh out = mesh;
        for (auto& v : out.vertices) v = scale * (v - center);
        return out;
    };
    TriangleMesh a = normalized(reconstructed), b = normalized(reference);

    MetricsReport report;
    report.n_samples = config.n_samples;
    report.sharp_threshold = config.sharp_threshold;
    report.rng_seed = config.rng_seed;
    report.cd = 1e3 * chamfer_l1(a, b, config.n_samples, config.rng_seed);
    report.hd = hausdorff(a, b, config.n_samples, config.rng_seed);
    report.ecd = 1e2 * edge_chamfer(a, b, config.n_samples, config.sharp_threshold,
                                    config.rng_seed);
    report.tq = triangle_quality(a);
    report.td = euler_td(a, b);
    report.nm_cd = 1e3 * nm_chamfer(a, b, config.n_samples, config.rng_seed);
    return report;
}

}  // namespace voroudf
