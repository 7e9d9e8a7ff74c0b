#include "voroudf/bvh.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <queue>

namespace voroudf {

Vec3 closest_point_on_triangle(const Vec3& p, const Vec3& a, const Vec3& b, const Vec3& c) {
    Vec3 ab = b - a, ac = c - a, ap = p - a;
    double d1 = ab.dot(ap), d2 = ac.dot(ap);
    if (d1 <= 0.0 && d2 <= 0.0) return a;

    Vec3 bp = p - b;
    double d3 = ab.dot(bp), d4 = ac.dot(bp);
    if (d3 >= 0.0 && d4 <= d3) return b;

    double vc = d1 * d4 - d3 * d2;
    if (vc <= 0.0 && d1 >= 0.0 && d3 <= 0.0) return a + (d1 / (d1 - d3)) * ab;

    Vec3 cp = p - c;
    double d5 = ab.dot(cp), d6 = ac.dot(cp);
    if (d6 >= 0.0 && d5 <= d6) return c;

    double vb = d5 * d2 - d1 * d6;
    if (vb <= 0.0 && d2 >= 0.0 && d6 <= 0.0) return a + (d2 / (d2 - d6)) * ac;

    double va = d3 * d6 - d5 * d4;
    if (va <= 0.0 && (d4 - d3) >= 0.0 && (d5 - d6) >= 0.0)
        return b + ((d4 - d3) / ((d4 - d3) + (d5 - d6))) * (c - b);

    double denom = 1.0 / (va + vb + vc);
    return a + ab * (vb * denom) + ac * (vc * denom);
}

TriangleBvh::TriangleBvh(const TriangleMesh& mesh) {
    tris_.reserve(mesh.faces.size());
    std::vector<Vec3> centroids;
    centroids.reserve(mesh.faces.size());
    for (const auto& f : mesh.faces) {
        std::array<Vec3, 3> t{mesh.vertices[f[0]], mesh.vertices[f[1]], mesh.vertices[f[2]]};
        centroids.push_back((t[0] + t[1] + t[2]) / 3.0);
        tris_.push_back(t);
    }
    order_.resize(tris_.size());
    std::iota(order_.begin(), order_.end(), 0);
    if (!tris_.empty()) root_ = build(0, static_cast<int>(tris_.size()), centroids);
}

int TriangleBvh::build(int begin, int end, std::vector<Vec3>& centroids) {
    Node node;
    node.lo = Vec3::Constant(std::numeric_limits<double>::infinity());
    node.hi = -node.lo;
    for (int i = begin; i < end; ++i) {
        for (const auto& v : tris_[order_[i]]) {
            node.lo = node.lo.cwiseMin(v);
            node.hi = node.hi.cwiseMax(v);
        }
    }
    int id = static_cast<int>(nodes_.size());
    nodes_.push_back(node);
    if (end - begin <= 4) {
        nodes_[id].begin = begin;
        nodes_[id].end = end;
        return id;
    }
    Vec3 ext = node.hi - node.lo;
    int axis = 0;
    ext.maxCoeff(&axis);
    int mid = (begin + end) / 2;
    std::nth_element(order_.begin() + begin, order_.begin() + mid, order_.begin() + end,
                     [&](int a, int b) { return centroids[a][axis] < centroids[b][axis]; });
    int l = build(begin, mid, centroids);
    int r = build(mid, end, centroids);
    nodes_[id].left = l;
    nodes_[id].right = r;
    return id;
}

double TriangleBvh::box_distance_sq(const Vec3& lo, const Vec3& hi, const Vec3& p) {
    Vec3 d = (lo - p).cwiseMax(p - hi).cwiseMax(0.0);
    return d.squaredNorm();
}

void TriangleBvh::query(int node_id, const Vec3& p, ClosestHit& best) const {
    const Node& node = nodes_[node_id];
    if (node.left < 0) {
        for (int i = node.begin; i < node.end; ++i) {
            int t = order_[i];
            Vec3 cp = closest_point_on_triangle(p, tris_[t][0], tris_[t][1], tris_[t][2]);
            double d = (p - cp).norm();
            if (d < best.distance) {
                best.distance = d;
                best.point = cp;
                best.triangle = t;
            }
        }
        return;
    }
    double dl = box_distance_sq(nodes_[node.left].lo, nodes_[node.left].hi, p);
    double dr = box_distance_sq(nodes_[node.right].lo, nodes_[node.right].hi, p);
    int first = node.left, second = node.right;
    if (dr < dl) {
        std::swap(first, second);
        std::swap(dl, dr);
    }
    if (dl < best.distance * best.distance) query(first, p, best);
    if (dr < best.distance * best.distance) query(second, p, best);
}

ClosestHit TriangleBvh::closest(const Vec3& p) const {
    ClosestHit best;
    if (root_ >= 0) query(root_, p, best);
    return best;
}

PointGrid::PointGrid(const std::vector<Vec3>& points) : points_(points) {
    if (points_.empty()) return;
    BBox box = bounding_box(points_);
    double diag = std::max(box.diagonal(), 1e-300);
    // Aim for a handful of points per cell.
    double target = std::cbrt(static_cast<double>(points_.size()) / 4.0);
    cell_size_ = std::max(diag / std::max(target, 1.0), 1e-12);
    origin_ = box.lo;
    Vec3 ext = box.extent();
    for (int a = 0; a < 3; ++a)
        dims_[a] = std::max(1, static_cast<int>(std::floor(ext[a] / cell_size_)) + 1);
    cells_.resize(static_cast<std::size_t>(dims_[0]) * dims_[1] * dims_[2]);
    for (int i = 0; i < static_cast<int>(points_.size()); ++i)
        cells_[cell_index(cell_of(points_[i]))].push_back(i);
}

Eigen::Vector3i PointGrid::cell_of(const Vec3& p) const {
    Eigen::Vector3i c;
    for (int a = 0; a < 3; ++a) {
        int i = static_cast<int>(std::floor((p[a] - origin_[a]) / cell_size_));
        c[a] = std::clamp(i, 0, dims_[a] - 1);
    }
    return c;
}

std::size_t PointGrid::cell_index(const Eigen::Vector3i& c) const {
    return (static_cast<std::size_t>(c[2]) * dims_[1] + c[1]) * dims_[0] + c[0];
}

std::vector<int> PointGrid::knn(const Vec3& q, int k, int exclude) const {
    if (points_.empty() || k <= 0) return {};
    std::vector<std::pair<double, int>> found;  // (distance^2, index)
    Eigen::Vector3i qc = cell_of(q);
    int max_ring = dims_.maxCoeff();
    for (int ring = 0; ring <= max_ring; ++ring) {
        // Points in this ring are at least (ring-1)*cell_size_ away, so once
        // we hold k results closer than that bound we can stop.
        if (static_cast<int>(found.size()) >= k) {
            double bound = (ring - 1) * cell_size_;
            std::nth_element(found.begin(), found.begin() + (k - 1), found.end());
            if (bound > 0 && found[k - 1].first <= bound * bound) break;
        }
        bool any_cell = false;
        for (int dz = -ring; dz <= ring; ++dz)
            for (int dy = -ring; dy <= ring; ++dy)
                for (int dx = -ring; dx <= ring; ++dx) {
                    if (std::max({std::abs(dx), std::abs(dy), std::abs(dz)}) != ring) continue;
                    Eigen::Vector3i c = qc + Eigen::Vector3i(dx, dy, dz);
                    if ((c.array() < 0).any() || (c.array() >= dims_.array()).any()) continue;
                    any_cell = true;
                    for (int i : cells_[cell_index(c)]) {
                        if (i == exclude) continue;
                        found.emplace_back((points_[i] - q).squaredNorm(), i);
                    }
                }
        // Rings intersect the grid for a contiguous range of radii starting
        // at 0, so an empty ring means every later ring is empty too.
        if (!any_cell && ring > 0) break;
    }
    std::sort(found.begin(), found.end());
    if (static_cast<int>(found.size()) > k) found.resize(k);
    std::vector<int> out;
    out.reserve(found.size());
    for (const auto& [d, i] : found) out.push_back(i);
    return out;
}

std::vector<int> PointGrid::radius_query(const Vec3& q, double radius) const {
    if (points_.empty()) return {};
    std::vector<int> out;
    Eigen::Vector3i lo = cell_of(q - Vec3::Constant(radius));
    Eigen::Vector3i hi = cell_of(q + Vec3::Constant(radius));
    double r2 = radius * radius;
    for (int z = lo[2]; z <= hi[2]; ++z)
        for (int y = lo[1]; y <= hi[1]; ++y)
            for (int x = lo[0]; x <= hi[0]; ++x)
                for (int i : cells_[cell_index({x, y, z})])
                    if ((points_[i] - q).squaredNorm() <= r2) out.push_back(i);
    return out;
}

double PointGrid::min_pairwise_distance() const {
    double best = std::numeric_limits<double>::infinity();
    for (int i = 0; i < static_cast<int>(points_.size()); ++i) {
        auto nn = knn(points_[i], 1, i);
        if (!nn.empty()) best = std::min(best, (points_[i] - points_[nn[0]]).norm());
    }
    return best;
}

}  // namespace voroudf
