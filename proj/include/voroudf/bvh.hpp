#pragma once

#include "voroudf/geometry.hpp"

namespace voroudf {

// Closest point on triangle (a,b,c) to p. Ericson, Real-Time Collision Detection.
Vec3 closest_point_on_triangle(const Vec3& p, const Vec3& a, const Vec3& b, const Vec3& c);

struct ClosestHit {
    double distance = std::numeric_limits<double>::infinity();
    Vec3 point = Vec3::Zero();
    int triangle = -1;
};

// Median-split AABB hierarchy over a triangle soup for closest-point queries.
class TriangleBvh {
public:
    TriangleBvh() = default;
    explicit TriangleBvh(const TriangleMesh& mesh);

    ClosestHit closest(const Vec3& p) const;
    bool empty() const { return nodes_.empty(); }

private:
    struct Node {
        Vec3 lo, hi;
        int left = -1, right = -1;  // children; leaf when left < 0
        int begin = 0, end = 0;     // triangle range for leaves
    };

    int build(int begin, int end, std::vector<Vec3>& centroids);
    void query(int node, const Vec3& p, ClosestHit& best) const;
    static double box_distance_sq(const Vec3& lo, const Vec3& hi, const Vec3& p);

    std::vector<Node> nodes_;
    std::vector<int> order_;  // permutation of triangle ids
    std::vector<std::array<Vec3, 3>> tris_;
    int root_ = -1;
};

// Uniform hash grid over a fixed point set; exact KNN and nearest-pair via
// expanding shell search.
class PointGrid {
public:
    PointGrid() = default;
    explicit PointGrid(const std::vector<Vec3>& points);

    // Indices of the k nearest points to q, ascending by distance (ties by
    // index). exclude is skipped (pass -1 to keep all).
    std::vector<int> knn(const Vec3& q, int k, int exclude = -1) const;

    std::vector<int> radius_query(const Vec3& q, double radius) const;

    // Minimum pairwise distance over the whole set.
    double min_pairwise_distance() const;

    std::size_t size() const { return points_.size(); }
    const std::vector<Vec3>& points() const { return points_; }

private:
    Eigen::Vector3i cell_of(const Vec3& p) const;
    std::size_t cell_index(const Eigen::Vector3i& c) const;

    std::vector<Vec3> points_;
    std::vector<std::vector<int>> cells_;
    Eigen::Vector3i dims_ = Eigen::Vector3i::Ones();
    Vec3 origin_ = Vec3::Zero();
    double cell_size_ = 1.0;
};

}  // namespace voroudf
