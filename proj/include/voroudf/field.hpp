#pragma once

#include "voroudf/bvh.hpp"
#include "voroudf/geometry.hpp"

#include <memory>
#include <optional>
#include <random>
#include <string>
#include <vector>

namespace voroudf {

using Rng = std::mt19937_64;

// Below this distance the gradient direction is numerically meaningless.
constexpr double kDegenerateEps = 1e-7;

struct UdfSample {
    Vec3 point = Vec3::Zero();
    double value = 0.0;
    Vec3 gradient = Vec3::Zero();    // unit length when valid
    bool gradient_valid = true;      // false inside the degenerate zone
    bool out_of_domain = false;      // clamped grid query
};

class UdfField {
public:
    virtual ~UdfField() = default;

    // Pure and reentrant; safe for concurrent read-only queries.
    virtual UdfSample eval(const Vec3& p) const = 0;

    // Region the surface is known to lie in, used for uniform seeding.
    virtual BBox domain() const = 0;
};

// ---------------------------------------------------------------------------
// Analytic primitives with min-composition

class AnalyticPrimitive : public UdfField {
public:
    // Uniform sample on the primitive's zero set.
    virtual Vec3 sample_zero_set(Rng& rng) const = 0;
    virtual std::string describe() const = 0;
};

class PlaneField final : public AnalyticPrimitive {
public:
    PlaneField(const Vec3& point, const Vec3& normal, double patch_half_extent = 0.6);
    UdfSample eval(const Vec3& p) const override;
    BBox domain() const override;
    Vec3 sample_zero_set(Rng& rng) const override;
    std::string describe() const override;
    const Vec3& point() const { return point_; }
    const Vec3& normal() const { return normal_; }
    double patch_half_extent() const { return half_extent_; }

private:
    Vec3 point_, normal_, u_, v_;
    double half_extent_;  // bounds zero-set sampling only; distance is to the infinite plane
};

// Open disk: flat patch with an open boundary rim.
class DiskField final : public AnalyticPrimitive {
public:
    DiskField(const Vec3& center, const Vec3& normal, double radius);
    UdfSample eval(const Vec3& p) const override;
    BBox domain() const override;
    Vec3 sample_zero_set(Rng& rng) const override;
    std::string describe() const override;
    const Vec3& center() const { return center_; }
    const Vec3& normal() const { return normal_; }
    double radius() const { return radius_; }

private:
    Vec3 center_, normal_, u_, v_;
    double radius_;
};

class SphereField final : public AnalyticPrimitive {
public:
    SphereField(const Vec3& center, double radius);
    UdfSample eval(const Vec3& p) const override;
    BBox domain() const override;
    Vec3 sample_zero_set(Rng& rng) const override;
    std::string describe() const override;
    const Vec3& center() const { return center_; }
    double radius() const { return radius_; }

private:
    Vec3 center_;
    double radius_;
};

// Distance to the surface of an axis-aligned box (shell, not solid).
class BoxShellField final : public AnalyticPrimitive {
public:
    BoxShellField(const Vec3& center, const Vec3& half_extents);
    UdfSample eval(const Vec3& p) const override;
    BBox domain() const override;
    Vec3 sample_zero_set(Rng& rng) const override;
    std::string describe() const override;
    const Vec3& center() const { return center_; }
    const Vec3& half_extents() const { return half_; }

private:
    Vec3 center_, half_;
};

// Min-composition of child fields; the gradient comes from the minimizing child.
class AnalyticField final : public UdfField {
public:
    AnalyticField() = default;
    explicit AnalyticField(std::vector<std::shared_ptr<AnalyticPrimitive>> children);
    void add(std::shared_ptr<AnalyticPrimitive> child);

    UdfSample eval(const Vec3& p) const override;
    BBox domain() const override;
    const std::vector<std::shared_ptr<AnalyticPrimitive>>& children() const { return children_; }

private:
    std::vector<std::shared_ptr<AnalyticPrimitive>> children_;
};

// ---------------------------------------------------------------------------
// Exact distance to a triangle mesh

class MeshField final : public UdfField {
public:
    explicit MeshField(TriangleMesh mesh);
    UdfSample eval(const Vec3& p) const override;
    BBox domain() const override;
    const TriangleMesh& mesh() const { return mesh_; }

private:
    TriangleMesh mesh_;
    TriangleBvh bvh_;
    BBox box_;
};

// ---------------------------------------------------------------------------
// Sampled grid with trilinear interpolation

class GridField final : public UdfField {
public:
    GridField(Eigen::Vector3i dims, Vec3 origin, double spacing, std::vector<float> values);

    UdfSample eval(const Vec3& p) const override;
    BBox domain() const override;

    // Binary format: "UDFG", u32 nx ny nz (LE), 3x f64 origin, f64 spacing,
    // then nx*ny*nz f32 values in x-fastest order.
    static GridField load(const std::string& path);
    void save(const std::string& path) const;

    // Sample an arbitrary field onto a grid covering its domain.
    static GridField from_field(const UdfField& field, int resolution);

    const Eigen::Vector3i& dims() const { return dims_; }
    double spacing() const { return spacing_; }
    float value_at_node(int i, int j, int k) const {
        return values_[(static_cast<std::size_t>(k) * dims_[1] + j) * dims_[0] + i];
    }

private:
    Eigen::Vector3i dims_;
    Vec3 origin_;
    double spacing_;
    std::vector<float> values_;
};

// ---------------------------------------------------------------------------
// Projection onto the zero set

struct ProjectionResult {
    Vec3 point = Vec3::Zero();
    double residual = 0.0;
    int steps = 0;
    bool converged = false;
    // Gradient used by the last descent step; approximates the surface normal
    // at the landing point, where the field's own gradient is degenerate.
    Vec3 normal = Vec3::Zero();
    bool normal_valid = false;
    bool stalled = false;  // failed to converge and residual stopped shrinking
};

// Iterates x <- x - F(x) n(x) until F(x) < tol or max_steps.
ProjectionResult project_to_surface(const UdfField& field, const Vec3& p, int max_steps = 30,
                                    double tol = 1e-9);

struct NonConvergentProjection : VoroudfError {
    NonConvergentProjection() : VoroudfError("projection did not converge") {}
};

// ---------------------------------------------------------------------------
// Synthetic non-manifold composition

struct ComposedField {
    std::shared_ptr<AnalyticField> field;
    std::vector<Vec3> locus;  // dense samples on the pairwise intersection curves
};

struct NoIntersectionError : VoroudfError {
    NoIntersectionError() : VoroudfError("primitive zero sets do not intersect") {}
};

// Min-compose >= 2 primitives and sample the curves where their zero sets
// meet (the ground-truth non-manifold locus).
ComposedField compose_nonmanifold(std::vector<std::shared_ptr<AnalyticPrimitive>> primitives,
                                  int locus_samples = 2000, double locus_tol = 1e-7,
                                  std::uint64_t rng_seed = 1);

}  // namespace voroudf
