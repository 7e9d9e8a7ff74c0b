#include "voroudf/field.hpp"

#include <cmath>
#include <cstring>
#include <fstream>
#include <numbers>
#include <sstream>

namespace voroudf {

namespace {

// Any two unit vectors orthogonal to n.
void tangent_frame(const Vec3& n, Vec3& u, Vec3& v) {
    Vec3 a = std::abs(n[0]) < 0.9 ? Vec3::UnitX() : Vec3::UnitY();
    u = n.cross(a).normalized();
    v = n.cross(u);
}

UdfSample make_sample(const Vec3& p, double d, const Vec3& dir) {
    UdfSample s;
    s.point = p;
    s.value = d;
    if (d > kDegenerateEps && dir.norm() > 0) {
        s.gradient = dir.normalized();
    } else {
        s.gradient_valid = false;
    }
    return s;
}

}  // namespace

// ---------------------------------------------------------------------------
// PlaneField

PlaneField::PlaneField(const Vec3& point, const Vec3& normal, double patch_half_extent)
    : point_(point), normal_(normal.normalized()), half_extent_(patch_half_extent) {
    tangent_frame(normal_, u_, v_);
}

UdfSample PlaneField::eval(const Vec3& p) const {
    double signed_d = normal_.dot(p - point_);
    return make_sample(p, std::abs(signed_d), signed_d >= 0 ? normal_ : Vec3(-normal_));
}

BBox PlaneField::domain() const {
    BBox box;
    for (int su : {-1, 1})
        for (int sv : {-1, 1})
            box.expand(point_ + half_extent_ * (su * u_ + sv * v_));
    box.lo -= Vec3::Constant(0.05);
    box.hi += Vec3::Constant(0.05);
    return box;
}

Vec3 PlaneField::sample_zero_set(Rng& rng) const {
    std::uniform_real_distribution<double> uni(-half_extent_, half_extent_);
    return point_ + uni(rng) * u_ + uni(rng) * v_;
}

std::string PlaneField::describe() const {
    std::ostringstream os;
    os << "plane(point=[" << point_.transpose() << "], normal=[" << normal_.transpose() << "])";
    return os.str();
}

// ---------------------------------------------------------------------------
// DiskField

DiskField::DiskField(const Vec3& center, const Vec3& normal, double radius)
    : center_(center), normal_(normal.normalized()), radius_(radius) {
    tangent_frame(normal_, u_, v_);
}

UdfSample DiskField::eval(const Vec3& p) const {
    Vec3 rel = p - center_;
    double h = normal_.dot(rel);
    Vec3 in_plane = rel - h * normal_;
    double r = in_plane.norm();
    Vec3 closest = center_;
    if (r > radius_) {
        closest += (radius_ / r) * in_plane;  // rim
    } else {
        closest += in_plane;  // foot point inside the disk
    }
    double d = (p - closest).norm();
    return make_sample(p, d, p - closest);
}

BBox DiskField::domain() const {
    BBox box;
    for (int su : {-1, 1})
        for (int sv : {-1, 1})
            box.expand(center_ + radius_ * (su * u_ + sv * v_));
    box.lo -= Vec3::Constant(0.05);
    box.hi += Vec3::Constant(0.05);
    return box;
}

Vec3 DiskField::sample_zero_set(Rng& rng) const {
    std::uniform_real_distribution<double> uni(0.0, 1.0);
    double r = radius_ * std::sqrt(uni(rng));
    double a = 2.0 * std::numbers::pi * uni(rng);
    return center_ + r * (std::cos(a) * u_ + std::sin(a) * v_);
}

std::string DiskField::describe() const {
    std::ostringstream os;
    os << "disk(center=[" << center_.transpose() << "], normal=[" << normal_.transpose()
       << "], radius=" << radius_ << ")";
    return os.str();
}

// ---------------------------------------------------------------------------
// SphereField

SphereField::SphereField(const Vec3& center, double radius) : center_(center), radius_(radius) {}

UdfSample SphereField::eval(const Vec3& p) const {
    Vec3 rel = p - center_;
    double r = rel.norm();
    double signed_d = r - radius_;
    Vec3 dir;
    if (r > kDegenerateEps) {
        dir = signed_d >= 0 ? Vec3(rel / r) : Vec3(-rel / r);
    } else {
        dir = Vec3::Zero();  // center: any direction; flagged degenerate only if on surface
        if (std::abs(signed_d) > kDegenerateEps) dir = Vec3::UnitX();
    }
    return make_sample(p, std::abs(signed_d), dir);
}

BBox SphereField::domain() const {
    BBox box;
    box.expand(center_ - Vec3::Constant(radius_ + 0.05));
    box.expand(center_ + Vec3::Constant(radius_ + 0.05));
    return box;
}

Vec3 SphereField::sample_zero_set(Rng& rng) const {
    std::normal_distribution<double> gauss;
    Vec3 dir(gauss(rng), gauss(rng), gauss(rng));
    while (dir.norm() < 1e-12) dir = Vec3(gauss(rng), gauss(rng), gauss(rng));
    return center_ + radius_ * dir.normalized();
}

std::string SphereField::describe() const {
    std::ostringstream os;
    os << "sphere(center=[" << center_.transpose() << "], radius=" << radius_ << ")";
    return os.str();
}

// ---------------------------------------------------------------------------
// BoxShellField

BoxShellField::BoxShellField(const Vec3& center, const Vec3& half_extents)
    : center_(center), half_(half_extents) {}

UdfSample BoxShellField::eval(const Vec3& p) const {
    Vec3 q = p - center_;
    Vec3 aq = q.cwiseAbs() - half_;
    double d;
    Vec3 grad = Vec3::Zero();
    if ((aq.array() <= 0).all()) {
        // inside: distance to the nearest face; UDF grows toward the center
        int axis = 0;
        aq.maxCoeff(&axis);
        d = -aq[axis];
        grad[axis] = q[axis] >= 0 ? -1.0 : 1.0;
    } else {
        Vec3 outside = aq.cwiseMax(0.0);
        d = outside.norm();
        for (int a = 0; a < 3; ++a)
            if (aq[a] > 0) grad[a] = (q[a] >= 0 ? 1.0 : -1.0) * outside[a];
    }
    return make_sample(p, d, grad);
}

BBox BoxShellField::domain() const {
    BBox box;
    box.expand(center_ - half_ - Vec3::Constant(0.05));
    box.expand(center_ + half_ + Vec3::Constant(0.05));
    return box;
}

Vec3 BoxShellField::sample_zero_set(Rng& rng) const {
    // pick a face proportionally to area
    Vec3 areas(half_[1] * half_[2], half_[0] * half_[2], half_[0] * half_[1]);
    double total = 2.0 * areas.sum();
    std::uniform_real_distribution<double> uni(0.0, 1.0);
    double pick = uni(rng) * total;
    int axis = 0;
    double sign = 1.0;
    for (int a = 0; a < 3; ++a) {
        for (double s : {-1.0, 1.0}) {
            pick -= areas[a];
            if (pick <= 0) {
                axis = a;
                sign = s;
                goto chosen;
            }
        }
    }
chosen:
    Vec3 p = center_;
    p[axis] += sign * half_[axis];
    int a1 = (axis + 1) % 3, a2 = (axis + 2) % 3;
    p[a1] += (2.0 * uni(rng) - 1.0) * half_[a1];
    p[a2] += (2.0 * uni(rng) - 1.0) * half_[a2];
    return p;
}

std::string BoxShellField::describe() const {
    std::ostringstream os;
    os << "box(center=[" << center_.transpose() << "], half=[" << half_.transpose() << "])";
    return os.str();
}

// ---------------------------------------------------------------------------
// AnalyticField

AnalyticField::AnalyticField(std::vector<std::shared_ptr<AnalyticPrimitive>> children)
    : children_(std::move(children)) {}

void AnalyticField::add(std::shared_ptr<AnalyticPrimitive> child) {
    children_.push_back(std::move(child));
}

UdfSample AnalyticField::eval(const Vec3& p) const {
    UdfSample best;
    best.value = std::numeric_limits<double>::infinity();
    for (const auto& child : children_) {
        UdfSample s = child->eval(p);
        if (s.value < best.value) best = s;
    }
    return best;
}

BBox AnalyticField::domain() const {
    BBox box;
    for (const auto& child : children_) {
        BBox b = child->domain();
        box.expand(b.lo);
        box.expand(b.hi);
    }
    return box;
}

// ---------------------------------------------------------------------------
// MeshField

MeshField::MeshField(TriangleMesh mesh) : mesh_(std::move(mesh)), bvh_(mesh_) {
    if (mesh_.empty()) throw EmptyMeshError{};
    box_ = bounding_box(mesh_);
    Vec3 pad = Vec3::Constant(0.05 * std::max(box_.diagonal(), 1e-12));
    box_.lo -= pad;
    box_.hi += pad;
}

UdfSample MeshField::eval(const Vec3& p) const {
    ClosestHit hit = bvh_.closest(p);
    return make_sample(p, hit.distance, p - hit.point);
}

BBox MeshField::domain() const { return box_; }

// ---------------------------------------------------------------------------
// GridField

GridField::GridField(Eigen::Vector3i dims, Vec3 origin, double spacing, std::vector<float> values)
    : dims_(dims), origin_(origin), spacing_(spacing), values_(std::move(values)) {
    if ((dims_.array() < 2).any())
        throw VoroudfError("grid needs at least 2 nodes per axis");
    if (values_.size() != static_cast<std::size_t>(dims_[0]) * dims_[1] * dims_[2])
        throw VoroudfError("grid value count does not match dimensions");
}

UdfSample GridField::eval(const Vec3& p) const {
    UdfSample s;
    s.point = p;
    Vec3 local = (p - origin_) / spacing_;
    bool clamped = false;
    Eigen::Vector3i base;
    Vec3 t;
    for (int a = 0; a < 3; ++a) {
        double l = local[a];
        if (l < 0.0) {
            l = 0.0;
            clamped = true;
        }
        if (l > dims_[a] - 1.0) {
            l = dims_[a] - 1.0;
            clamped = true;
        }
        int i = std::min(static_cast<int>(l), dims_[a] - 2);
        base[a] = i;
        t[a] = l - i;
    }
    auto c = [&](int di, int dj, int dk) {
        return static_cast<double>(value_at_node(base[0] + di, base[1] + dj, base[2] + dk));
    };
    double c00 = c(0, 0, 0) * (1 - t[0]) + c(1, 0, 0) * t[0];
    double c10 = c(0, 1, 0) * (1 - t[0]) + c(1, 1, 0) * t[0];
    double c01 = c(0, 0, 1) * (1 - t[0]) + c(1, 0, 1) * t[0];
    double c11 = c(0, 1, 1) * (1 - t[0]) + c(1, 1, 1) * t[0];
    double c0 = c00 * (1 - t[1]) + c10 * t[1];
    double c1 = c01 * (1 - t[1]) + c11 * t[1];
    s.value = std::max(c0 * (1 - t[2]) + c1 * t[2], 0.0);

    // analytic gradient of the trilinear interpolant
    Vec3 g;
    g[0] = ((c(1, 0, 0) - c(0, 0, 0)) * (1 - t[1]) + (c(1, 1, 0) - c(0, 1, 0)) * t[1]) *
               (1 - t[2]) +
           ((c(1, 0, 1) - c(0, 0, 1)) * (1 - t[1]) + (c(1, 1, 1) - c(0, 1, 1)) * t[1]) * t[2];
    g[1] = (c10 - c00) * (1 - t[2]) + (c11 - c01) * t[2];
    g[2] = c1 - c0;
    g /= spacing_;
    if (s.value > kDegenerateEps && g.norm() > 1e-12) {
        s.gradient = g.normalized();
    } else {
        s.gradient_valid = false;
    }
    s.out_of_domain = clamped;
    if (clamped) {
        // the interpolant only knows the clamped boundary point; extend the
        // distance estimate so queries far outside the grid still descend in
        // one step instead of inching toward the domain
        Vec3 q = origin_ + spacing_ * (base.cast<double>() + t);
        Vec3 surface_estimate = s.gradient_valid ? Vec3(q - s.value * s.gradient) : q;
        Vec3 to_p = p - surface_estimate;
        double dist = to_p.norm();
        if (dist > kDegenerateEps) {
            s.value = dist;
            s.gradient = to_p / dist;
            s.gradient_valid = true;
        } else {
            s.value += (p - q).norm();
        }
    }
    return s;
}

BBox GridField::domain() const {
    BBox box;
    box.expand(origin_);
    box.expand(origin_ + spacing_ * (dims_.cast<double>() - Vec3::Ones()));
    return box;
}

GridField GridField::load(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw VoroudfError(path + ": cannot open file");
    char magic[4];
    in.read(magic, 4);
    if (std::memcmp(magic, "UDFG", 4) != 0) throw VoroudfError(path + ": bad magic");
    std::uint32_t n[3];
    in.read(reinterpret_cast<char*>(n), 12);
    double origin[3], spacing;
    in.read(reinterpret_cast<char*>(origin), 24);
    in.read(reinterpret_cast<char*>(&spacing), 8);
    std::size_t count = static_cast<std::size_t>(n[0]) * n[1] * n[2];
    std::vector<float> values(count);
    in.read(reinterpret_cast<char*>(values.data()), static_cast<std::streamsize>(count * 4));
    if (!in) throw VoroudfError(path + ": truncated grid data");
    return GridField({static_cast<int>(n[0]), static_cast<int>(n[1]), static_cast<int>(n[2])},
                     Vec3(origin[0], origin[1], origin[2]), spacing, std::move(values));
}

void GridField::save(const std::string& path) const {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw VoroudfError(path + ": cannot open file for writing");
    out.write("UDFG", 4);
    std::uint32_t n[3] = {static_cast<std::uint32_t>(dims_[0]),
                          static_cast<std::uint32_t>(dims_[1]),
                          static_cast<std::uint32_t>(dims_[2])};
    out.write(reinterpret_cast<const char*>(n), 12);
    double head[4] = {origin_[0], origin_[1], origin_[2], spacing_};
    out.write(reinterpret_cast<const char*>(head), 32);
    out.write(reinterpret_cast<const char*>(values_.data()),
              static_cast<std::streamsize>(values_.size() * 4));
}

GridField GridField::from_field(const UdfField& field, int resolution) {
    BBox box = field.domain();
    double spacing = box.extent().maxCoeff() / (resolution - 1);
    Eigen::Vector3i dims;
    for (int a = 0; a < 3; ++a)
        dims[a] = std::max(2, static_cast<int>(std::ceil(box.extent()[a] / spacing)) + 1);
    std::vector<float> values(static_cast<std::size_t>(dims[0]) * dims[1] * dims[2]);
    std::size_t idx = 0;
    for (int k = 0; k < dims[2]; ++k)
        for (int j = 0; j < dims[1]; ++j)
            for (int i = 0; i < dims[0]; ++i)
                values[idx++] = static_cast<float>(
                    field.eval(box.lo + spacing * Vec3(i, j, k)).value);
    return GridField(dims, box.lo, spacing, std::move(values));
}

// ---------------------------------------------------------------------------
// Projection

ProjectionResult project_to_surface(const UdfField& field, const Vec3& p, int max_steps,
                                    double tol) {
    ProjectionResult res;
    res.point = p;
    std::vector<double> residuals;
    for (int step = 0; step < max_steps; ++step) {
        UdfSample s = field.eval(res.point);
        res.residual = s.value;
        if (s.value < tol) {
            res.converged = true;
            res.steps = step;
            return res;
        }
        if (!s.gradient_valid) break;  // cannot descend further
        res.normal = s.gradient;
        res.normal_valid = true;
        res.point -= s.value * s.gradient;
        residuals.push_back(s.value);
        res.steps = step + 1;
    }
    UdfSample s = field.eval(res.point);
    res.residual = s.value;
    res.converged = s.value < tol;
    if (!res.converged) {
        // Stalled only when the residual also stopped shrinking over the tail.
        residuals.push_back(res.residual);
        std::size_t n = residuals.size();
        bool decreasing = n >= 3 && residuals[n - 1] < residuals[n - 2] &&
                          residuals[n - 2] < residuals[n - 3];
        res.stalled = !decreasing;
    }
    return res;
}

// ---------------------------------------------------------------------------
// Non-manifold composition

ComposedField compose_nonmanifold(std::vector<std::shared_ptr<AnalyticPrimitive>> primitives,
                                  int locus_samples, double locus_tol, std::uint64_t rng_seed) {
    if (primitives.size() < 2)
        throw VoroudfError("compose_nonmanifold needs at least 2 primitives");
    ComposedField out;
    out.field = std::make_shared<AnalyticField>(primitives);
    Rng rng(rng_seed);

    const int n = static_cast<int>(primitives.size());
    const int per_pair = std::max(locus_samples / std::max(1, n * (n - 1) / 2), 64);
    for (int i = 0; i < n; ++i) {
        for (int j = i + 1; j < n; ++j) {
            int found = 0;
            for (int trial = 0; trial < 40 * per_pair && found < per_pair; ++trial) {
                Vec3 x = primitives[i]->sample_zero_set(rng);
                // Alternating projection onto both zero sets converges onto the
                // intersection curve when the sets meet transversally.
                bool ok = true;
                for (int it = 0; it < 60; ++it) {
                    UdfSample si = primitives[i]->eval(x);
                    if (si.gradient_valid) x -= si.value * si.gradient;
                    UdfSample sj = primitives[j]->eval(x);
                    if (sj.gradient_valid) x -= sj.value * sj.gradient;
                    if (primitives[i]->eval(x).value < locus_tol &&
                        primitives[j]->eval(x).value < locus_tol)
                        break;
                    if (it == 59) ok = false;
                }
                if (ok && primitives[i]->eval(x).value < locus_tol &&
                    primitives[j]->eval(x).value < locus_tol) {
                    out.locus.push_back(x);
                    ++found;
                }
            }
        }
    }
    if (out.locus.empty()) throw NoIntersectionError{};
    return out;
}

}  // namespace voroudf
