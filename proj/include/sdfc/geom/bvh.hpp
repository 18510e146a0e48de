#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numeric>
#include <vector>

#include "sdfc/geom/trimesh.hpp"
#include "sdfc/geom/vec3.hpp"

namespace sdfc::geom {

inline Vec3 closest_point_on_segment(const Vec3& p, const Vec3& a, const Vec3& b) {
    Vec3 ab = b - a;
    double denom = dot(ab, ab);
    if (denom <= 0.0) return a;
    double t = std::clamp(dot(p - a, ab) / denom, 0.0, 1.0);
    return a + t * ab;
}

// Voronoi-region walk (Ericson, Real-Time Collision Detection 5.1.5).
inline Vec3 closest_point_on_triangle(const Vec3& p, const Vec3& a, const Vec3& b, const Vec3& c) {
    Vec3 ab = b - a, ac = c - a, ap = p - a;
    double d1 = dot(ab, ap), d2 = dot(ac, ap);
    if (d1 <= 0.0 && d2 <= 0.0) return a;

    Vec3 bp = p - b;
    double d3 = dot(ab, bp), d4 = dot(ac, bp);
    if (d3 >= 0.0 && d4 <= d3) return b;

    double vc = d1 * d4 - d3 * d2;
    if (vc <= 0.0 && d1 >= 0.0 && d3 <= 0.0) return a + (d1 / (d1 - d3)) * ab;

    Vec3 cp = p - c;
    double d5 = dot(ab, cp), d6 = dot(ac, cp);
    if (d6 >= 0.0 && d5 <= d6) return c;

    double vb = d5 * d2 - d1 * d6;
    if (vb <= 0.0 && d2 >= 0.0 && d6 <= 0.0) return a + (d2 / (d2 - d6)) * ac;

    double va = d3 * d6 - d5 * d4;
    if (va <= 0.0 && (d4 - d3) >= 0.0 && (d5 - d6) >= 0.0)
        return b + ((d4 - d3) / ((d4 - d3) + (d5 - d6))) * (c - b);

    double sum = va + vb + vc;
    if (!(sum > 0.0)) {
        // sliver triangle: interior region collapsed, fall back to edges
        Vec3 q1 = closest_point_on_segment(p, a, b);
        Vec3 q2 = closest_point_on_segment(p, b, c);
        Vec3 q3 = closest_point_on_segment(p, c, a);
        double s1 = norm_sq(p - q1), s2 = norm_sq(p - q2), s3 = norm_sq(p - q3);
        if (s1 <= s2 && s1 <= s3) return q1;
        return s2 <= s3 ? q2 : q3;
    }
    double v = vb / sum, w = vc / sum;
    return a + v * ab + w * ac;
}

inline double point_triangle_dist_sq(const Vec3& p, const Vec3& a, const Vec3& b, const Vec3& c) {
    return norm_sq(p - closest_point_on_triangle(p, a, b, c));
}

// Ray-triangle crossing for parity tests. `hit` means a transversal crossing
// with t > 0; `grazing` flags hits or near-hits too close to an edge, a
// vertex, the ray origin, or a parallel plane for the parity to be trusted.
struct RayHit {
    bool hit = false;
    bool grazing = false;
};

inline RayHit ray_triangle_crossing(const Vec3& origin, const Vec3& dir, const Vec3& a,
                                    const Vec3& b, const Vec3& c) {
    constexpr double kBaryEps = 1e-10;
    constexpr double kTEps = 1e-12;
    RayHit r;
    Vec3 e1 = b - a, e2 = c - a;
    Vec3 pvec = cross(dir, e2);
    double det = dot(e1, pvec);
    double scale = norm(e1) * norm(e2);
    if (std::fabs(det) <= 1e-14 * scale) {
        // parallel; only a concern when the origin sits in the plane
        Vec3 n = cross(e1, e2);
        double nn = norm(n);
        if (nn > 0.0 && std::fabs(dot(n, origin - a)) / nn < 1e-9) r.grazing = true;
        return r;
    }
    double inv_det = 1.0 / det;
    Vec3 tvec = origin - a;
    double u = dot(tvec, pvec) * inv_det;
    Vec3 qvec = cross(tvec, e1);
    double v = dot(dir, qvec) * inv_det;
    double w = 1.0 - u - v;
    double t = dot(e2, qvec) * inv_det;

    bool inside_loose = u > -kBaryEps && v > -kBaryEps && w > -kBaryEps;
    if (!inside_loose) return r;
    bool near_border = u < kBaryEps || v < kBaryEps || w < kBaryEps;
    if (t <= kTEps) {
        if (t > -kTEps) r.grazing = true;  // origin on the surface
        return r;
    }
    if (near_border) {
        r.grazing = true;
        return r;
    }
    r.hit = true;
    return r;
}

// Median-split AABB tree over mesh triangles. Supports nearest-triangle
// queries and ray-crossing counts for inside/outside parity.
class TriBvh {
public:
    struct Nearest {
        double dist_sq = std::numeric_limits<double>::infinity();
        std::uint32_t triangle = 0;
        Vec3 point;
    };

    struct Crossings {
        int count = 0;
        bool reliable = true;
    };

    explicit TriBvh(const TriMesh& mesh) {
        mesh.validate();
        std::size_t n = mesh.triangle_count();
        tris_.resize(n);
        std::vector<Box3> boxes(n);
        std::vector<Vec3> centroids(n);
        for (std::size_t t = 0; t < n; ++t) {
            const Tri& tr = mesh.triangles[t];
            tris_[t] = {mesh.vertices[tr[0]], mesh.vertices[tr[1]], mesh.vertices[tr[2]]};
            Box3 b;
            b.extend(tris_[t].a);
            b.extend(tris_[t].b);
            b.extend(tris_[t].c);
            boxes[t] = b;
            centroids[t] = (tris_[t].a + tris_[t].b + tris_[t].c) / 3.0;
        }
        order_.resize(n);
        std::iota(order_.begin(), order_.end(), 0u);
        nodes_.reserve(2 * n);
        build(0, n, boxes, centroids);
    }

    Nearest nearest(const Vec3& p) const {
        Nearest best;
        nearest_rec(0, p, best);
        return best;
    }

    double distance(const Vec3& p) const { return std::sqrt(nearest(p).dist_sq); }

    Crossings count_crossings(const Vec3& origin, const Vec3& dir) const {
        Crossings cr;
        crossings_rec(0, origin, dir, cr);
        return cr;
    }

    std::size_t triangle_count() const { return tris_.size(); }

private:
    struct TriVerts {
        Vec3 a, b, c;
    };
    struct Node {
        Box3 box;
        std::int32_t left = -1, right = -1;  // internal when left >= 0
        std::uint32_t first = 0, count = 0;  // leaf range into order_
    };

    static constexpr std::uint32_t kLeafSize = 4;

    std::vector<TriVerts> tris_;
    std::vector<std::uint32_t> order_;
    std::vector<Node> nodes_;

    std::int32_t build(std::size_t first, std::size_t count, const std::vector<Box3>& boxes,
                       const std::vector<Vec3>& centroids) {
        std::int32_t id = static_cast<std::int32_t>(nodes_.size());
        nodes_.emplace_back();
        Box3 box, cbox;
        for (std::size_t i = first; i < first + count; ++i) {
            box.extend(boxes[order_[i]]);
            cbox.extend(centroids[order_[i]]);
        }
        nodes_[static_cast<std::size_t>(id)].box = box;
        if (count <= kLeafSize) {
            nodes_[static_cast<std::size_t>(id)].first = static_cast<std::uint32_t>(first);
            nodes_[static_cast<std::size_t>(id)].count = static_cast<std::uint32_t>(count);
            return id;
        }
        Vec3 ext = cbox.extents();
        int axis = 0;
        if (ext.y > ext.x) axis = 1;
        if (ext.z > ext[axis]) axis = 2;
        std::size_t mid = first + count / 2;
        std::nth_element(order_.begin() + static_cast<std::ptrdiff_t>(first),
                         order_.begin() + static_cast<std::ptrdiff_t>(mid),
                         order_.begin() + static_cast<std::ptrdiff_t>(first + count),
                         [&](std::uint32_t x, std::uint32_t y) {
                             double cx = centroids[x][axis], cy = centroids[y][axis];
                             return cx < cy || (cx == cy && x < y);
                         });
        std::int32_t l = build(first, mid - first, boxes, centroids);
        std::int32_t r = build(mid, first + count - mid, boxes, centroids);
        nodes_[static_cast<std::size_t>(id)].left = l;
        nodes_[static_cast<std::size_t>(id)].right = r;
        return id;
    }

    void nearest_rec(std::int32_t id, const Vec3& p, Nearest& best) const {
        const Node& n = nodes_[static_cast<std::size_t>(id)];
        if (n.box.dist_sq(p) >= best.dist_sq) return;
        if (n.left < 0) {
            for (std::uint32_t i = n.first; i < n.first + n.count; ++i) {
                std::uint32_t t = order_[i];
                Vec3 q = closest_point_on_triangle(p, tris_[t].a, tris_[t].b, tris_[t].c);
                double d = norm_sq(p - q);
                if (d < best.dist_sq) {
                    best.dist_sq = d;
                    best.triangle = t;
                    best.point = q;
                }
            }
            return;
        }
        double dl = nodes_[static_cast<std::size_t>(n.left)].box.dist_sq(p);
        double dr = nodes_[static_cast<std::size_t>(n.right)].box.dist_sq(p);
        std::int32_t a = n.left, b = n.right;
        if (dr < dl) std::swap(a, b);
        nearest_rec(a, p, best);
        nearest_rec(b, p, best);
    }

    static bool ray_hits_box(const Box3& box, const Vec3& o, const Vec3& d) {
        double tmin = 0.0, tmax = std::numeric_limits<double>::infinity();
        for (int i = 0; i < 3; ++i) {
            if (d[i] == 0.0) {
                if (o[i] < box.lo[i] || o[i] > box.hi[i]) return false;
                continue;
            }
            double inv = 1.0 / d[i];
            double t0 = (box.lo[i] - o[i]) * inv;
            double t1 = (box.hi[i] - o[i]) * inv;
            if (t0 > t1) std::swap(t0, t1);
            tmin = std::max(tmin, t0);
            tmax = std::min(tmax, t1);
            if (tmin > tmax) return false;
        }
        return true;
    }

    void crossings_rec(std::int32_t id, const Vec3& o, const Vec3& d, Crossings& cr) const {
        const Node& n = nodes_[static_cast<std::size_t>(id)];
        if (!ray_hits_box(n.box, o, d)) return;
        if (n.left < 0) {
            for (std::uint32_t i = n.first; i < n.first + n.count; ++i) {
                std::uint32_t t = order_[i];
                RayHit h = ray_triangle_crossing(o, d, tris_[t].a, tris_[t].b, tris_[t].c);
                if (h.grazing) cr.reliable = false;
                if (h.hit) ++cr.count;
            }
            return;
        }
        crossings_rec(n.left, o, d, cr);
        crossings_rec(n.right, o, d, cr);
    }
};

}  // namespace sdfc::geom
