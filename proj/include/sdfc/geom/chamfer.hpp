#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <vector>

#include "sdfc/error.hpp"
#include "sdfc/geom/point_cloud.hpp"
#include "sdfc/geom/vec3.hpp"

namespace sdfc::geom {

// Uniform-grid nearest-neighbor index. Prunes only cells whose closest
// possible point is provably farther than the current best, and evaluates
// candidates with the same squared-distance expression as a brute-force
// scan, so results are bit-identical to the O(n^2) computation.
class PointGrid {
public:
    explicit PointGrid(const std::vector<Vec3>& points) : points_(points) {
        if (points.empty()) throw InvalidInput("PointGrid: empty point set");
        for (const Vec3& p : points) box_.extend(p);
        Vec3 ext = box_.extents();
        double max_ext = std::max({ext.x, ext.y, ext.z});
        double target = std::cbrt(static_cast<double>(points.size()));
        cell_ = max_ext > 0.0 ? max_ext / std::max(1.0, target) : 1.0;
        for (int a = 0; a < 3; ++a) {
            int d = static_cast<int>(std::floor(ext[a] / cell_)) + 1;
            dims_[a] = std::clamp(d, 1, 128);
        }
        std::vector<std::uint32_t> counts(cell_count() + 1, 0);
        std::vector<std::uint32_t> cell_of(points.size());
        for (std::size_t i = 0; i < points.size(); ++i) {
            cell_of[i] = flat_index(cell_coords(points[i]));
            ++counts[cell_of[i] + 1];
        }
        for (std::size_t c = 1; c < counts.size(); ++c) counts[c] += counts[c - 1];
        starts_ = counts;
        order_.resize(points.size());
        std::vector<std::uint32_t> cursor(starts_.begin(), starts_.end() - 1);
        for (std::size_t i = 0; i < points.size(); ++i)
            order_[cursor[cell_of[i]]++] = static_cast<std::uint32_t>(i);
    }

    // squared distance to the nearest stored point
    double nearest_sq(const Vec3& p) const {
        double best = std::numeric_limits<double>::infinity();
        int ci[3];
        for (int a = 0; a < 3; ++a) {
            int c = static_cast<int>(std::floor((p[a] - box_.lo[a]) / cell_));
            ci[a] = std::clamp(c, 0, dims_[a] - 1);
        }
        // distance from p to its clamped center cell; widens the stop bound
        // when p lies outside the grid box
        double d0 = std::sqrt(cell_box_dist_sq(p, ci[0], ci[1], ci[2]));
        int max_ring = 0;
        for (int a = 0; a < 3; ++a)
            max_ring = std::max(max_ring, std::max(ci[a], dims_[a] - 1 - ci[a]));
        for (int r = 0; r <= max_ring; ++r) {
            if (r > 0) {
                double future = std::max(0.0, static_cast<double>(r - 1) * cell_ - d0);
                if (future * future >= best) break;
            }
            scan_ring(p, ci, r, best);
        }
        return best;
    }

private:
    const std::vector<Vec3>& points_;
    Box3 box_;
    double cell_ = 1.0;
    int dims_[3] = {1, 1, 1};
    std::vector<std::uint32_t> starts_;
    std::vector<std::uint32_t> order_;

    std::size_t cell_count() const {
        return static_cast<std::size_t>(dims_[0]) * static_cast<std::size_t>(dims_[1]) *
               static_cast<std::size_t>(dims_[2]);
    }

    struct Coords {
        int x, y, z;
    };

    Coords cell_coords(const Vec3& p) const {
        Coords c;
        c.x = std::clamp(static_cast<int>(std::floor((p.x - box_.lo.x) / cell_)), 0, dims_[0] - 1);
        c.y = std::clamp(static_cast<int>(std::floor((p.y - box_.lo.y) / cell_)), 0, dims_[1] - 1);
        c.z = std::clamp(static_cast<int>(std::floor((p.z - box_.lo.z) / cell_)), 0, dims_[2] - 1);
        return c;
    }

    std::uint32_t flat_index(Coords c) const {
        return static_cast<std::uint32_t>((c.z * dims_[1] + c.y) * dims_[0] + c.x);
    }

    double cell_box_dist_sq(const Vec3& p, int x, int y, int z) const {
        double d = 0.0;
        int c[3] = {x, y, z};
        for (int a = 0; a < 3; ++a) {
            double lo = box_.lo[a] + static_cast<double>(c[a]) * cell_;
            double hi = lo + cell_;
            double v = p[a];
            if (v < lo) d += (lo - v) * (lo - v);
            else if (v > hi) d += (v - hi) * (v - hi);
        }
        return d;
    }

    void scan_cell(const Vec3& p, int x, int y, int z, double& best) const {
        if (cell_box_dist_sq(p, x, y, z) >= best) return;
        std::uint32_t c = flat_index({x, y, z});
        for (std::uint32_t i = starts_[c]; i < starts_[c + 1]; ++i) {
            double d = norm_sq(p - points_[order_[i]]);
            if (d < best) best = d;
        }
    }

    void scan_ring(const Vec3& p, const int ci[3], int r, double& best) const {
        int x0 = ci[0] - r, x1 = ci[0] + r;
        int y0 = ci[1] - r, y1 = ci[1] + r;
        int z0 = ci[2] - r, z1 = ci[2] + r;
        for (int z = std::max(z0, 0); z <= std::min(z1, dims_[2] - 1); ++z) {
            bool z_face = (z == z0 || z == z1);
            for (int y = std::max(y0, 0); y <= std::min(y1, dims_[1] - 1); ++y) {
                bool y_face = (y == y0 || y == y1);
                if (z_face || y_face) {
                    for (int x = std::max(x0, 0); x <= std::min(x1, dims_[0] - 1); ++x)
                        scan_cell(p, x, y, z, best);
                } else {
                    if (x0 >= 0) scan_cell(p, x0, y, z, best);
                    if (x1 < dims_[0] && x1 != x0) scan_cell(p, x1, y, z, best);
                }
            }
        }
    }
};

// Per-point squared distance from each point of `from` to its nearest
// neighbor in `to`, in input order.
inline std::vector<double> nearest_sq_distances(const PointCloud& from, const PointCloud& to) {
    if (from.empty() || to.empty()) throw InvalidInput("nearest neighbors: empty cloud");
    PointGrid grid(to.points);
    std::vector<double> out(from.size());
    for (std::size_t i = 0; i < from.size(); ++i) out[i] = grid.nearest_sq(from.points[i]);
    return out;
}

inline double mean_in_order(const std::vector<double>& v) {
    double s = 0.0;
    for (double x : v) s += x;
    return s / static_cast<double>(v.size());
}

struct ChamferResult {
    double total = 0.0;     // a_to_b + b_to_a
    double a_to_b = 0.0;    // mean over a of squared nearest distance into b
    double b_to_a = 0.0;
};

inline double one_sided_chamfer(const PointCloud& from, const PointCloud& to) {
    return mean_in_order(nearest_sq_distances(from, to));
}

// Symmetric sum of mean squared nearest-neighbor distances.
inline ChamferResult chamfer_distance(const PointCloud& a, const PointCloud& b) {
    ChamferResult r;
    r.a_to_b = one_sided_chamfer(a, b);
    r.b_to_a = one_sided_chamfer(b, a);
    r.total = r.a_to_b + r.b_to_a;
    return r;
}

}  // namespace sdfc::geom
