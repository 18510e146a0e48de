#pragma once

#include <cstddef>
#include <limits>
#include <span>
#include <vector>

#include "sdfc/error.hpp"
#include "sdfc/geom/vec3.hpp"

namespace sdfc::net {

// Greedy max-min selection. Deterministic: ties go to the smallest index.
inline std::vector<std::size_t> farthest_point_sample(std::span<const geom::Vec3> points,
                                                      std::size_t count, std::size_t start = 0) {
    const std::size_t n = points.size();
    if (count > n) throw InvalidInput("farthest_point_sample: count exceeds point count");
    if (start >= n) throw InvalidInput("farthest_point_sample: start index out of range");
    std::vector<std::size_t> picked;
    if (count == 0) return picked;
    picked.reserve(count);
    picked.push_back(start);
    std::vector<bool> selected(n, false);
    selected[start] = true;
    std::vector<double> dist(n, std::numeric_limits<double>::infinity());
    for (std::size_t k = 1; k < count; ++k) {
        const geom::Vec3& last = points[picked.back()];
        std::size_t best = n;
        double best_d = -1.0;
        for (std::size_t i = 0; i < n; ++i) {
            double d = geom::norm_sq(points[i] - last);
            if (d < dist[i]) dist[i] = d;
            if (!selected[i] && dist[i] > best_d) {
                best_d = dist[i];
                best = i;
            }
        }
        selected[best] = true;
        picked.push_back(best);
    }
    return picked;
}

// Indices within `radius` of the centroid, ascending, capped at max_neighbors.
// A centroid chosen from the cloud always includes itself (distance zero).
inline std::vector<std::size_t> ball_query(std::span<const geom::Vec3> points,
                                           const geom::Vec3& centroid, double radius,
                                           std::size_t max_neighbors) {
    std::vector<std::size_t> idx;
    const double r2 = radius * radius;
    for (std::size_t i = 0; i < points.size() && idx.size() < max_neighbors; ++i)
        if (geom::norm_sq(points[i] - centroid) <= r2) idx.push_back(i);
    return idx;
}

}  // namespace sdfc::net
