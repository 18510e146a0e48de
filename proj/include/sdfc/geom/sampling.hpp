#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <numeric>
#include <vector>

#include "sdfc/error.hpp"
#include "sdfc/geom/point_cloud.hpp"
#include "sdfc/geom/trimesh.hpp"
#include "sdfc/rng.hpp"

namespace sdfc::geom {

// Uniform over the volume of the closed unit ball.
inline PointCloud sample_uniform_ball(std::size_t count, Rng& rng) {
    if (count < 1) throw InvalidInput("sample_uniform_ball: count must be >= 1");
    PointCloud out;
    out.points.reserve(count);
    for (std::size_t i = 0; i < count; ++i) {
        auto [x, y, z] = rng.in_unit_ball();
        out.points.push_back({x, y, z});
    }
    return out;
}

// Area-weighted face selection, uniform within each face; per-point normal is
// the face normal of the sampled face.
inline PointCloud sample_surface(const TriMesh& mesh, std::size_t count, Rng& rng) {
    if (count < 1) throw InvalidInput("sample_surface: count must be >= 1");
    mesh.validate();
    std::size_t nf = mesh.triangle_count();
    std::vector<double> cum(nf);
    double total = 0.0;
    for (std::size_t t = 0; t < nf; ++t) {
        total += 0.5 * norm(mesh.triangle_normal(t));
        cum[t] = total;
    }
    if (!(total > 0.0)) throw InvalidMesh("sample_surface: mesh has zero area");

    PointCloud out;
    out.points.reserve(count);
    out.normals.reserve(count);
    for (std::size_t i = 0; i < count; ++i) {
        double r = rng.uniform01() * total;
        std::size_t t = static_cast<std::size_t>(
            std::lower_bound(cum.begin(), cum.end(), r) - cum.begin());
        if (t >= nf) t = nf - 1;
        const Tri& tri = mesh.triangles[t];
        const Vec3 &a = mesh.vertices[tri[0]], &b = mesh.vertices[tri[1]],
                   &c = mesh.vertices[tri[2]];
        // sqrt trick: uniform over the triangle
        double su = std::sqrt(rng.uniform01());
        double v = rng.uniform01();
        Vec3 p = (1.0 - su) * a + (su * (1.0 - v)) * b + (su * v) * c;
        out.points.push_back(p);
        out.normals.push_back(normalized(mesh.triangle_normal(t)));
    }
    return out;
}

// Keep exactly ceil(ratio*n) points with the smallest projection onto w,
// ties broken by point index; output preserves input order.
inline PointCloud half_space_cut_along(const PointCloud& cloud, double retain_ratio,
                                       const Vec3& w) {
    if (cloud.empty()) throw InvalidInput("half_space_cut: empty cloud");
    if (!(retain_ratio > 0.0) || retain_ratio > 1.0)
        throw InvalidRatio("half_space_cut: retain_ratio must be in (0,1]");
    std::size_t n = cloud.size();
    std::size_t k = static_cast<std::size_t>(
        std::ceil(retain_ratio * static_cast<double>(n)));
    k = std::min(std::max<std::size_t>(k, 1), n);

    std::vector<double> proj(n);
    for (std::size_t i = 0; i < n; ++i) proj[i] = dot(cloud.points[i], w);
    std::vector<std::size_t> idx(n);
    std::iota(idx.begin(), idx.end(), std::size_t{0});
    std::sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) {
        return proj[a] < proj[b] || (proj[a] == proj[b] && a < b);
    });
    idx.resize(k);
    std::sort(idx.begin(), idx.end());

    PointCloud out;
    out.points.reserve(k);
    if (cloud.has_normals()) out.normals.reserve(k);
    for (std::size_t i : idx) {
        out.points.push_back(cloud.points[i]);
        if (cloud.has_normals()) out.normals.push_back(cloud.normals[i]);
    }
    return out;
}

inline PointCloud half_space_cut(const PointCloud& cloud, double retain_ratio, Rng& rng) {
    if (cloud.empty()) throw InvalidInput("half_space_cut: empty cloud");
    if (!(retain_ratio > 0.0) || retain_ratio > 1.0)
        throw InvalidRatio("half_space_cut: retain_ratio must be in (0,1]");
    auto [x, y, z] = rng.unit_vector();
    return half_space_cut_along(cloud, retain_ratio, {x, y, z});
}

// First k points of a deterministic shuffle; used to thin clouds to stage sizes.
inline PointCloud subsample(const PointCloud& cloud, std::size_t k, Rng& rng) {
    if (cloud.empty()) throw InvalidInput("subsample: empty cloud");
    if (k == 0) throw InvalidInput("subsample: k must be >= 1");
    std::size_t n = cloud.size();
    if (k >= n) return cloud;
    std::vector<std::size_t> idx = rng.sample_without_replacement(n, k);
    PointCloud out;
    out.points.reserve(k);
    if (cloud.has_normals()) out.normals.reserve(k);
    for (std::size_t i : idx) {
        out.points.push_back(cloud.points[i]);
        if (cloud.has_normals()) out.normals.push_back(cloud.normals[i]);
    }
    return out;
}

}  // namespace sdfc::geom
