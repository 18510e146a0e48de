#pragma once

#include <cmath>
#include <cstddef>
#include <vector>

#include "sdfc/error.hpp"
#include "sdfc/geom/vec3.hpp"

namespace sdfc::geom {

// n x 3 point set with optional per-point unit normals.
struct PointCloud {
    std::vector<Vec3> points;
    std::vector<Vec3> normals;  // empty, or one unit normal per point

    std::size_t size() const { return points.size(); }
    bool empty() const { return points.empty(); }
    bool has_normals() const { return !normals.empty(); }

    void validate(double normal_tol = 1e-6) const {
        if (!normals.empty()) {
            if (normals.size() != points.size())
                throw InvalidInput("point cloud: normals do not match points 1:1");
            for (const Vec3& n : normals) {
                if (std::fabs(norm(n) - 1.0) > normal_tol)
                    throw InvalidInput("point cloud: non-unit normal");
            }
        }
    }
};

}  // namespace sdfc::geom
