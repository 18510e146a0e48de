#pragma once

#include <algorithm>
#include <cmath>
#include <string>

#include "sdfc/error.hpp"
#include "sdfc/geom/vec3.hpp"

namespace sdfc::data {

enum class Family { Ellipsoid, Capsule, RoundedBox };

inline const char* family_name(Family f) {
    switch (f) {
        case Family::Ellipsoid: return "ellipsoid";
        case Family::Capsule: return "capsule";
        case Family::RoundedBox: return "roundedbox";
    }
    throw InvalidInput("unknown shape family");
}

inline Family family_from_string(const std::string& s) {
    if (s == "ellipsoid") return Family::Ellipsoid;
    if (s == "capsule") return Family::Capsule;
    if (s == "roundedbox") return Family::RoundedBox;
    throw ConfigError("unknown shape family: " + s);
}

struct ToyShapeParams {
    Family family = Family::Ellipsoid;
    geom::Vec3 axes{0.5, 0.5, 0.5};  // ellipsoid semi-axes or box half extents
    double half_len = 0.3;           // capsule half segment length, along z
    double radius = 0.2;             // capsule radius or box rounding
};

// Implicit distance for the toy families. Exact signed distance for capsule,
// rounded box, and spheres (equal-axis ellipsoids); for general ellipsoids a
// first-order normalization of the quadric, exact on the zero level set.
inline double toy_implicit(const ToyShapeParams& s, const geom::Vec3& p) {
    switch (s.family) {
        case Family::Ellipsoid: {
            geom::Vec3 q{p.x / s.axes.x, p.y / s.axes.y, p.z / s.axes.z};
            double k0 = geom::norm(q);
            if (k0 < 1e-12) return -std::min(s.axes.x, std::min(s.axes.y, s.axes.z));
            geom::Vec3 q2{q.x / s.axes.x, q.y / s.axes.y, q.z / s.axes.z};
            return k0 * (k0 - 1.0) / geom::norm(q2);
        }
        case Family::Capsule: {
            geom::Vec3 q = p;
            q.z -= std::clamp(p.z, -s.half_len, s.half_len);
            return geom::norm(q) - s.radius;
        }
        case Family::RoundedBox: {
            geom::Vec3 q{std::fabs(p.x) - s.axes.x, std::fabs(p.y) - s.axes.y,
                         std::fabs(p.z) - s.axes.z};
            geom::Vec3 outer{std::max(q.x, 0.0), std::max(q.y, 0.0), std::max(q.z, 0.0)};
            double inner = std::min(std::max(q.x, std::max(q.y, q.z)), 0.0);
            return geom::norm(outer) + inner - s.radius;
        }
    }
    throw InvalidInput("unknown shape family");
}

}  // namespace sdfc::data
