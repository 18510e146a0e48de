#pragma once

#include <bit>
#include <cmath>
#include <cstdint>

#include "sdfc/error.hpp"
#include "sdfc/geom/bvh.hpp"
#include "sdfc/geom/trimesh.hpp"
#include "sdfc/rng.hpp"

namespace sdfc::geom {

// Exact unsigned distance via BVH; sign by ray-crossing parity, majority vote
// over the three axis rays. A ray that grazes an edge or vertex is recast
// from a slightly jittered origin (deterministic in the query point) so the
// vote always has three usable parities when the geometry allows it.
class SignedDistanceQuery {
public:
    explicit SignedDistanceQuery(const TriMesh& mesh)
        : bvh_(mesh), watertight_(is_watertight(mesh)) {}

    bool watertight() const { return watertight_; }

    TriBvh::Nearest nearest(const Vec3& p) const { return bvh_.nearest(p); }

    double unsigned_distance(const Vec3& p) const { return std::sqrt(bvh_.nearest(p).dist_sq); }

    bool inside(const Vec3& p) const {
        if (!watertight_) throw SignUndefined("inside/outside requires a watertight mesh");
        constexpr int kMaxAttempts = 8;
        int odd = 0, usable = 0;
        for (int axis = 0; axis < 3; ++axis) {
            Vec3 dir{0, 0, 0};
            dir[axis] = 1.0;
            for (int attempt = 0; attempt < kMaxAttempts; ++attempt) {
                Vec3 origin = p;
                if (attempt > 0) {
                    Rng jitter(jitter_seed(p, axis, attempt));
                    double mag = 1e-7 * static_cast<double>(attempt);
                    origin[(axis + 1) % 3] += jitter.uniform(-mag, mag);
                    origin[(axis + 2) % 3] += jitter.uniform(-mag, mag);
                }
                TriBvh::Crossings cr = bvh_.count_crossings(origin, dir);
                if (cr.reliable) {
                    odd += cr.count & 1;
                    ++usable;
                    break;
                }
            }
        }
        if (usable == 0) throw SignUndefined("all parity rays grazed the mesh");
        return 2 * odd > usable;
    }

    double operator()(const Vec3& p) const {
        double d = unsigned_distance(p);
        return inside(p) ? -d : d;
    }

private:
    TriBvh bvh_;
    bool watertight_;

    static std::uint64_t jitter_seed(const Vec3& p, int axis, int attempt) {
        std::uint64_t s = std::bit_cast<std::uint64_t>(p.x);
        s = splitmix64(s ^ std::bit_cast<std::uint64_t>(p.y));
        s = splitmix64(s ^ std::bit_cast<std::uint64_t>(p.z));
        return derive_seed(s, static_cast<std::uint64_t>(axis),
                           static_cast<std::uint64_t>(attempt));
    }
};

// One-shot convenience; builds the BVH per call, only sensible for few queries.
inline double signed_distance(const TriMesh& mesh, const Vec3& p) {
    return SignedDistanceQuery(mesh)(p);
}

}  // namespace sdfc::geom
