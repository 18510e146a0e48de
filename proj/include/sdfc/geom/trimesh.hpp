#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <map>
#include <utility>
#include <vector>

#include "sdfc/error.hpp"
#include "sdfc/geom/vec3.hpp"

namespace sdfc::geom {

struct Tri {
    std::array<std::uint32_t, 3> v;
    std::uint32_t operator[](int i) const { return v[static_cast<std::size_t>(i)]; }
    std::uint32_t& operator[](int i) { return v[static_cast<std::size_t>(i)]; }
};

struct TriMesh {
    std::vector<Vec3> vertices;
    std::vector<Tri> triangles;

    std::size_t vertex_count() const { return vertices.size(); }
    std::size_t triangle_count() const { return triangles.size(); }

    Box3 bounds() const {
        Box3 b;
        for (const Vec3& v : vertices) b.extend(v);
        return b;
    }

    Vec3 triangle_normal(std::size_t t) const {
        const Tri& tri = triangles[t];
        Vec3 e1 = vertices[tri[1]] - vertices[tri[0]];
        Vec3 e2 = vertices[tri[2]] - vertices[tri[0]];
        return cross(e1, e2);  // unnormalized, length = 2*area
    }

    double area() const {
        double a = 0.0;
        for (std::size_t t = 0; t < triangles.size(); ++t) a += 0.5 * norm(triangle_normal(t));
        return a;
    }

    void validate() const {
        if (vertices.empty()) throw InvalidMesh("mesh has no vertices");
        if (triangles.empty()) throw InvalidMesh("mesh has no triangles");
        for (const Tri& t : triangles) {
            for (int i = 0; i < 3; ++i)
                if (t[i] >= vertices.size()) throw InvalidMesh("triangle index out of range");
            if (t[0] == t[1] || t[1] == t[2] || t[0] == t[2])
                throw InvalidMesh("degenerate triangle (repeated vertex index)");
        }
    }
};

// Every undirected edge must be shared by exactly two triangles, traversed in
// opposite directions (consistent winding).
inline bool is_watertight(const TriMesh& mesh) {
    // (a,b) directed edge counts; watertight iff every directed edge appears
    // exactly once and its reverse appears exactly once.
    std::map<std::pair<std::uint32_t, std::uint32_t>, int> count;
    for (const Tri& t : mesh.triangles) {
        for (int i = 0; i < 3; ++i) {
            std::uint32_t a = t[i], b = t[(i + 1) % 3];
            if (++count[{a, b}] > 1) return false;
        }
    }
    for (const auto& [edge, c] : count) {
        auto rev = count.find({edge.second, edge.first});
        if (rev == count.end() || rev->second != 1) return false;
    }
    return true;
}

// Translate so the bounding-box center is at the origin, then scale by the
// largest vertex distance from that center. Returns {center, scale}.
// All vertices end up inside the closed unit ball, at least one on its surface.
inline std::pair<Vec3, double> normalize_to_unit_sphere(TriMesh& mesh) {
    if (mesh.vertices.empty()) throw InvalidMesh("cannot normalize empty mesh");
    Box3 b = mesh.bounds();
    Vec3 c = b.center();
    double scale = 0.0;
    for (const Vec3& v : mesh.vertices) scale = std::max(scale, norm(v - c));
    if (scale <= 0.0) throw InvalidMesh("degenerate mesh: all vertices coincide");
    for (Vec3& v : mesh.vertices) v = (v - c) / scale;
    return {c, scale};
}

}  // namespace sdfc::geom
