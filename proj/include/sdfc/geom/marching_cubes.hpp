#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <functional>
#include <unordered_map>
#include <vector>

#include "sdfc/error.hpp"
#include "sdfc/geom/trimesh.hpp"
#include "sdfc/geom/vec3.hpp"

namespace sdfc::geom {

// Scalar field sampled on a regular (res+1)^3 lattice over [lo, hi].
struct GridField {
    int res = 0;  // cells per axis
    Vec3 lo{-1.0, -1.0, -1.0};
    Vec3 hi{1.0, 1.0, 1.0};
    std::vector<double> values;  // (res+1)^3, x fastest

    std::size_t vindex(int i, int j, int k) const {
        std::size_t n = static_cast<std::size_t>(res) + 1;
        return (static_cast<std::size_t>(k) * n + static_cast<std::size_t>(j)) * n +
               static_cast<std::size_t>(i);
    }
    double at(int i, int j, int k) const { return values[vindex(i, j, k)]; }
    double& at(int i, int j, int k) { return values[vindex(i, j, k)]; }

    Vec3 cell_size() const {
        return (hi - lo) / static_cast<double>(res);
    }
    Vec3 position(int i, int j, int k) const {
        Vec3 c = cell_size();
        return {lo.x + c.x * i, lo.y + c.y * j, lo.z + c.z * k};
    }

    template <typename F>
    static GridField from_function(int res, const Vec3& lo, const Vec3& hi, F&& f) {
        GridField g;
        g.res = res;
        g.lo = lo;
        g.hi = hi;
        std::size_t n = static_cast<std::size_t>(res) + 1;
        g.values.resize(n * n * n);
        for (int k = 0; k <= res; ++k)
            for (int j = 0; j <= res; ++j)
                for (int i = 0; i <= res; ++i) g.values[g.vindex(i, j, k)] = f(g.position(i, j, k));
        return g;
    }
};

namespace mc_detail {

// Cube corners are 3-bit codes (bit0 -> +x, bit1 -> +y, bit2 -> +z).
// Cube edges are axis*4 + idx where idx packs the two off-axis bits of the
// lower endpoint.
inline int edge_id(int axis, int lo_corner) {
    int u = (axis + 1) % 3, v = (axis + 2) % 3;
    int idx = ((lo_corner >> u) & 1) | (((lo_corner >> v) & 1) << 1);
    return axis * 4 + idx;
}

inline int edge_id_from_corners(int c0, int c1) {
    int diff = c0 ^ c1;
    int axis = diff == 1 ? 0 : (diff == 2 ? 1 : 2);
    return edge_id(axis, c0 & ~diff);
}

inline void edge_endpoints(int id, int& axis, int& lo_corner) {
    axis = id / 4;
    int idx = id % 4;
    int u = (axis + 1) % 3, v = (axis + 2) % 3;
    lo_corner = ((idx & 1) << u) | (((idx >> 1) & 1) << v);
}

// Corner cycle of each cube face, ordered so the cycle is counterclockwise
// when viewed from outside the cube.
inline std::array<int, 4> face_cycle(int axis, int side) {
    int u = (axis + 1) % 3, v = (axis + 2) % 3;
    int base = side ? (1 << axis) : 0;
    if (side) return {base, base | (1 << u), base | (1 << u) | (1 << v), base | (1 << v)};
    return {base, base | (1 << v), base | (1 << u) | (1 << v), base | (1 << u)};
}

struct Chord {
    int from_e, to_e;  // cube edge ids
};

// Marching squares on one face. Values are recentered so the isovalue is 0
// and are guaranteed nonzero. Chords are directed from the crossing where the
// cycle leaves the negative region to the crossing where it re-enters it,
// which puts the negative side on the left when viewed from outside the cube.
// Both cubes sharing a face see the same values, so the chords agree.
inline void face_chords(const std::array<int, 4>& cyc, const std::array<double, 4>& g,
                        std::vector<Chord>& out) {
    bool neg[4];
    for (int i = 0; i < 4; ++i) neg[i] = g[i] < 0.0;
    // crossing on face edge i connects cycle corners i and i+1
    auto cube_edge = [&](int i) { return edge_id_from_corners(cyc[i], cyc[(i + 1) % 4]); };
    auto leaving = [&](int i) { return neg[i] && !neg[(i + 1) % 4]; };

    int crossed[4], nc = 0;
    for (int i = 0; i < 4; ++i)
        if (neg[i] != neg[(i + 1) % 4]) crossed[nc++] = i;
    if (nc == 0) return;
    if (nc == 2) {
        int a = crossed[0], b = crossed[1];
        if (!leaving(a)) std::swap(a, b);
        out.push_back({cube_edge(a), cube_edge(b)});
        return;
    }
    // nc == 4: alternating signs; pair crossings with the asymptotic decider
    double denom = g[0] + g[2] - g[1] - g[3];
    double saddle = (g[0] * g[2] - g[1] * g[3]) / denom;
    // saddle >= 0: the positive diagonal's region is connected, the two
    // negative corners are isolated; chords wrap the isolated corners
    bool corner0_isolated = (saddle >= 0.0) == neg[0];
    int first = corner0_isolated ? 0 : 1;  // wrap corners `first` and `first+2`
    for (int w = first; w < 4; w += 2) {
        int ea = (w + 3) % 4;  // face edge entering corner w
        int eb = w;            // face edge leaving corner w
        int a = ea, b = eb;
        if (!leaving(a)) std::swap(a, b);
        out.push_back({cube_edge(a), cube_edge(b)});
    }
}

}  // namespace mc_detail

// Constructive marching cubes: per-face marching squares resolved with the
// asymptotic decider, chords linked into closed loops through each cell, loops
// fan-triangulated, vertices welded by grid-edge id. Output triangles are
// oriented so normals point toward increasing field values.
inline TriMesh marching_cubes(const GridField& field, double iso = 0.0) {
    if (field.res < 2) throw InvalidInput("marching_cubes: res must be >= 2");
    std::size_t n = static_cast<std::size_t>(field.res) + 1;
    if (field.values.size() != n * n * n)
        throw InvalidInput("marching_cubes: value count does not match res");
    for (double v : field.values)
        if (!std::isfinite(v)) throw InvalidInput("marching_cubes: field must be finite");

    const int R = field.res;
    // recentred copy; values within 1e-12 of the isovalue are pushed to the
    // positive side so no corner sits exactly on the surface
    std::vector<double> g(field.values.size());
    for (std::size_t i = 0; i < g.size(); ++i) {
        double v = field.values[i] - iso;
        g[i] = std::fabs(v) < 1e-12 ? 1e-12 : v;
    }

    TriMesh mesh;
    std::unordered_map<std::uint64_t, std::uint32_t> edge_vertex;
    edge_vertex.reserve(static_cast<std::size_t>(R) * R * 4);
    std::vector<std::uint32_t> tri_cell;  // flat cell index per triangle
    const Vec3 cell = field.cell_size();

    auto crossing_vertex = [&](int i, int j, int k, int axis, int lo_corner) -> std::uint32_t {
        int di = i + (lo_corner & 1), dj = j + ((lo_corner >> 1) & 1), dk = k + ((lo_corner >> 2) & 1);
        std::uint64_t gv = static_cast<std::uint64_t>(field.vindex(di, dj, dk));
        std::uint64_t key = gv * 3 + static_cast<std::uint64_t>(axis);
        auto it = edge_vertex.find(key);
        if (it != edge_vertex.end()) return it->second;
        int hi_i = di + (axis == 0), hi_j = dj + (axis == 1), hi_k = dk + (axis == 2);
        double f0 = g[field.vindex(di, dj, dk)];
        double f1 = g[field.vindex(hi_i, hi_j, hi_k)];
        double t = f0 / (f0 - f1);  // zero crossing of the recentred values
        Vec3 p0 = field.position(di, dj, dk);
        Vec3 p1 = field.position(hi_i, hi_j, hi_k);
        Vec3 p = p0 + t * (p1 - p0);
        std::uint32_t idx = static_cast<std::uint32_t>(mesh.vertices.size());
        mesh.vertices.push_back(p);
        edge_vertex.emplace(key, idx);
        return idx;
    };

    std::vector<mc_detail::Chord> chords;
    for (int k = 0; k < R; ++k) {
        for (int j = 0; j < R; ++j) {
            for (int i = 0; i < R; ++i) {
                std::array<double, 8> cg;
                bool any_neg = false, any_pos = false;
                for (int c = 0; c < 8; ++c) {
                    cg[static_cast<std::size_t>(c)] =
                        g[field.vindex(i + (c & 1), j + ((c >> 1) & 1), k + ((c >> 2) & 1))];
                    (cg[static_cast<std::size_t>(c)] < 0.0 ? any_neg : any_pos) = true;
                }
                if (!any_neg || !any_pos) continue;

                chords.clear();
                for (int axis = 0; axis < 3; ++axis) {
                    for (int side = 0; side < 2; ++side) {
                        auto cyc = mc_detail::face_cycle(axis, side);
                        std::array<double, 4> fg;
                        for (int q = 0; q < 4; ++q)
                            fg[static_cast<std::size_t>(q)] =
                                cg[static_cast<std::size_t>(cyc[static_cast<std::size_t>(q)])];
                        mc_detail::face_chords(cyc, fg, chords);
                    }
                }
                if (chords.empty()) continue;

                // each crossed cube edge has exactly one outgoing chord
                int next_edge[12];
                bool has_out[12] = {};
                for (const auto& ch : chords) {
                    next_edge[ch.from_e] = ch.to_e;
                    has_out[ch.from_e] = true;
                }
                bool visited[12] = {};
                std::uint32_t cell_idx = static_cast<std::uint32_t>((k * R + j) * R + i);
                for (const auto& ch : chords) {
                    if (visited[ch.from_e]) continue;
                    // walk the loop of chords starting here
                    std::array<std::uint32_t, 12> loop;
                    int len = 0;
                    int e = ch.from_e;
                    while (!visited[e]) {
                        visited[e] = true;
                        int axis, lo_corner;
                        mc_detail::edge_endpoints(e, axis, lo_corner);
                        loop[static_cast<std::size_t>(len++)] =
                            crossing_vertex(i, j, k, axis, lo_corner);
                        if (!has_out[e]) throw InvalidInput("marching_cubes: open chord chain");
                        e = next_edge[e];
                    }
                    for (int t = 1; t + 1 < len; ++t) {
                        mesh.triangles.push_back({{loop[0], loop[static_cast<std::size_t>(t)],
                                                   loop[static_cast<std::size_t>(t + 1)]}});
                        tri_cell.push_back(cell_idx);
                    }
                }
            }
        }
    }

    if (mesh.triangles.empty()) throw EmptySurface("marching_cubes: field has no sign change");

    // Orient triangles so normals point toward increasing field. Per-triangle
    // vote from the trilinear gradient at the centroid, then a traversal pass
    // enforces coherent winding across shared edges, seeded from the triangle
    // with the strongest vote in each connected component.
    std::size_t ntri = mesh.triangles.size();
    std::vector<double> vote(ntri);
    for (std::size_t t = 0; t < ntri; ++t) {
        std::uint32_t ci = tri_cell[t];
        int i = static_cast<int>(ci) % R;
        int j = (static_cast<int>(ci) / R) % R;
        int k = static_cast<int>(ci) / (R * R);
        const Tri& tr = mesh.triangles[t];
        Vec3 cen = (mesh.vertices[tr[0]] + mesh.vertices[tr[1]] + mesh.vertices[tr[2]]) / 3.0;
        Vec3 base = field.position(i, j, k);
        double x = std::clamp((cen.x - base.x) / cell.x, 0.0, 1.0);
        double y = std::clamp((cen.y - base.y) / cell.y, 0.0, 1.0);
        double z = std::clamp((cen.z - base.z) / cell.z, 0.0, 1.0);
        Vec3 grad{0, 0, 0};
        for (int c = 0; c < 8; ++c) {
            double fv = g[field.vindex(i + (c & 1), j + ((c >> 1) & 1), k + ((c >> 2) & 1))];
            double wx = (c & 1) ? x : 1.0 - x, sx = (c & 1) ? 1.0 : -1.0;
            double wy = (c & 2) ? y : 1.0 - y, sy = (c & 2) ? 1.0 : -1.0;
            double wz = (c & 4) ? z : 1.0 - z, sz = (c & 4) ? 1.0 : -1.0;
            grad.x += fv * sx * wy * wz;
            grad.y += fv * wx * sy * wz;
            grad.z += fv * wx * wy * sz;
        }
        grad.x /= cell.x;
        grad.y /= cell.y;
        grad.z /= cell.z;
        vote[t] = dot(mesh.triangle_normal(t), grad);
    }

    // undirected edge -> incident (triangle, direction) pairs
    auto pack = [](std::uint32_t a, std::uint32_t b) {
        return (static_cast<std::uint64_t>(std::min(a, b)) << 32) | std::max(a, b);
    };
    std::unordered_map<std::uint64_t, std::array<std::int64_t, 2>> incident;
    incident.reserve(ntri * 3 / 2);
    for (std::size_t t = 0; t < ntri; ++t) {
        const Tri& tr = mesh.triangles[t];
        for (int e = 0; e < 3; ++e) {
            std::uint32_t a = tr[e], b = tr[(e + 1) % 3];
            bool fwd = a < b;
            std::int64_t rec = (static_cast<std::int64_t>(t) << 1) | (fwd ? 1 : 0);
            auto& slot = incident.try_emplace(pack(a, b), std::array<std::int64_t, 2>{-1, -1})
                             .first->second;
            if (slot[0] < 0) slot[0] = rec;
            else if (slot[1] < 0) slot[1] = rec;
        }
    }

    std::vector<std::size_t> seeds(ntri);
    for (std::size_t t = 0; t < ntri; ++t) seeds[t] = t;
    std::sort(seeds.begin(), seeds.end(), [&](std::size_t a, std::size_t b) {
        double va = std::fabs(vote[a]), vb = std::fabs(vote[b]);
        return va > vb || (va == vb && a < b);
    });

    std::vector<std::int8_t> state(ntri, -1);  // -1 unvisited, 0 keep, 1 flip
    std::vector<std::size_t> stack;
    for (std::size_t s : seeds) {
        if (state[s] >= 0) continue;
        state[s] = vote[s] < 0.0 ? 1 : 0;
        stack.push_back(s);
        while (!stack.empty()) {
            std::size_t t = stack.back();
            stack.pop_back();
            const Tri& tr = mesh.triangles[t];
            for (int e = 0; e < 3; ++e) {
                std::uint32_t a = tr[e], b = tr[(e + 1) % 3];
                bool fwd = a < b;
                bool eff_t = fwd != (state[t] == 1);
                const auto& slot = incident[pack(a, b)];
                for (std::int64_t rec : slot) {
                    if (rec < 0) continue;
                    std::size_t u = static_cast<std::size_t>(rec >> 1);
                    if (u == t) continue;
                    bool dir_u = (rec & 1) != 0;
                    // neighbor must traverse the shared edge the opposite way
                    std::int8_t want = (dir_u == eff_t) ? 1 : 0;
                    if (state[u] < 0) {
                        state[u] = want;
                        stack.push_back(u);
                    }
                }
            }
        }
    }
    for (std::size_t t = 0; t < ntri; ++t)
        if (state[t] == 1) std::swap(mesh.triangles[t].v[1], mesh.triangles[t].v[2]);

    return mesh;
}

}  // namespace sdfc::geom
