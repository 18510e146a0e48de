#pragma once

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <vector>

#include "sdfc/binio.hpp"
#include "sdfc/error.hpp"
#include "sdfc/geom/point_cloud.hpp"
#include "sdfc/geom/vec3.hpp"

namespace sdfc::geom {

// Query points inside the unit ball with their signed distances
// (negative inside the surface).
struct SdfSampleSet {
    std::vector<Vec3> queries;
    std::vector<double> distances;

    std::size_t size() const { return queries.size(); }

    void validate() const {
        if (queries.size() != distances.size())
            throw InvalidInput("sdf samples: queries and distances must match 1:1");
        for (const Vec3& q : queries)
            if (norm_sq(q) > 1.0 + 1e-9) throw InvalidInput("sdf samples: query outside unit ball");
    }

    double inside_fraction() const {
        if (distances.empty()) return 0.0;
        std::size_t in = 0;
        for (double d : distances) in += d < 0.0;
        return static_cast<double>(in) / static_cast<double>(distances.size());
    }
};

namespace bin_detail = sdfc::binio;

inline constexpr char kSdfMagic[4] = {'S', 'D', 'F', 'S'};
inline constexpr char kSurfMagic[4] = {'S', 'U', 'R', 'F'};
inline constexpr std::uint32_t kSdfVersion = 1;
inline constexpr std::uint32_t kSurfVersion = 1;

// magic, version u32, count u32, then per sample x,y,z,d as f32
inline void save_sdf_samples(std::ostream& out, const SdfSampleSet& s) {
    bin_detail::write_magic(out, kSdfMagic);
    bin_detail::write_pod(out, kSdfVersion);
    bin_detail::write_pod(out, static_cast<std::uint32_t>(s.size()));
    for (std::size_t i = 0; i < s.size(); ++i) {
        bin_detail::write_pod(out, static_cast<float>(s.queries[i].x));
        bin_detail::write_pod(out, static_cast<float>(s.queries[i].y));
        bin_detail::write_pod(out, static_cast<float>(s.queries[i].z));
        bin_detail::write_pod(out, static_cast<float>(s.distances[i]));
    }
    if (!out) throw IoError("sdf sample write failed");
}

inline SdfSampleSet load_sdf_samples(std::istream& in) {
    bin_detail::expect_magic(in, kSdfMagic, "sdf samples");
    auto version = bin_detail::read_pod<std::uint32_t>(in, "sdf samples version");
    if (version != kSdfVersion) throw IoError("unsupported sdf sample version");
    auto count = bin_detail::read_pod<std::uint32_t>(in, "sdf sample count");
    SdfSampleSet s;
    s.queries.reserve(count);
    s.distances.reserve(count);
    for (std::uint32_t i = 0; i < count; ++i) {
        float x = bin_detail::read_pod<float>(in, "sample");
        float y = bin_detail::read_pod<float>(in, "sample");
        float z = bin_detail::read_pod<float>(in, "sample");
        float d = bin_detail::read_pod<float>(in, "sample");
        s.queries.push_back({x, y, z});
        s.distances.push_back(d);
    }
    return s;
}

inline void save_sdf_samples(const std::filesystem::path& path, const SdfSampleSet& s) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot open for write: " + path.string());
    save_sdf_samples(out, s);
}

inline SdfSampleSet load_sdf_samples(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open: " + path.string());
    return load_sdf_samples(in);
}

// magic, version u32, count u32, then per point x,y,z,nx,ny,nz as f32
inline void save_surface_cloud(std::ostream& out, const PointCloud& c) {
    if (!c.has_normals() || c.normals.size() != c.points.size())
        throw InvalidInput("surface cloud record requires per-point normals");
    bin_detail::write_magic(out, kSurfMagic);
    bin_detail::write_pod(out, kSurfVersion);
    bin_detail::write_pod(out, static_cast<std::uint32_t>(c.size()));
    for (std::size_t i = 0; i < c.size(); ++i) {
        for (int a = 0; a < 3; ++a) bin_detail::write_pod(out, static_cast<float>(c.points[i][a]));
        for (int a = 0; a < 3; ++a) bin_detail::write_pod(out, static_cast<float>(c.normals[i][a]));
    }
    if (!out) throw IoError("surface cloud write failed");
}

inline PointCloud load_surface_cloud(std::istream& in) {
    bin_detail::expect_magic(in, kSurfMagic, "surface cloud");
    auto version = bin_detail::read_pod<std::uint32_t>(in, "surface cloud version");
    if (version != kSurfVersion) throw IoError("unsupported surface cloud version");
    auto count = bin_detail::read_pod<std::uint32_t>(in, "surface point count");
    PointCloud c;
    c.points.reserve(count);
    c.normals.reserve(count);
    for (std::uint32_t i = 0; i < count; ++i) {
        Vec3 p, n;
        for (int a = 0; a < 3; ++a) p[a] = bin_detail::read_pod<float>(in, "surface point");
        for (int a = 0; a < 3; ++a) n[a] = bin_detail::read_pod<float>(in, "surface normal");
        c.points.push_back(p);
        // normals kept exactly as stored: unit within f32 rounding, and
        // save(load(x)) stays byte-identical
        c.normals.push_back(n);
    }
    return c;
}

inline void save_surface_cloud(const std::filesystem::path& path, const PointCloud& c) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot open for write: " + path.string());
    save_surface_cloud(out, c);
}

inline PointCloud load_surface_cloud(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open: " + path.string());
    return load_surface_cloud(in);
}

}  // namespace sdfc::geom
