#pragma once

#include <charconv>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "sdfc/error.hpp"
#include "sdfc/geom/trimesh.hpp"

namespace sdfc::geom {

namespace detail {

inline std::vector<std::string> split_ws(const std::string& line) {
    std::vector<std::string> out;
    std::istringstream ss(line);
    std::string tok;
    while (ss >> tok) out.push_back(tok);
    return out;
}

inline double parse_double(const std::string& s, const char* what) {
    try {
        std::size_t pos = 0;
        double v = std::stod(s, &pos);
        if (pos != s.size()) throw std::invalid_argument(s);
        return v;
    } catch (const std::exception&) {
        throw IoError(std::string("bad ") + what + " value: " + s);
    }
}

inline long parse_long(const std::string& s, const char* what) {
    try {
        std::size_t pos = 0;
        long v = std::stol(s, &pos);
        if (pos != s.size()) throw std::invalid_argument(s);
        return v;
    } catch (const std::exception&) {
        throw IoError(std::string("bad ") + what + " value: " + s);
    }
}

// OBJ face tokens may carry /vt/vn suffixes; the leading index is the vertex.
inline std::uint32_t parse_obj_face_index(const std::string& tok, std::size_t nverts) {
    std::string head = tok.substr(0, tok.find('/'));
    long idx = parse_long(head, "face index");
    if (idx < 0) idx = static_cast<long>(nverts) + idx + 1;  // negative = relative
    if (idx < 1 || static_cast<std::size_t>(idx) > nverts)
        throw IoError("face index out of range: " + tok);
    return static_cast<std::uint32_t>(idx - 1);
}

}  // namespace detail

inline TriMesh read_obj(std::istream& in) {
    TriMesh mesh;
    std::string line;
    while (std::getline(in, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        auto tok = detail::split_ws(line);
        if (tok.empty() || tok[0][0] == '#') continue;
        if (tok[0] == "v") {
            if (tok.size() < 4) throw IoError("obj: vertex line needs 3 coordinates");
            mesh.vertices.push_back({detail::parse_double(tok[1], "vertex"),
                                     detail::parse_double(tok[2], "vertex"),
                                     detail::parse_double(tok[3], "vertex")});
        } else if (tok[0] == "f") {
            if (tok.size() < 4) throw IoError("obj: face line needs at least 3 indices");
            // fan-triangulate polygons
            std::uint32_t a = detail::parse_obj_face_index(tok[1], mesh.vertices.size());
            for (std::size_t i = 2; i + 1 < tok.size(); ++i) {
                std::uint32_t b = detail::parse_obj_face_index(tok[i], mesh.vertices.size());
                std::uint32_t c = detail::parse_obj_face_index(tok[i + 1], mesh.vertices.size());
                mesh.triangles.push_back({{a, b, c}});
            }
        }
        // vn/vt/usemtl/o/g/s lines are ignored
    }
    mesh.validate();
    return mesh;
}

inline TriMesh read_off(std::istream& in) {
    std::string line;
    auto next_content = [&]() -> std::vector<std::string> {
        while (std::getline(in, line)) {
            if (!line.empty() && line.back() == '\r') line.pop_back();
            auto tok = detail::split_ws(line);
            if (!tok.empty() && tok[0][0] != '#') return tok;
        }
        throw IoError("off: unexpected end of file");
    };
    auto header = next_content();
    if (header.size() == 1 && header[0] == "OFF") header = next_content();
    else if (header[0] == "OFF") header.erase(header.begin());
    if (header.size() < 3) throw IoError("off: bad header");
    long nv = detail::parse_long(header[0], "vertex count");
    long nf = detail::parse_long(header[1], "face count");
    if (nv < 0 || nf < 0) throw IoError("off: negative counts");
    TriMesh mesh;
    mesh.vertices.reserve(static_cast<std::size_t>(nv));
    for (long i = 0; i < nv; ++i) {
        auto tok = next_content();
        if (tok.size() < 3) throw IoError("off: vertex line needs 3 coordinates");
        mesh.vertices.push_back({detail::parse_double(tok[0], "vertex"),
                                 detail::parse_double(tok[1], "vertex"),
                                 detail::parse_double(tok[2], "vertex")});
    }
    for (long i = 0; i < nf; ++i) {
        auto tok = next_content();
        long k = detail::parse_long(tok[0], "face arity");
        if (k < 3 || tok.size() < static_cast<std::size_t>(k) + 1)
            throw IoError("off: bad face line");
        auto idx = [&](long j) {
            long v = detail::parse_long(tok[static_cast<std::size_t>(j) + 1], "face index");
            if (v < 0 || v >= nv) throw IoError("off: face index out of range");
            return static_cast<std::uint32_t>(v);
        };
        std::uint32_t a = idx(0);
        for (long j = 1; j + 1 < k; ++j)
            mesh.triangles.push_back({{a, idx(j), idx(j + 1)}});
    }
    mesh.validate();
    return mesh;
}

inline TriMesh read_mesh(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open mesh file: " + path.string());
    std::string ext = path.extension().string();
    for (char& c : ext) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    if (ext == ".obj") return read_obj(in);
    if (ext == ".off") return read_off(in);
    throw IoError("unsupported mesh format: " + path.string());
}

// %.17g round-trips doubles exactly; identical input bytes for identical meshes.
inline void write_obj(std::ostream& out, const TriMesh& mesh) {
    char buf[80];
    for (const Vec3& v : mesh.vertices) {
        std::snprintf(buf, sizeof buf, "v %.17g %.17g %.17g\n", v.x, v.y, v.z);
        out << buf;
    }
    for (const Tri& t : mesh.triangles) {
        std::snprintf(buf, sizeof buf, "f %u %u %u\n", t[0] + 1, t[1] + 1, t[2] + 1);
        out << buf;
    }
    if (!out) throw IoError("obj write failed");
}

inline void write_obj(const std::filesystem::path& path, const TriMesh& mesh) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot open for write: " + path.string());
    write_obj(out, mesh);
}

}  // namespace sdfc::geom
