#pragma once

#include <bit>
#include <cstdint>
#include <istream>
#include <ostream>
#include <string>

#include "sdfc/error.hpp"

namespace sdfc::binio {

static_assert(std::endian::native == std::endian::little,
              "binary records are little-endian; big-endian hosts unsupported");

template <typename T>
void write_pod(std::ostream& out, const T& v) {
    out.write(reinterpret_cast<const char*>(&v), sizeof v);
}

template <typename T>
T read_pod(std::istream& in, const char* what) {
    T v;
    in.read(reinterpret_cast<char*>(&v), sizeof v);
    if (!in) throw IoError(std::string("truncated record while reading ") + what);
    return v;
}

inline void write_magic(std::ostream& out, const char m[4]) { out.write(m, 4); }

inline void expect_magic(std::istream& in, const char m[4], const char* what) {
    char got[4];
    in.read(got, 4);
    if (!in || got[0] != m[0] || got[1] != m[1] || got[2] != m[2] || got[3] != m[3])
        throw IoError(std::string("bad magic for ") + what);
}

}  // namespace sdfc::binio
