#pragma once

#include <stdexcept>
#include <string>

namespace sdfc {

// Base class for all library errors. Subclasses mirror the failure modes of
// the public operations so callers can catch them selectively.
struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct InvalidMesh : Error {
    using Error::Error;
};

// Inside/outside is only defined for watertight meshes.
struct SignUndefined : Error {
    using Error::Error;
};

struct EmptySurface : Error {
    using Error::Error;
};

struct InvalidRatio : Error {
    using Error::Error;
};

struct InvalidInput : Error {
    using Error::Error;
};

struct ShapeError : Error {
    using Error::Error;
};

struct NotScalar : Error {
    using Error::Error;
};

struct NoPath : Error {
    using Error::Error;
};

// Non-finite value detected in a numeric pipeline (NaN/Inf policy: fail loud).
struct DiagnosticError : Error {
    using Error::Error;
};

struct ConfigError : Error {
    using Error::Error;
};

struct IoError : Error {
    using Error::Error;
};

}  // namespace sdfc
