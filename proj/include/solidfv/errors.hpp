#pragma once

#include <stdexcept>
#include <string>

namespace solidfv {

// Hard failures are exceptions; solver non-convergence is a reported status, not an exception.
struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct InvalidArgument : Error { using Error::Error; };
struct GeometryFailure : Error { using Error::Error; };
struct DistortionFailure : Error { using Error::Error; };
struct MeshIoError : Error { using Error::Error; };

struct GradientFailure : Error {
    int cell;
    GradientFailure(int c, const std::string& what) : Error(what), cell(c) {}
};
struct InvertedElement : Error {
    int cell;
    InvertedElement(int c, const std::string& what) : Error(what), cell(c) {}
};
struct LawOverflow : Error {
    int cell;
    LawOverflow(int c, const std::string& what) : Error(what), cell(c) {}
};
struct ReturnMapFailure : Error {
    int cell;
    ReturnMapFailure(int c, const std::string& what) : Error(what), cell(c) {}
};
struct ResidualNan : Error {
    int cell;
    ResidualNan(int c, const std::string& what) : Error(what), cell(c) {}
};

struct JvpNan : Error { using Error::Error; };
struct IluBreakdown : Error { using Error::Error; };
struct LuSingular : Error { using Error::Error; };

struct ConfigError : Error {
    int line;
    ConfigError(int l, const std::string& what) : Error(what), line(l) {}
};

}  // namespace solidfv
