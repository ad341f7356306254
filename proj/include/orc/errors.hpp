#pragma once

#include <stdexcept>
#include <string>

namespace orc {

// Base class for all workbench errors. kind() is a stable machine-readable
// tag; the CLI maps it into the error JSON it prints on stderr.
class Error : public std::runtime_error {
public:
    Error(std::string kind, const std::string& msg)
        : std::runtime_error(msg), kind_(std::move(kind)) {}
    const std::string& kind() const noexcept { return kind_; }

private:
    std::string kind_;
};

struct DegenerateGeometry : Error {
    explicit DegenerateGeometry(const std::string& msg)
        : Error("DegenerateGeometry", msg) {}
};

struct InvalidPosition : Error {
    explicit InvalidPosition(const std::string& msg)
        : Error("InvalidPosition", msg) {}
};

// Thrown mid-integration; carries the simulated time at which the force
// bound was exceeded or a non-finite value appeared.
struct NumericalBlowup : Error {
    NumericalBlowup(const std::string& msg, double time_s_)
        : Error("NumericalBlowup", msg), time_s(time_s_) {}
    double time_s = 0.0;
};

struct InsufficientSamples : Error {
    explicit InsufficientSamples(const std::string& msg)
        : Error("InsufficientSamples", msg) {}
};

struct ChannelMismatch : Error {
    explicit ChannelMismatch(const std::string& msg)
        : Error("ChannelMismatch", msg) {}
};

struct DimensionMismatch : Error {
    explicit DimensionMismatch(const std::string& msg)
        : Error("DimensionMismatch", msg) {}
};

struct UnknownChannel : Error {
    explicit UnknownChannel(const std::string& msg)
        : Error("UnknownChannel", msg) {}
};

// Parse/validation failure for external files. line/column are 1-based;
// 0 means "not applicable".
struct FormatError : Error {
    FormatError(const std::string& msg, int line_ = 0, int column_ = 0)
        : Error("FormatError", msg), line(line_), column(column_) {}
    int line = 0;
    int column = 0;
};

struct RateMismatch : Error {
    explicit RateMismatch(const std::string& msg) : Error("RateMismatch", msg) {}
};

struct SingularSystem : Error {
    explicit SingularSystem(const std::string& msg)
        : Error("SingularSystem", msg) {}
};

}  // namespace orc
