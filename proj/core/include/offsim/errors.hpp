#pragma once

#include <stdexcept>
#include <string>

namespace offsim {

// Bad or missing configuration input; the CLI maps this to exit code 2.
struct ConfigError : std::runtime_error {
    explicit ConfigError(const std::string& what) : std::runtime_error(what) {}
    ConfigError(const std::string& path, const std::string& field, const std::string& what)
        : std::runtime_error(path + ": field '" + field + "': " + what) {}
};

struct IoError : std::runtime_error {
    explicit IoError(const std::string& what) : std::runtime_error(what) {}
};

// An FPGA-placed layer cannot be tiled into the on-chip buffer; exit code 3.
struct InfeasibleAssignment : std::runtime_error {
    explicit InfeasibleAssignment(const std::string& what) : std::runtime_error(what) {}
};

struct TooManyLayers : std::runtime_error {
    explicit TooManyLayers(const std::string& what) : std::runtime_error(what) {}
};

struct MissingReport : std::runtime_error {
    explicit MissingReport(const std::string& what) : std::runtime_error(what) {}
};

struct EmptyDataset : std::runtime_error {
    explicit EmptyDataset(const std::string& what) : std::runtime_error(what) {}
};

struct ShapeMismatchError : std::runtime_error {
    explicit ShapeMismatchError(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace offsim
