#pragma once

#include <stdexcept>
#include <string>

namespace cimtrain {

// Configuration file problems (bad schema, missing fields, invalid values).
class ConfigError : public std::runtime_error {
public:
    ConfigError(std::string field, const std::string& what)
        : std::runtime_error("config field '" + field + "': " + what), field_(std::move(field)) {}
    const std::string& field() const { return field_; }

private:
    std::string field_;
};

class TopologyError : public std::runtime_error {
    using std::runtime_error::runtime_error;
};

class MappingError : public std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Requested placement does not fit into the configured hardware.
class CapacityError : public std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Operation not supported by the array (e.g. transposed read on a
// non-transposable array).
class CapabilityError : public std::runtime_error {
    using std::runtime_error::runtime_error;
};

class StateError : public std::runtime_error {
    using std::runtime_error::runtime_error;
};

class TraceError : public std::runtime_error {
    using std::runtime_error::runtime_error;
};

class IoError : public std::runtime_error {
    using std::runtime_error::runtime_error;
};

}  // namespace cimtrain
