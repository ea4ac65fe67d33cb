#pragma once

#include <stdexcept>
#include <string>

namespace mathpii {

// Input violates a documented contract (bad corpus line, unknown type, missing
// precondition). CLI maps these to exit status 1.
class ValidationError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Inconsistent or missing configuration (missing labeling for a segment-aware
// run, missing gateway credentials). Also exit status 1.
class ConfigError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class IoError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

}  // namespace mathpii
