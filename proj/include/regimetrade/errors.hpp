#pragma once

#include <stdexcept>
#include <string>

namespace regimetrade {

// Bad user input: malformed files, out-of-range parameters. CLI exit code 1.
class ValidationError : public std::runtime_error {
public:
    explicit ValidationError(const std::string& what) : std::runtime_error(what) {}
};

// Filesystem trouble: missing input, unwritable destination. CLI exit code 2.
class IoError : public std::runtime_error {
public:
    explicit IoError(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace regimetrade
