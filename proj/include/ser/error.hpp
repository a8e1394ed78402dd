#ifndef SER_ERROR_HPP
#define SER_ERROR_HPP

#include <stdexcept>
#include <string>

namespace ser {

// Base class for all library errors.
class Error : public std::runtime_error {
public:
    explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

// Matrix / tensor dimension mismatches. Messages name both shapes.
class ShapeError : public Error {
public:
    using Error::Error;
};

// Filesystem failures: missing files, unreadable directories, short reads.
class IoError : public Error {
public:
    using Error::Error;
};

// Structurally invalid or unsupported file contents (bad WAV codec,
// truncated chunks, wrong checkpoint magic, corrupt manifests).
class FormatError : public Error {
public:
    using Error::Error;
};

// Malformed text inputs: dataset filenames, config keys and values.
class ParseError : public Error {
public:
    using Error::Error;
};

// Dataset-level protocol violations: empty scans, degenerate splits,
// label/feature mismatches.
class DataError : public Error {
public:
    using Error::Error;
};

// Numeric integrity failures: non-finite gradients, parameters or losses.
class NumericError : public Error {
public:
    using Error::Error;
};

// Bad run configuration: unknown keys, out-of-range values.
class ConfigError : public Error {
public:
    using Error::Error;
};

} // namespace ser

#endif
