#pragma once

#include <stdexcept>
#include <string>

namespace gqh {

/// Base class for every error raised by the library. The CLI maps the
/// concrete subclasses onto process exit codes.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Bad configuration, missing files, invalid arguments. Exit code 2.
class ConfigError : public Error {
public:
    using Error::Error;
};

/// Malformed or inconsistent input data. Exit code 3.
class DataError : public Error {
public:
    using Error::Error;
};

/// Singular systems, divergent series, failed fits. Exit code 4.
class NumericalError : public Error {
public:
    using Error::Error;
};

} // namespace gqh
