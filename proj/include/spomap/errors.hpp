#pragma once

#include <stdexcept>
#include <string>

namespace spomap {

// Error taxonomy mirrored by the C API status codes and the CLI exit codes.
enum class ErrorKind {
    argument,        // bad parameter or violated precondition
    config,          // malformed run configuration
    no_convergence,  // an iteration hit its cap before reaching tolerance
    numerical,       // integration failure, singular matrix, resonance, ...
    io,              // file read/write problems
};

class Error : public std::runtime_error {
public:
    Error(ErrorKind kind, const std::string& msg)
        : std::runtime_error(msg), kind_(kind) {}
    ErrorKind kind() const noexcept { return kind_; }

private:
    ErrorKind kind_;
};

class ArgumentError : public Error {
public:
    explicit ArgumentError(const std::string& msg) : Error(ErrorKind::argument, msg) {}
};

class ConfigError : public Error {
public:
    explicit ConfigError(const std::string& msg) : Error(ErrorKind::config, msg) {}
};

class ConvergenceError : public Error {
public:
    explicit ConvergenceError(const std::string& msg) : Error(ErrorKind::no_convergence, msg) {}
};

class NumericalError : public Error {
public:
    explicit NumericalError(const std::string& msg) : Error(ErrorKind::numerical, msg) {}
};

class IoError : public Error {
public:
    explicit IoError(const std::string& msg) : Error(ErrorKind::io, msg) {}
};

inline void require(bool cond, ErrorKind kind, const std::string& msg) {
    if (!cond) throw Error(kind, msg);
}

}  // namespace spomap
