#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace gcnh {

/// Base class for every error raised by the engine.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Caller passed data that violates an operation's precondition.
class InputError : public Error {
public:
    using Error::Error;
};

/// Tensor or matrix dimensions do not line up.
class ShapeError : public Error {
public:
    using Error::Error;
};

/// Homophily ratio requested on a graph without edges.
class UndefinedRatioError : public Error {
public:
    using Error::Error;
};

/// Loss or gradient evaluated to NaN/inf.
class NonFiniteError : public Error {
public:
    using Error::Error;
};

class IoError : public Error {
public:
    using Error::Error;
};

// Dataset loading errors. Each failure mode has its own type so callers
// (and tests) can tell them apart without parsing messages.

class MissingFileError : public IoError {
public:
    using IoError::IoError;
};

class MalformedLineError : public IoError {
public:
    MalformedLineError(const std::string& file, std::size_t line, const std::string& what)
        : IoError(file + ":" + std::to_string(line) + ": " + what), file_(file), line_(line) {}

    const std::string& file() const noexcept { return file_; }
    std::size_t line() const noexcept { return line_; }

private:
    std::string file_;
    std::size_t line_;
};

class LabelOutOfRangeError : public IoError {
public:
    using IoError::IoError;
};

class SplitIndexOutOfRangeError : public IoError {
public:
    using IoError::IoError;
};

} // namespace gcnh
