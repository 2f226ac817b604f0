#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace todo {

/// Base class of every error raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Incompatible grid shapes, spec larger than its input, zero dimensions.
class ShapeError : public Error {
public:
    using Error::Error;
};

/// Row/element counts that do not match the declared shape.
class CountMismatchError : public Error {
public:
    using Error::Error;
};

/// Argument outside its documented domain (ratio, merge count, k, ...).
class RangeError : public Error {
public:
    using Error::Error;
};

class NonFiniteError : public Error {
public:
    using Error::Error;
};

/// Integer arithmetic that would exceed 64 bits.
class OverflowError : public Error {
public:
    using Error::Error;
};

/// Malformed TGRD payload. `offset()` is the byte position of the problem.
class FormatError : public Error {
public:
    FormatError(const std::string& what, std::size_t offset)
        : Error(what), offset_(offset) {}

    std::size_t offset() const noexcept { return offset_; }

private:
    std::size_t offset_;
};

} // namespace todo
