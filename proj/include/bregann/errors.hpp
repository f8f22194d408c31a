#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

namespace bregann {

// Root of every exception the library throws, so callers can catch one type.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// A point or box coordinate lies outside the declared domain. `rows` lists the
// offending point indices when the violation was detected over a point set.
class DomainViolation : public Error {
public:
    explicit DomainViolation(const std::string& what, std::vector<std::size_t> rows = {})
        : Error(what), rows_(std::move(rows)) {}
    const std::vector<std::size_t>& rows() const noexcept { return rows_; }

private:
    std::vector<std::size_t> rows_;
};

class NotRooted : public Error {
public:
    using Error::Error;
};

class NonFinite : public Error {
public:
    using Error::Error;
};

class EmptyInput : public Error {
public:
    using Error::Error;
};

class FastPathUnavailable : public Error {
public:
    using Error::Error;
};

class InvalidArgument : public Error {
public:
    using Error::Error;
};

// A file could not be opened, read or written. Distinct from malformed content.
class IoError : public Error {
public:
    using Error::Error;
};

// Malformed serialized index or dataset.
class FormatError : public Error {
public:
    using Error::Error;
};

}  // namespace bregann
