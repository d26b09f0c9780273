#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace geoflow {

/// Base class of every error raised by the toolkit.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Malformed expression source. `position` is the 0-based character offset.
class ParseError : public Error {
public:
    ParseError(const std::string& message, std::size_t position)
        : Error(message + " (at position " + std::to_string(position) + ")"), position_(position) {}
    std::size_t position() const { return position_; }

private:
    std::size_t position_;
};

/// Expression evaluated outside the domain of one of its nodes.
class DomainError : public Error {
public:
    using Error::Error;
};

/// Degenerate metric, signature mismatch, chart mismatch, rank deficiency of an immersion.
class GeometryError : public Error {
public:
    using Error::Error;
};

/// A documented precondition of an operation does not hold at the evaluation point.
class PreconditionError : public Error {
public:
    using Error::Error;
};

/// Condition (*) of the factor-soliton statements: a denominator vanishes at a point.
class ConditionViolated : public PreconditionError {
public:
    using PreconditionError::PreconditionError;
};

/// Scene file does not match the schema. `where` is a JSON-pointer-style location.
class SceneError : public Error {
public:
    SceneError(const std::string& message, const std::string& where, const std::string& detail = {})
        : Error(message + " at " + (where.empty() ? std::string("/") : where) + (detail.empty() ? "" : ": " + detail)),
          where_(where) {}
    const std::string& where() const { return where_; }

private:
    std::string where_;
};

}  // namespace geoflow
