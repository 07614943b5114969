#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace fairsel {

/// Base of every error raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Non-finite or out-of-range input parameter.
class ParameterError : public Error {
public:
    using Error::Error;
};

/// Normal-equation system is rank deficient or too ill-conditioned to solve.
class SingularDesignError : public Error {
public:
    using Error::Error;
};

/// A protected subgroup has no records where the operation needs at least one.
class MissingSubgroupError : public Error {
public:
    using Error::Error;
};

/// Numerical breakdown (overflow, divergent integration grid).
class NumericError : public Error {
public:
    using Error::Error;
};

/// Malformed population CSV. Line numbers are 1-based and count the header.
class ParseError : public Error {
public:
    ParseError(std::size_t line, std::size_t column, const std::string& what)
        : Error("line " + std::to_string(line) +
                (column > 0 ? ", column " + std::to_string(column) : std::string()) + ": " + what),
          line_(line),
          column_(column) {}

    std::size_t line() const noexcept { return line_; }
    std::size_t column() const noexcept { return column_; }

private:
    std::size_t line_;
    std::size_t column_;
};

/// Invalid run configuration (unknown or missing key, bad value).
class ConfigError : public Error {
public:
    using Error::Error;
};

/// Experiment aborted, e.g. because too many replications failed.
class ExperimentError : public Error {
public:
    using Error::Error;
};

}  // namespace fairsel
