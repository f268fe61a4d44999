#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace ofesim {

/// Raised when caller-supplied parameters violate an operation's preconditions.
class InvalidInput : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// Cholesky factorisation hit a pivot below the positive-definiteness threshold.
class FactorizationError : public std::runtime_error {
public:
    FactorizationError(const std::string& what, std::size_t pivot)
        : std::runtime_error(what), pivot_(pivot) {}
    std::size_t pivot() const noexcept { return pivot_; }

private:
    std::size_t pivot_;
};

/// A local weighted regression whose design is (numerically) rank deficient.
class SingularFit : public std::runtime_error {
public:
    SingularFit(const std::string& what, std::size_t query, double bandwidth)
        : std::runtime_error(what), query_(query), bandwidth_(bandwidth) {}
    std::size_t query() const noexcept { return query_; }
    double bandwidth() const noexcept { return bandwidth_; }

private:
    std::size_t query_;
    double bandwidth_;
};

/// AICc bandwidth search found no bandwidth with a finite criterion.
class SelectionError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Input files or frames whose layout does not match what a stage expects.
class SchemaError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

}  // namespace ofesim
