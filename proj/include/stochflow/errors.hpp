#pragma once

#include <stdexcept>
#include <string>

namespace stochflow {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class InvalidOperator : public Error {
public:
    using Error::Error;
};

class DomainError : public Error {
public:
    using Error::Error;
};

class DimensionMismatch : public Error {
public:
    using Error::Error;
};

class IndexOutOfRange : public Error {
public:
    using Error::Error;
};

/// Raised by the matrix exponential when the result leaves the double range.
class OverflowError : public Error {
public:
    OverflowError(const std::string& what, double norm) : Error(what), norm_(norm) {}
    double norm() const noexcept { return norm_; }

private:
    double norm_;
};

class NonCommutingFamily : public Error {
public:
    NonCommutingFamily(const std::string& what, int first, int second)
        : Error(what), first_(first), second_(second) {}
    int first() const noexcept { return first_; }
    int second() const noexcept { return second_; }

private:
    int first_;
    int second_;
};

class PathShortfall : public Error {
public:
    using Error::Error;
};

class CombinatorialLimit : public Error {
public:
    using Error::Error;
};

class SeedMismatch : public Error {
public:
    using Error::Error;
};

class InconsistentModel : public Error {
public:
    using Error::Error;
};

class PicardDivergence : public Error {
public:
    PicardDivergence(const std::string& what, double factor) : Error(what), factor_(factor) {}
    double contraction_factor() const noexcept { return factor_; }

private:
    double factor_;
};

/// Monte Carlo standard error too large relative to the estimate.
class NoiseFloor : public Error {
public:
    using Error::Error;
};

class SchemaError : public Error {
public:
    using Error::Error;
};

}  // namespace stochflow
