#pragma once

#include <stdexcept>
#include <string>

namespace autotune {

// Base of every error raised by the library. Callers that only care about
// "something went wrong in the toolkit" catch this.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class InvalidPointError : public Error {
public:
    using Error::Error;
};

class ParseError : public Error {
public:
    ParseError(std::size_t row, const std::string& what)
        : Error("row " + std::to_string(row) + ": " + what), row_(row) {}

    [[nodiscard]] std::size_t row() const noexcept { return row_; }

private:
    std::size_t row_;
};

class ConfigError : public Error {
public:
    using Error::Error;
};

class InfeasibleDesignError : public Error {
public:
    using Error::Error;
};

class ConditioningError : public Error {
public:
    ConditioningError(const std::string& what, double min_eigenvalue)
        : Error(what + " (smallest eigenvalue estimate " + std::to_string(min_eigenvalue) + ")"),
          min_eigenvalue_(min_eigenvalue) {}

    [[nodiscard]] double min_eigenvalue() const noexcept { return min_eigenvalue_; }

private:
    double min_eigenvalue_;
};

class LearningError : public Error {
public:
    using Error::Error;
};

class ScheduleError : public Error {
public:
    using Error::Error;
};

class DomainError : public Error {
public:
    using Error::Error;
};

class CoverageError : public Error {
public:
    using Error::Error;
};

class ContractViolation : public Error {
public:
    using Error::Error;
};

class MeasurementError : public Error {
public:
    using Error::Error;
};

class ExhaustedError : public Error {
public:
    using Error::Error;
};

}  // namespace autotune
