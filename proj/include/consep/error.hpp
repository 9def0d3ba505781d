#ifndef CONSEP_ERROR_HPP
#define CONSEP_ERROR_HPP

#include <optional>
#include <stdexcept>
#include <string>

namespace consep {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Malformed user input: bad grid, bad measure, bad config file.
class ConfigError : public Error {
public:
    using Error::Error;
};

/// The target law does not dominate the law at the information time, so no
/// calibrated model respects the insider's constraint.
class InfeasibleInstance : public Error {
public:
    InfeasibleInstance(const std::string& what, double witness_x)
        : Error(what), witness_x_(witness_x) {}

    double witness_x() const noexcept { return witness_x_; }

private:
    double witness_x_;
};

/// Solver divergence, mass leakage, or any other numerical breakdown.
class NumericalError : public Error {
public:
    using Error::Error;
};

/// The time window is too short for the stopping rule being computed.
class HorizonError : public NumericalError {
public:
    using NumericalError::NumericalError;
};

}  // namespace consep

#endif  // CONSEP_ERROR_HPP
