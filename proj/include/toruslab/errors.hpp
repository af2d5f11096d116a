#pragma once

#include <stdexcept>
#include <string>

namespace toruslab {

// Base of every error raised by the library. The CLI maps subclasses of
// UsageError to exit code 1 and everything else to exit code 2.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class UsageError : public Error {
public:
    using Error::Error;
};

class MalformedSpec : public UsageError {
public:
    using UsageError::UsageError;
};

class PositivityViolation : public UsageError {
public:
    PositivityViolation(const std::string& what, double worst_lambda)
        : UsageError(what), worst_sampled_lambda(worst_lambda) {}
    double worst_sampled_lambda;
};

class NotLiouville : public UsageError {
public:
    using UsageError::UsageError;
};

class RationalTag : public UsageError {
public:
    using UsageError::UsageError;
};

class ToleranceFailure : public Error {
public:
    using Error::Error;
};

class NotEscaping : public Error {
public:
    NotEscaping(const std::string& what, double angle = 0.0)
        : Error(what), fiber_angle(angle) {}
    double fiber_angle;
};

class NoConvergence : public Error {
public:
    using Error::Error;
};

class BudgetExceeded : public Error {
public:
    using Error::Error;
};

class BracketFailure : public Error {
public:
    using Error::Error;
};

// Lifted fiber map decreased by more than the noise allowance. Zero-entropy
// metrics never produce this.
class MonotonicityViolation : public BracketFailure {
public:
    using BracketFailure::BracketFailure;
};

}  // namespace toruslab
