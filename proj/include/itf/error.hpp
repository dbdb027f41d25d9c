#pragma once

#include <stdexcept>
#include <string>

namespace itf {

// Base class for every error raised by the engine.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// A parameter set violates one of the constraints of its task kind.
class ConstraintViolation : public Error {
public:
    ConstraintViolation(std::string constraint, const std::string& kind)
        : Error("constraint violated for " + kind + ": " + constraint),
          constraint_(std::move(constraint)) {}

    const std::string& constraint() const noexcept { return constraint_; }

private:
    std::string constraint_;
};

// Input that is syntactically or numerically malformed (non-finite answer,
// incomplete trace, unparsable record).
class InvalidInput : public Error {
public:
    using Error::Error;
};

// Lookup of an unknown session or log.
class NotFound : public Error {
public:
    using Error::Error;
};

// Parameter tuning ran out of its draw budget.
class TuningFailed : public Error {
public:
    using Error::Error;
};

}  // namespace itf
