#pragma once

// Error types thrown by the library. Everything derives from qbattery::Error;
// PhysicsViolation additionally carries the name of the violated invariant so
// front ends can report it.

#include <stdexcept>
#include <string>
#include <utility>

namespace qbattery {

class Error : public std::runtime_error {
public:
    explicit Error(const std::string& what) : std::runtime_error(what) {}
};

// Caller-facing precondition failed (bad parameter, malformed config, ...).
class InvalidArgument : public Error {
public:
    using Error::Error;
};

class IndexOutOfCutoff : public Error {
public:
    using Error::Error;
};

class CutoffTooSmall : public Error {
public:
    using Error::Error;
};

class CutoffMismatch : public Error {
public:
    using Error::Error;
};

class NotHermitian : public Error {
public:
    using Error::Error;
};

class NonpositiveTime : public Error {
public:
    using Error::Error;
};

class NonpositiveValue : public Error {
public:
    using Error::Error;
};

class FlatTrace : public Error {
public:
    using Error::Error;
};

class NeverOrthogonal : public Error {
public:
    using Error::Error;
};

class ZeroVariance : public Error {
public:
    using Error::Error;
};

class EvenOrderUnsupported : public Error {
public:
    using Error::Error;
};

class InsufficientPointsForFit : public Error {
public:
    using Error::Error;
};

// A monitored physical invariant failed at run time (norm loss, conservation
// drift, bound violation). Indicates a bug or an unusable configuration.
class PhysicsViolation : public Error {
public:
    PhysicsViolation(std::string invariant, const std::string& what)
        : Error("invariant '" + invariant + "' violated: " + what),
          invariant_(std::move(invariant)) {}

    const std::string& invariant() const { return invariant_; }

private:
    std::string invariant_;
};

// Fixed-step integrator produced more energy drift than allowed.
class StepTooLarge : public PhysicsViolation {
public:
    explicit StepTooLarge(const std::string& what)
        : PhysicsViolation("classical-energy-drift", what) {}
};

}  // namespace qbattery
