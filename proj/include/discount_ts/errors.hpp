#pragma once

#include <stdexcept>
#include <string>

namespace dts {

class Error : public std::runtime_error {
   public:
    using std::runtime_error::runtime_error;
};

// Non-finite input, negative time, dimension mismatch, bad parameter block.
class InvalidArgument : public Error {
   public:
    using Error::Error;
};

// Forward rate requested where the bond price is not positive.
class DegenerateCurve : public Error {
   public:
    using Error::Error;
};

// A point on or outside the simplex boundary where the open simplex is required.
class BoundaryError : public Error {
   public:
    using Error::Error;
};

// Finite-time blow-up of the quadratic-drift dynamics.
class ExplosionError : public Error {
   public:
    ExplosionError(const std::string& what, double time) : Error(what), time_(time) {}

    /// Time at which the blow-up was detected (or the critical time estimate).
    double time() const noexcept { return time_; }

   private:
    double time_;
};

}  // namespace dts
