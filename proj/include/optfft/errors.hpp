#pragma once

#include <stdexcept>
#include <string>
#include <utility>

namespace optfft {

/// Base class for every error raised by the library. `field()` names the
/// offending input (e.g. "V", "steps", "c") when there is one.
class Error : public std::runtime_error {
public:
    Error(const std::string& what, std::string field = {})
        : std::runtime_error(what), field_(std::move(field)) {}

    const std::string& field() const noexcept { return field_; }

private:
    std::string field_;
};

/// An OptionSpec invariant is violated.
class ValidationError : public Error {
    using Error::Error;
};

/// Inputs are individually valid but the requested model is undefined for
/// them (arbitrage-inconsistent lattice, ln(K/S) with K = 0, empty window...).
class DomainError : public Error {
    using Error::Error;
};

/// A finite-difference weight came out negative.
class StabilityError : public Error {
    using Error::Error;
};

/// Transform length is not a power of two.
class LengthError : public Error {
    using Error::Error;
};

/// A linear step was requested on a row too short to produce any output.
class InsufficientWidthError : public Error {
    using Error::Error;
};

/// Internal tiling or assembly invariant failed. Indicates a bug.
class GeometryError : public Error {
    using Error::Error;
};

/// A transform produced a result outside its proven error envelope.
class NumericalError : public Error {
    using Error::Error;
};

}  // namespace optfft
