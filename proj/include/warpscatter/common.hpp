#pragma once

#include <complex>
#include <stdexcept>
#include <string>
#include <vector>

namespace ws {

using Real = double;
using Cplx = std::complex<double>;

inline constexpr Real kPi = 3.14159265358979323846;

struct Error : std::runtime_error {
    explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

// input outside the declared domain of an object
struct DomainError : Error {
    using Error::Error;
};

// inconsistent or malformed specification / configuration
struct SpecError : Error {
    using Error::Error;
};

// an iterative construction failed to contract
struct ConvergenceError : Error {
    ConvergenceError(const std::string& msg, Real suggested = 0)
        : Error(msg), suggested_rmax(suggested) {}
    Real suggested_rmax;
};

// spectral parameter too close to the exceptional set (vanishing Wronskian,
// singular matching system)
struct ExceptionalError : Error {
    using Error::Error;
};

// grid too short / too coarse for the requested quantity
struct GridError : Error {
    using Error::Error;
};

// undersampled cross-section data
struct AliasError : Error {
    using Error::Error;
};

struct NumericError : Error {
    using Error::Error;
};

}  // namespace ws
