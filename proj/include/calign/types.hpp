#pragma once

#include <complex>
#include <stdexcept>
#include <string>

namespace calign {

using cplx = std::complex<double>;

/// Invalid parameters passed to a constructor or operation.
class ConfigError : public std::invalid_argument {
public:
    explicit ConfigError(const std::string& what) : std::invalid_argument(what) {}
};

/// Operation applied outside its mathematical domain (e.g. representative of the point at infinity).
class DomainError : public std::domain_error {
public:
    explicit DomainError(const std::string& what) : std::domain_error(what) {}
};

/// Iterative numeric routine failed to converge.
class NumericError : public std::runtime_error {
public:
    explicit NumericError(const std::string& what) : std::runtime_error(what) {}
};

/// The chosen prime modulus divides a nonzero equation coefficient.
class ModulusError : public std::invalid_argument {
public:
    explicit ModulusError(const std::string& what) : std::invalid_argument(what) {}
};

/// Decoded equation values are inconsistent with the equation system.
class DecodeIntegrityError : public std::runtime_error {
public:
    explicit DecodeIntegrityError(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace calign
