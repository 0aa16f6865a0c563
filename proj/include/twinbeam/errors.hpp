#pragma once

#include <stdexcept>
#include <string>

namespace twinbeam {

class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Grid dimensions that a transform cannot handle (non power of two, too small).
class SizingError : public Error {
public:
    using Error::Error;
};

// A documented precondition was violated (wrong plane tag, mismatched shapes, ...).
class ContractError : public Error {
public:
    using Error::Error;
};

// Input outside the numerical domain of a model (non-paraxial angles, G <= 1, ...).
class DomainError : public Error {
public:
    using Error::Error;
};

// A requested region does not fit inside the available data.
class BoundsError : public Error {
public:
    using Error::Error;
};

// The pump support reaches the grid border, so the padded transform would alias.
class WraparoundError : public Error {
public:
    using Error::Error;
};

class ConfigError : public Error {
public:
    using Error::Error;
};

class IoError : public Error {
public:
    using Error::Error;
};

}  // namespace twinbeam
