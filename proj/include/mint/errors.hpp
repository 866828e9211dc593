// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <stdexcept>
#include <string>

namespace mint {

class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Shapes disagree with a layer, cohort or architecture declaration.
class DimensionError : public Error {
public:
    using Error::Error;
};

// Input violates a precondition (empty probe set, bad rate, unknown label...).
class ValidationError : public Error {
public:
    using Error::Error;
};

// NaN/Inf produced or consumed, zero-norm vector where a direction is needed.
class NumericError : public Error {
public:
    using Error::Error;
};

// Write access to parameters that were frozen.
class FrozenError : public Error {
public:
    using Error::Error;
};

// Parameter blob or component reference does not match its recorded digest.
class ChecksumError : public Error {
public:
    using Error::Error;
};

// A pipeline stage was invoked before the stage it depends on.
class DependencyError : public Error {
public:
    using Error::Error;
};

class IoError : public Error {
public:
    using Error::Error;
};

}  // namespace mint
