// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <stdexcept>
#include <string>

namespace chgen {

// Bad arguments or configuration. Maps to CLI exit code 2.
class ValidationError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

// NaN losses, eigensolver non-convergence, negative-definite inputs. Exit code 3.
class NumericError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// File system failures and malformed files. Exit code 4.
class IoError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

enum class FormatErrorKind { BadMagic, BadVersion, Truncated, ShapeMismatch };

class FormatError : public IoError {
public:
    FormatError(FormatErrorKind kind, const std::string& what) : IoError(what), kind_(kind) {}
    FormatErrorKind kind() const noexcept { return kind_; }

private:
    FormatErrorKind kind_;
};

}  // namespace chgen
