#pragma once

#include <stdexcept>
#include <string>

namespace aperture {

/// Base class for every error raised by the library. The `code()` string is
/// stable and machine-readable; the CLI copies it into errors.json.
class Error : public std::runtime_error {
public:
    Error(std::string code, const std::string& message)
        : std::runtime_error(message), code_(std::move(code)) {}

    const std::string& code() const noexcept { return code_; }

private:
    std::string code_;
};

/// Invalid input that violates an operation's contract (dimension mismatch,
/// empty region, non-symmetric matrix, ...).
class PreconditionError : public Error {
public:
    using Error::Error;
};

/// Configuration or structural-assumption validation failure.
class ValidationError : public Error {
public:
    using Error::Error;
};

/// The explicit scheme refused to step because dt exceeds the monotonicity bound.
class CflError : public Error {
public:
    explicit CflError(const std::string& message) : Error("cfl", message) {}
};

/// An iterative procedure did not reach its tolerance.
class ConvergenceError : public Error {
public:
    explicit ConvergenceError(const std::string& message) : Error("convergence", message) {}
};

/// A computed value became NaN or infinite.
class NumericError : public Error {
public:
    explicit NumericError(const std::string& message) : Error("non_finite", message) {}
};

}  // namespace aperture
