// SPDX-License-Identifier: MIT
#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace veq {

/// Base class of every error raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Malformed expression source.
class ParseError : public Error {
public:
    ParseError(std::size_t offset, std::string message, std::string expected)
        : Error("parse error at offset " + std::to_string(offset) + ": " + message +
                (expected.empty() ? std::string{} : " (expected " + expected + ")")),
          offset_(offset), detail_(std::move(message)), expected_(std::move(expected)) {}

    std::size_t offset() const noexcept { return offset_; }
    const std::string& detail() const noexcept { return detail_; }
    const std::string& expected() const noexcept { return expected_; }

private:
    std::size_t offset_;
    std::string detail_;
    std::string expected_;
};

/// Evaluation left the domain of an operation (ln of a non-positive value,
/// division by zero, ...). `node()` is the printed subexpression at fault.
class DomainError : public Error {
public:
    DomainError(std::string message, std::string node)
        : Error(message + " in '" + node + "'"), node_(std::move(node)) {}

    const std::string& node() const noexcept { return node_; }

private:
    std::string node_;
};

/// Adaptive quadrature could not meet its tolerance or hit a non-finite sample.
class QuadratureError : public Error {
public:
    QuadratureError(const std::string& message, double best_estimate, double location)
        : Error(message), best_estimate_(best_estimate), location_(location) {}

    double best_estimate() const noexcept { return best_estimate_; }
    double location() const noexcept { return location_; }

private:
    double best_estimate_;
    double location_;
};

/// Argument outside the interval on which a function is defined. `limit()`
/// is the boundary that was crossed (l for Φ⁻¹, T₁ for the majorant, ρ* ...).
class OutOfDomainError : public Error {
public:
    OutOfDomainError(const std::string& message, double limit)
        : Error(message), limit_(limit) {}

    double limit() const noexcept { return limit_; }

private:
    double limit_;
};

/// Input rejected by an invariant check at construction time.
class ValidationError : public Error {
public:
    using Error::Error;
};

/// An iterative method stopped without meeting its tolerance.
class ConvergenceError : public Error {
public:
    ConvergenceError(const std::string& message, int iterations, double last_value)
        : Error(message), iterations_(iterations), last_value_(last_value) {}

    int iterations() const noexcept { return iterations_; }
    double last_value() const noexcept { return last_value_; }

private:
    int iterations_;
    double last_value_;
};

}  // namespace veq
