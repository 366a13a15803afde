#pragma once

#include <stdexcept>
#include <string>

namespace shlr {

/// Malformed or mismatched arguments (wrong algebra, wrong lengths, bad input).
struct argument_error : std::invalid_argument {
    explicit argument_error(const std::string& m) : std::invalid_argument(m) {}
};

/// A stated precondition of an operation failed (non-chain-map, non-cycle, ...).
struct precondition_error : std::runtime_error {
    explicit precondition_error(const std::string& m) : std::runtime_error(m) {}
};

/// The truncation window is too small for the requested computation.
struct window_error : std::runtime_error {
    explicit window_error(const std::string& m) : std::runtime_error(m) {}
};

}  // namespace shlr
