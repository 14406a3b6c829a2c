#pragma once

#include <stdexcept>
#include <string>

namespace gmssl {

// Bad user-supplied values (CLI exit 1).
struct ParamError : std::invalid_argument {
    explicit ParamError(const std::string& msg) : std::invalid_argument(msg) {}
};

// API misuse: shape mismatches, double-backward, stale traces.
struct ContractError : std::logic_error {
    explicit ContractError(const std::string& msg) : std::logic_error(msg) {}
};

// Operation refused because it exceeds a configured capability (CLI exit 2).
struct CapabilityError : std::runtime_error {
    explicit CapabilityError(const std::string& msg) : std::runtime_error(msg) {}
};

// Non-finite values, overflow, degenerate numerics (CLI exit 3).
struct NumericError : std::runtime_error {
    explicit NumericError(const std::string& msg) : std::runtime_error(msg) {}
};

}  // namespace gmssl
