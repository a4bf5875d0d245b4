#pragma once

#include <stdexcept>
#include <string>

namespace fracdiff {

// Base class for every error thrown by this library.
struct error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Invalid configuration, command-line, or file input. Carries the offending
// key when one is known so front ends can report it precisely. Maps to exit
// code 1 in the CLI.
struct parse_error : error {
    explicit parse_error(const std::string& message)
        : error(message) {}
    parse_error(std::string key_name, const std::string& message)
        : error("'" + key_name + "': " + message), key(std::move(key_name)) {}
    std::string key;
};

// Argument outside the numerical domain an operation supports (poles,
// out-of-range orders, unreachable accuracy, degenerate data). Maps to exit
// code 2 in the CLI.
struct domain_error : error {
    using error::error;
};

}  // namespace fracdiff
