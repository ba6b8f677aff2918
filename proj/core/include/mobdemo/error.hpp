#pragma once

#include <stdexcept>
#include <string>

namespace mobdemo {

/// Exception carrying a stable machine-readable code ("empty_person",
/// "degenerate_labels", ...) alongside the human-readable message.
class Error : public std::runtime_error {
public:
    Error(std::string code, const std::string &message)
        : std::runtime_error(code + ": " + message), code_{std::move(code)} {}

    const std::string &code() const noexcept { return code_; }

private:
    std::string code_;
};

/// Raised for malformed input files (missing columns, unreadable paths).
class DataError : public Error {
public:
    using Error::Error;
};

} // namespace mobdemo
