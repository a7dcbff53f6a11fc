#pragma once

#include <stdexcept>
#include <string>

namespace lka {

/// Error classes map one-to-one onto the CLI exit codes.
enum class ErrorKind {
    input = 2,    ///< malformed or semantically invalid input data
    io = 3,       ///< file system failures
    version = 4   ///< persisted artifact written by an incompatible schema
};

class Error : public std::runtime_error {
public:
    Error(ErrorKind kind, const std::string& what)
        : std::runtime_error(what), kind_(kind) {}

    ErrorKind kind() const noexcept { return kind_; }
    int exit_code() const noexcept { return static_cast<int>(kind_); }

private:
    ErrorKind kind_;
};

inline Error input_error(const std::string& what) { return {ErrorKind::input, what}; }
inline Error io_error(const std::string& what) { return {ErrorKind::io, what}; }
inline Error version_error(const std::string& what) { return {ErrorKind::version, what}; }

} // namespace lka
