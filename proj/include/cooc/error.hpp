#pragma once

#include <stdexcept>
#include <string>

namespace cooc {

// Error categories; the CLI maps these onto exit codes
// (usage -> 1, data errors -> 2, divergence -> 3).
enum class ErrorKind {
    usage,
    unreadable_file,
    unsupported_format,
    corrupt_stream,
    invalid_argument,
    shape_mismatch,
    divergence,
    io_failure,
};

class Error : public std::runtime_error {
public:
    Error(ErrorKind kind, const std::string& msg)
        : std::runtime_error(msg), kind_(kind) {}

    ErrorKind kind() const { return kind_; }

    int exit_code() const {
        switch (kind_) {
        case ErrorKind::usage: return 1;
        case ErrorKind::divergence: return 3;
        default: return 2;
        }
    }

private:
    ErrorKind kind_;
};

} // namespace cooc
