#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace scenfuse {

// Broad failure classes; the CLI maps these to exit codes (validation -> 1, io -> 2).
enum class ErrorKind {
    Validation,
    Parse,
    Io,
};

class Error : public std::runtime_error {
public:
    Error(ErrorKind kind, std::string code, const std::string& message)
        : std::runtime_error(code + ": " + message), kind_(kind), code_(std::move(code)) {}

    ErrorKind kind() const { return kind_; }
    // Stable machine-readable code, e.g. "MissingColumn", "WindowOutOfBounds".
    const std::string& code() const { return code_; }

private:
    ErrorKind kind_;
    std::string code_;
};

[[noreturn]] inline void fail(ErrorKind kind, std::string_view code, const std::string& message) {
    throw Error(kind, std::string(code), message);
}

[[noreturn]] inline void fail_validation(std::string_view code, const std::string& message) {
    fail(ErrorKind::Validation, code, message);
}

[[noreturn]] inline void fail_parse(std::string_view code, const std::string& message) {
    fail(ErrorKind::Parse, code, message);
}

[[noreturn]] inline void fail_io(std::string_view code, const std::string& message) {
    fail(ErrorKind::Io, code, message);
}

}  // namespace scenfuse
