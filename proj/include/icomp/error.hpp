#pragma once

#include <stdexcept>
#include <string>

namespace icomp {

enum class ErrorCode {
    InvalidArgument,
    NonFinite,
    DimensionMismatch,
    MalformedHeader,
    Io,
    EmptyMask,
    InvalidBundle,
    RendererFailure,
    Timeout,
};

const char* to_string(ErrorCode code);

/// Every failure raised by the library carries one of the codes above so
/// callers (and the CLI exit-code mapping) can tell them apart.
class Error : public std::runtime_error {
public:
    Error(ErrorCode code, const std::string& message)
        : std::runtime_error(message), code_(code) {}

    ErrorCode code() const noexcept { return code_; }

private:
    ErrorCode code_;
};

}  // namespace icomp
