#pragma once

#include <stdexcept>
#include <string>

namespace yzr {

enum class ErrorCode {
    InvalidArgument,
    EmptyToken,
    TokenTooLong,
    TokenTooShort,
    Io,
    Format,
    Conflict,
    Shape,
    NonFinite,
    StaleCache,
    VersionMismatch,
    Checksum,
    ZeroVector,
    EmptyIndex,
    DuplicateKey,
    EmptyDataset,
    TooFewTokens,
    SpecInfeasible,
    NotEnoughVariants,
    NotInitialized,
    Service,
};

const char* to_string(ErrorCode code) noexcept;

// Every failure raised by the library carries a code so the C surface can map
// it onto a status value without string matching.
class Error : public std::runtime_error {
public:
    Error(ErrorCode code, const std::string& what)
        : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}

    ErrorCode code() const noexcept { return code_; }

private:
    ErrorCode code_;
};

}  // namespace yzr
