#pragma once

#include <stdexcept>
#include <string>

namespace codeplex {

// Mirrors cpx_status in codeplex.h; keep the numeric values in sync.
enum class ErrorCode : int {
    kInvalidArgument = 1,
    kUnterminatedString = 2,
    kParseError = 3,
    kUnsupportedConstruct = 4,
    kMissingFunction = 5,
    kBudgetExceeded = 6,
    kEmptyCatalog = 7,
    kCatalogMismatch = 8,
    kNoLabels = 9,
    kNonConvergence = 10,
    kDegenerateTable = 11,
    kTooFewQuestions = 12,
    kUnknownItem = 13,
    kSchemaError = 14,
    kInconsistentActorId = 15,
    kClientError = 16,
    kIoError = 17,
    kInternal = 99,
};

const char* error_code_name(ErrorCode code) noexcept;

class Error : public std::runtime_error {
public:
    Error(ErrorCode code, const std::string& message)
        : std::runtime_error(message), code_(code) {}

    ErrorCode code() const noexcept { return code_; }

private:
    ErrorCode code_;
};

// Syntax errors carry the 1-based source line they were raised at.
class SourceError : public Error {
public:
    SourceError(ErrorCode code, int line, const std::string& message)
        : Error(code, "line " + std::to_string(line) + ": " + message), line_(line) {}

    int line() const noexcept { return line_; }

private:
    int line_;
};

}  // namespace codeplex
