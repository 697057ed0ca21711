#include "codeplex/util.hpp"

#include "codeplex/error.hpp"

#include <cmath>
#include <cstdio>
#include <cstdlib>

namespace codeplex {

const char* error_code_name(ErrorCode code) noexcept {
    switch (code) {
        case ErrorCode::kInvalidArgument: return "InvalidArgument";
        case ErrorCode::kUnterminatedString: return "UnterminatedString";
        case ErrorCode::kParseError: return "ParseError";
        case ErrorCode::kUnsupportedConstruct: return "UnsupportedConstruct";
        case ErrorCode::kMissingFunction: return "MissingFunction";
        case ErrorCode::kBudgetExceeded: return "BudgetExceeded";
        case ErrorCode::kEmptyCatalog: return "EmptyCatalog";
        case ErrorCode::kCatalogMismatch: return "CatalogMismatch";
        case ErrorCode::kNoLabels: return "NoLabels";
        case ErrorCode::kNonConvergence: return "NonConvergence";
        case ErrorCode::kDegenerateTable: return "DegenerateTable";
        case ErrorCode::kTooFewQuestions: return "TooFewQuestions";
        case ErrorCode::kUnknownItem: return "UnknownItem";
        case ErrorCode::kSchemaError: return "SchemaError";
        case ErrorCode::kInconsistentActorId: return "InconsistentActorId";
        case ErrorCode::kClientError: return "ClientError";
        case ErrorCode::kIoError: return "IoError";
        case ErrorCode::kInternal: return "Internal";
    }
    return "Unknown";
}

std::uint64_t fnv1a64(std::string_view data) noexcept {
    std::uint64_t hash = 0xcbf29ce484222325ULL;
    for (unsigned char c : data) {
        hash ^= c;
        hash *= 0x100000001b3ULL;
    }
    return hash;
}

std::string hex_digest(std::string_view data) {
    char buf[17];
    std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(fnv1a64(data)));
    return buf;
}

double round12(double value) {
    if (!std::isfinite(value) || value == 0.0) return value;
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.12g", value);
    return std::strtod(buf, nullptr);
}

double normal_cdf(double x) noexcept { return 0.5 * std::erfc(-x / std::sqrt(2.0)); }

}  // namespace codeplex
