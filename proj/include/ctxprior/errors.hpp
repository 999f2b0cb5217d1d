#pragma once

#include <stdexcept>
#include <string>

namespace ctxprior {

// Every failure mode in the toolkit carries one of these codes so callers
// (and the CLI exit-code mapping) can react without parsing messages.
enum class ErrorCode {
    IoError,
    ParseError,
    MissingColumn,
    DimensionMismatch,
    NonFiniteValue,
    UnknownSceneReference,
    DuplicateEntry,
    InvariantViolation,
    EmptyRatingSet,
    VersionMismatch,
    CorruptPayload,
    InvalidK,
    InvalidShape,
    SingularSystem,
    ConstantInput,
    DomainError,
    TooFewSubjects,
    InsufficientScenes,
    MissingChannel,
    UnpairedDistributions,
    MissingScore,
    MissingGroundTruth,
    DegenerateFold,
    NonConvergence,
    SingleClassInput,
    EmptyAnchor,
    InvalidConfig,
};

const char* error_code_name(ErrorCode code);

class Error : public std::runtime_error {
  public:
    Error(ErrorCode code, const std::string& message)
        : std::runtime_error(std::string(error_code_name(code)) + ": " + message), code_(code) {}

    ErrorCode code() const { return code_; }

  private:
    ErrorCode code_;
};

[[noreturn]] inline void fail(ErrorCode code, const std::string& message) {
    throw Error(code, message);
}

inline void require(bool condition, ErrorCode code, const std::string& message) {
    if (!condition) fail(code, message);
}

}  // namespace ctxprior
