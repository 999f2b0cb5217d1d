#include "ctxprior/errors.hpp"

namespace ctxprior {

const char* error_code_name(ErrorCode code) {
    switch (code) {
        case ErrorCode::IoError: return "IoError";
        case ErrorCode::ParseError: return "ParseError";
        case ErrorCode::MissingColumn: return "MissingColumn";
        case ErrorCode::DimensionMismatch: return "DimensionMismatch";
        case ErrorCode::NonFiniteValue: return "NonFiniteValue";
        case ErrorCode::UnknownSceneReference: return "UnknownSceneReference";
        case ErrorCode::DuplicateEntry: return "DuplicateEntry";
        case ErrorCode::InvariantViolation: return "InvariantViolation";
        case ErrorCode::EmptyRatingSet: return "EmptyRatingSet";
        case ErrorCode::VersionMismatch: return "VersionMismatch";
        case ErrorCode::CorruptPayload: return "CorruptPayload";
        case ErrorCode::InvalidK: return "InvalidK";
        case ErrorCode::InvalidShape: return "InvalidShape";
        case ErrorCode::SingularSystem: return "SingularSystem";
        case ErrorCode::ConstantInput: return "ConstantInput";
        case ErrorCode::DomainError: return "DomainError";
        case ErrorCode::TooFewSubjects: return "TooFewSubjects";
        case ErrorCode::InsufficientScenes: return "InsufficientScenes";
        case ErrorCode::MissingChannel: return "MissingChannel";
        case ErrorCode::UnpairedDistributions: return "UnpairedDistributions";
        case ErrorCode::MissingScore: return "MissingScore";
        case ErrorCode::MissingGroundTruth: return "MissingGroundTruth";
        case ErrorCode::DegenerateFold: return "DegenerateFold";
        case ErrorCode::NonConvergence: return "NonConvergence";
        case ErrorCode::SingleClassInput: return "SingleClassInput";
        case ErrorCode::EmptyAnchor: return "EmptyAnchor";
        case ErrorCode::InvalidConfig: return "InvalidConfig";
    }
    return "UnknownError";
}

}  // namespace ctxprior
