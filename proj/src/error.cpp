#include "skillforge/error.hpp"

namespace skillforge {

const char* error_code_name(ErrorCode code) {
    switch (code) {
        case ErrorCode::DegenerateBox: return "DegenerateBox";
        case ErrorCode::MaskOutOfBounds: return "MaskOutOfBounds";
        case ErrorCode::FixtureMissing: return "FixtureMissing";
        case ErrorCode::BackendUnavailable: return "BackendUnavailable";
        case ErrorCode::Timeout: return "Timeout";
        case ErrorCode::NoMaskAvailable: return "NoMaskAvailable";
        case ErrorCode::MalformedPlannerResponse: return "MalformedPlannerResponse";
        case ErrorCode::EmptyInstruction: return "EmptyInstruction";
        case ErrorCode::InconsistentPlanState: return "InconsistentPlanState";
        case ErrorCode::UnparsablePhrase: return "UnparsablePhrase";
        case ErrorCode::UnknownSkill: return "UnknownSkill";
        case ErrorCode::IllegalTransition: return "IllegalTransition";
        case ErrorCode::IoError: return "IoError";
        case ErrorCode::SchemaVersionMismatch: return "SchemaVersionMismatch";
        case ErrorCode::CorruptLibrary: return "CorruptLibrary";
        case ErrorCode::SkillNotTrained: return "SkillNotTrained";
        case ErrorCode::UnknownCondition: return "UnknownCondition";
        case ErrorCode::SkillGap: return "SkillGap";
        case ErrorCode::InconsistentStageCount: return "InconsistentStageCount";
        case ErrorCode::InvalidInput: return "InvalidInput";
    }
    return "UnknownError";
}

}  // namespace skillforge
