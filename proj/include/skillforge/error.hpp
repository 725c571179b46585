#pragma once

#include <stdexcept>
#include <string>

namespace skillforge {

/// Stable error classes. The numeric value doubles as the CLI exit code,
/// so values must never be reordered once released.
enum class ErrorCode : int {
    DegenerateBox = 10,
    MaskOutOfBounds = 11,
    FixtureMissing = 12,
    BackendUnavailable = 13,
    Timeout = 14,
    NoMaskAvailable = 15,
    MalformedPlannerResponse = 16,
    EmptyInstruction = 17,
    InconsistentPlanState = 18,
    UnparsablePhrase = 19,
    UnknownSkill = 20,
    IllegalTransition = 21,
    IoError = 22,
    SchemaVersionMismatch = 23,
    CorruptLibrary = 24,
    SkillNotTrained = 25,
    UnknownCondition = 26,
    SkillGap = 27,
    InconsistentStageCount = 28,
    InvalidInput = 29,
};

const char* error_code_name(ErrorCode code);

class Error : public std::runtime_error {
public:
    Error(ErrorCode code, const std::string& message)
        : std::runtime_error(std::string(error_code_name(code)) + ": " + message),
          code_(code) {}

    ErrorCode code() const noexcept { return code_; }
    int exit_code() const noexcept { return static_cast<int>(code_); }

private:
    ErrorCode code_;
};

}  // namespace skillforge
