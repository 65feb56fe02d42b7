#pragma once

#include <stdexcept>
#include <string>

namespace hgm {

enum class ErrorKind {
    Config,
    DegenerateDecomposition,
    NotHyperbolic,
    LogUndefined,
    ConstructionFailed,
    TrivialWord,
    BallTooSmall,
    NotInSection,
    NotPrimitive,
    IdentifyFailed,
    BoundViolated,
    EncounterTypeMismatch,
    WordSplitFailed,
    ConditionViolated,
    AngleTooLarge,
};

inline const char* to_string(ErrorKind k) {
    switch (k) {
    case ErrorKind::Config: return "Config";
    case ErrorKind::DegenerateDecomposition: return "DegenerateDecomposition";
    case ErrorKind::NotHyperbolic: return "NotHyperbolic";
    case ErrorKind::LogUndefined: return "LogUndefined";
    case ErrorKind::ConstructionFailed: return "ConstructionFailed";
    case ErrorKind::TrivialWord: return "TrivialWord";
    case ErrorKind::BallTooSmall: return "BallTooSmall";
    case ErrorKind::NotInSection: return "NotInSection";
    case ErrorKind::NotPrimitive: return "NotPrimitive";
    case ErrorKind::IdentifyFailed: return "IdentifyFailed";
    case ErrorKind::BoundViolated: return "BoundViolated";
    case ErrorKind::EncounterTypeMismatch: return "EncounterTypeMismatch";
    case ErrorKind::WordSplitFailed: return "WordSplitFailed";
    case ErrorKind::ConditionViolated: return "ConditionViolated";
    case ErrorKind::AngleTooLarge: return "AngleTooLarge";
    }
    return "Unknown";
}

// Process exit code for each error kind. 0 is success, 1 is reserved for
// unexpected exceptions.
inline int exit_code(ErrorKind k) {
    switch (k) {
    case ErrorKind::Config: return 2;
    case ErrorKind::BoundViolated: return 3;
    case ErrorKind::IdentifyFailed: return 4;
    case ErrorKind::BallTooSmall: return 4;
    case ErrorKind::ConditionViolated: return 5;
    case ErrorKind::AngleTooLarge: return 5;
    case ErrorKind::EncounterTypeMismatch: return 5;
    case ErrorKind::WordSplitFailed: return 6;
    case ErrorKind::NotPrimitive: return 7;
    case ErrorKind::TrivialWord: return 7;
    case ErrorKind::NotInSection: return 8;
    case ErrorKind::DegenerateDecomposition: return 9;
    case ErrorKind::NotHyperbolic: return 9;
    case ErrorKind::LogUndefined: return 9;
    case ErrorKind::ConstructionFailed: return 10;
    }
    return 1;
}

class Error : public std::runtime_error {
public:
    Error(ErrorKind kind, const std::string& what)
        : std::runtime_error(std::string(to_string(kind)) + ": " + what), kind_(kind) {}
    ErrorKind kind() const noexcept { return kind_; }

private:
    ErrorKind kind_;
};

[[noreturn]] inline void fail(ErrorKind k, const std::string& what) { throw Error(k, what); }

} // namespace hgm
