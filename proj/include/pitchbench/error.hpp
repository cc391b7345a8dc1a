#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace pitchbench {

enum class ErrorKind {
    NonMonotonicTime,
    TooShort,
    BadWindow,
    BadCount,
    NoReceiver,
    DegenerateCorpus,
    NonFinite,
    EmptyTeam,
    DimMismatch,
    LengthMismatch,
    InsufficientData,
    BadSequenceLength,
    EmptyDataset,
    EmptyCorpus,
    SingularSystem,
    MissingModel,
    MissingCheckpoint,
    PossessionNotFound,
    BadFormat,
    BadConfig,
    Io,
};

std::string_view to_string(ErrorKind kind);

// Every failure raised by the library carries a kind so callers (and tests)
// can branch on the category without parsing messages.
class Error : public std::runtime_error {
public:
    Error(ErrorKind kind, const std::string& what)
        : std::runtime_error(std::string(to_string(kind)) + ": " + what), kind_(kind) {}

    ErrorKind kind() const noexcept { return kind_; }

private:
    ErrorKind kind_;
};

}  // namespace pitchbench
