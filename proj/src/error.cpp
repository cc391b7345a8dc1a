#include "pitchbench/error.hpp"

namespace pitchbench {

std::string_view to_string(ErrorKind kind) {
    switch (kind) {
        case ErrorKind::NonMonotonicTime: return "NonMonotonicTime";
        case ErrorKind::TooShort: return "TooShort";
        case ErrorKind::BadWindow: return "BadWindow";
        case ErrorKind::BadCount: return "BadCount";
        case ErrorKind::NoReceiver: return "NoReceiver";
        case ErrorKind::DegenerateCorpus: return "DegenerateCorpus";
        case ErrorKind::NonFinite: return "NonFinite";
        case ErrorKind::EmptyTeam: return "EmptyTeam";
        case ErrorKind::DimMismatch: return "DimMismatch";
        case ErrorKind::LengthMismatch: return "LengthMismatch";
        case ErrorKind::InsufficientData: return "InsufficientData";
        case ErrorKind::BadSequenceLength: return "BadSequenceLength";
        case ErrorKind::EmptyDataset: return "EmptyDataset";
        case ErrorKind::EmptyCorpus: return "EmptyCorpus";
        case ErrorKind::SingularSystem: return "SingularSystem";
        case ErrorKind::MissingModel: return "MissingModel";
        case ErrorKind::MissingCheckpoint: return "MissingCheckpoint";
        case ErrorKind::PossessionNotFound: return "PossessionNotFound";
        case ErrorKind::BadFormat: return "BadFormat";
        case ErrorKind::BadConfig: return "BadConfig";
        case ErrorKind::Io: return "Io";
    }
    return "Unknown";
}

}  // namespace pitchbench
