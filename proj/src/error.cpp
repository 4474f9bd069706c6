#include "seed/error.hpp"

namespace seed {

const char* to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::NotPositiveDefinite: return "NotPositiveDefinite";
    case ErrorKind::DimensionMismatch: return "DimensionMismatch";
    case ErrorKind::TooFewSamples: return "TooFewSamples";
    case ErrorKind::NonFiniteInput: return "NonFiniteInput";
    case ErrorKind::UnsupportedMode: return "UnsupportedMode";
    case ErrorKind::MissingClass: return "MissingClass";
    case ErrorKind::TooFewClasses: return "TooFewClasses";
    case ErrorKind::SingleClassTask: return "SingleClassTask";
    case ErrorKind::ClassCollision: return "ClassCollision";
    case ErrorKind::NoTrainedExperts: return "NoTrainedExperts";
    case ErrorKind::UnknownTask: return "UnknownTask";
    case ErrorKind::EmptyEvalSet: return "EmptyEvalSet";
    case ErrorKind::TooManyTasks: return "TooManyTasks";
    case ErrorKind::BadMagic: return "BadMagic";
    case ErrorKind::CountMismatch: return "CountMismatch";
    case ErrorKind::TruncatedFile: return "TruncatedFile";
    case ErrorKind::MissingReference: return "MissingReference";
    case ErrorKind::InvalidConfig: return "InvalidConfig";
    case ErrorKind::VersionMismatch: return "VersionMismatch";
    case ErrorKind::CorruptState: return "CorruptState";
    case ErrorKind::Io: return "Io";
  }
  return "Unknown";
}

}  // namespace seed
