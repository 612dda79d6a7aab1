#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace dbevo {

/// Failure categories raised by the library. Each maps to a stable name that
/// the CLI prints and tests match against.
enum class Errc {
    NonFinite,
    NoConvergence,
    NotSymmetric,
    ShapeMismatch,
    BadSpec,
    BadClass,
    StepOutOfRange,
    NonFiniteGradient,
    Diverged,
    EmptyDataset,
    EmptyClass,
    EmptyPair,
    TooFewSamples,
    EmptyTrainingSet,
    MismatchedUniverse,
    InvalidArgument,
    IoFailure,
    BadMagic,
    Truncated,
    SizeMismatch,
    LabelOutOfRange,
    ManifestMismatch,
    BadHeader,
    UsageError,
};

constexpr std::string_view errc_name(Errc e) {
    switch (e) {
    case Errc::NonFinite: return "NonFinite";
    case Errc::NoConvergence: return "NoConvergence";
    case Errc::NotSymmetric: return "NotSymmetric";
    case Errc::ShapeMismatch: return "ShapeMismatch";
    case Errc::BadSpec: return "BadSpec";
    case Errc::BadClass: return "BadClass";
    case Errc::StepOutOfRange: return "StepOutOfRange";
    case Errc::NonFiniteGradient: return "NonFiniteGradient";
    case Errc::Diverged: return "Diverged";
    case Errc::EmptyDataset: return "EmptyDataset";
    case Errc::EmptyClass: return "EmptyClass";
    case Errc::EmptyPair: return "EmptyPair";
    case Errc::TooFewSamples: return "TooFewSamples";
    case Errc::EmptyTrainingSet: return "EmptyTrainingSet";
    case Errc::MismatchedUniverse: return "MismatchedUniverse";
    case Errc::InvalidArgument: return "InvalidArgument";
    case Errc::IoFailure: return "IoFailure";
    case Errc::BadMagic: return "BadMagic";
    case Errc::Truncated: return "Truncated";
    case Errc::SizeMismatch: return "SizeMismatch";
    case Errc::LabelOutOfRange: return "LabelOutOfRange";
    case Errc::ManifestMismatch: return "ManifestMismatch";
    case Errc::BadHeader: return "BadHeader";
    case Errc::UsageError: return "UsageError";
    }
    return "Unknown";
}

class Error : public std::runtime_error {
public:
    Error(Errc code, const std::string& detail)
        : std::runtime_error(std::string(errc_name(code)) + ": " + detail), code_(code) {}

    Errc code() const noexcept { return code_; }
    std::string_view name() const noexcept { return errc_name(code_); }

private:
    Errc code_;
};

[[noreturn]] inline void fail(Errc code, const std::string& detail) { throw Error(code, detail); }

} // namespace dbevo
