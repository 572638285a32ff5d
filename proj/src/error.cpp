#include "raln/error.hpp"

#include <atomic>
#include <iostream>

namespace raln {

std::string_view errc_name(Errc code) noexcept {
    switch (code) {
        case Errc::InvalidArgument: return "InvalidArgument";
        case Errc::NonSymmetric: return "NonSymmetric";
        case Errc::NonFinite: return "NonFinite";
        case Errc::RankDeficientB: return "RankDeficientB";
        case Errc::ShapeMismatch: return "ShapeMismatch";
        case Errc::KExceedsRank: return "KExceedsRank";
        case Errc::KExceedsN: return "KExceedsN";
        case Errc::DegenerateTask: return "DegenerateTask";
        case Errc::ZeroRepresentation: return "ZeroRepresentation";
        case Errc::SingularRepresentation: return "SingularRepresentation";
        case Errc::GeometryMismatch: return "GeometryMismatch";
        case Errc::CutExceedsRank: return "CutExceedsRank";
        case Errc::DivergenceDetected: return "DivergenceDetected";
        case Errc::InvalidSpec: return "InvalidSpec";
        case Errc::BadMagic: return "BadMagic";
        case Errc::VersionUnsupported: return "VersionUnsupported";
        case Errc::TruncatedFile: return "TruncatedFile";
        case Errc::RaggedRows: return "RaggedRows";
        case Errc::NonNumericFeature: return "NonNumericFeature";
        case Errc::IndexOutOfRange: return "IndexOutOfRange";
        case Errc::Io: return "Io";
    }
    return "Unknown";
}

bool is_math_error(Errc code) noexcept {
    switch (code) {
        case Errc::NonSymmetric:
        case Errc::NonFinite:
        case Errc::RankDeficientB:
        case Errc::KExceedsRank:
        case Errc::KExceedsN:
        case Errc::DegenerateTask:
        case Errc::ZeroRepresentation:
        case Errc::SingularRepresentation:
        case Errc::GeometryMismatch:
        case Errc::CutExceedsRank:
        case Errc::DivergenceDetected:
            return true;
        default:
            return false;
    }
}

namespace {

void stderr_sink(std::string_view message) { std::cerr << "raln: warning: " << message << '\n'; }

std::atomic<WarningSink> g_sink{&stderr_sink};

}  // namespace

void set_warning_sink(WarningSink sink) noexcept { g_sink.store(sink ? sink : &stderr_sink); }

void warn(std::string_view message) { g_sink.load()(message); }

}  // namespace raln
