#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace raln {

enum class Errc {
    InvalidArgument,
    NonSymmetric,
    NonFinite,
    RankDeficientB,
    ShapeMismatch,
    KExceedsRank,
    KExceedsN,
    DegenerateTask,
    ZeroRepresentation,
    SingularRepresentation,
    GeometryMismatch,
    CutExceedsRank,
    DivergenceDetected,
    InvalidSpec,
    BadMagic,
    VersionUnsupported,
    TruncatedFile,
    RaggedRows,
    NonNumericFeature,
    IndexOutOfRange,
    Io,
};

std::string_view errc_name(Errc code) noexcept;

// True for errors that describe a violated mathematical precondition rather
// than bad input files or usage. The CLI maps these to exit code 3.
bool is_math_error(Errc code) noexcept;

class Error : public std::runtime_error {
public:
    Error(Errc code, const std::string& what)
        : std::runtime_error(std::string(errc_name(code)) + ": " + what), code_(code) {}

    Errc code() const noexcept { return code_; }

private:
    Errc code_;
};

// Non-fatal diagnostics (rank truncation and similar). Defaults to stderr.
using WarningSink = void (*)(std::string_view message);
void set_warning_sink(WarningSink sink) noexcept;
void warn(std::string_view message);

}  // namespace raln
