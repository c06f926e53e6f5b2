#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace msmv {

enum class Errc {
    NoForeground,
    BackendUnavailable,
    ShapeMismatch,
    RoiOutOfBounds,
    EmptyInput,
    NoViews,
    NonSquareInput,
    IndivisibleShape,
    BadShift,
    OddShape,
    ConfigMismatch,
    DimMismatch,
    BadEpsilon,
    EmptyDataset,
    MissingColumn,
    UnreadableImage,
    BadRate,
    SingleClass,
    MalformedReport,
    BadConfig,
    Io,
};

std::string_view to_string(Errc code) noexcept;

/// Domain error raised by every msmv module. The CLI maps these to exit code 1.
class Error : public std::runtime_error {
public:
    Error(Errc code, const std::string& message)
        : std::runtime_error(std::string(to_string(code)) + ": " + message), code_(code) {}

    [[nodiscard]] Errc code() const noexcept { return code_; }

private:
    Errc code_;
};

[[noreturn]] inline void fail(Errc code, const std::string& message) { throw Error(code, message); }

}  // namespace msmv
