#include "msmv/error.hpp"

namespace msmv {

std::string_view to_string(Errc code) noexcept {
    switch (code) {
        case Errc::NoForeground: return "NoForeground";
        case Errc::BackendUnavailable: return "BackendUnavailable";
        case Errc::ShapeMismatch: return "ShapeMismatch";
        case Errc::RoiOutOfBounds: return "RoiOutOfBounds";
        case Errc::EmptyInput: return "EmptyInput";
        case Errc::NoViews: return "NoViews";
        case Errc::NonSquareInput: return "NonSquareInput";
        case Errc::IndivisibleShape: return "IndivisibleShape";
        case Errc::BadShift: return "BadShift";
        case Errc::OddShape: return "OddShape";
        case Errc::ConfigMismatch: return "ConfigMismatch";
        case Errc::DimMismatch: return "DimMismatch";
        case Errc::BadEpsilon: return "BadEpsilon";
        case Errc::EmptyDataset: return "EmptyDataset";
        case Errc::MissingColumn: return "MissingColumn";
        case Errc::UnreadableImage: return "UnreadableImage";
        case Errc::BadRate: return "BadRate";
        case Errc::SingleClass: return "SingleClass";
        case Errc::MalformedReport: return "MalformedReport";
        case Errc::BadConfig: return "BadConfig";
        case Errc::Io: return "Io";
    }
    return "Unknown";
}

}  // namespace msmv
