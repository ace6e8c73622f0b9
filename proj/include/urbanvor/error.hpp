#pragma once

#include <stdexcept>
#include <string>

namespace urbanvor {

enum class Errc {
    TooFewSites,
    AllCollinear,
    Collinear,
    NoSitesInBox,
    InvalidBox,
    EmptySites,
    UnknownSite,
    DegeneratePolygon,
    InvalidArgument,
    MissingHeader,
    UnreadableStream,
    EmptyInput,
    UnknownMetric,
    SpecTooSmall,
    DegenerateRange,
    PaletteMetricMismatch,
    MixedExtents,
    InvalidScript,
    InvalidConfig,
    Io,
};

inline const char* to_string(Errc code) noexcept
{
    switch(code)
    {
    case Errc::TooFewSites: return "TooFewSites";
    case Errc::AllCollinear: return "AllCollinear";
    case Errc::Collinear: return "Collinear";
    case Errc::NoSitesInBox: return "NoSitesInBox";
    case Errc::InvalidBox: return "InvalidBox";
    case Errc::EmptySites: return "EmptySites";
    case Errc::UnknownSite: return "UnknownSite";
    case Errc::DegeneratePolygon: return "DegeneratePolygon";
    case Errc::InvalidArgument: return "InvalidArgument";
    case Errc::MissingHeader: return "MissingHeader";
    case Errc::UnreadableStream: return "UnreadableStream";
    case Errc::EmptyInput: return "EmptyInput";
    case Errc::UnknownMetric: return "UnknownMetric";
    case Errc::SpecTooSmall: return "SpecTooSmall";
    case Errc::DegenerateRange: return "DegenerateRange";
    case Errc::PaletteMetricMismatch: return "PaletteMetricMismatch";
    case Errc::MixedExtents: return "MixedExtents";
    case Errc::InvalidScript: return "InvalidScript";
    case Errc::InvalidConfig: return "InvalidConfig";
    case Errc::Io: return "Io";
    }
    return "Unknown";
}

/// Every failure raised by the library carries one of the codes above.
class Error : public std::runtime_error
{
public:
    Error(Errc code, const std::string& what)
        : std::runtime_error(std::string(to_string(code)) + ": " + what)
        , m_code(code)
    {}

    Errc code() const noexcept { return m_code; }

private:
    Errc m_code;
};

} // namespace urbanvor
