#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace nfb {

enum class ErrorCode {
    DegenerateAperture,
    InvalidRange,
    InvalidLocation,
    InvalidCoordinate,
    Shape,
    Resolution,
    SpanTooNarrow,
    Rank,
    EmptyContour,
    Validity,
    OverResolved,
    Stencil,
    NumericDomain,
    DuplicateAtom,
    UndefinedReference,
    Configuration,
};

constexpr std::string_view to_string(ErrorCode code) {
    switch (code) {
    case ErrorCode::DegenerateAperture: return "degenerate_aperture";
    case ErrorCode::InvalidRange: return "invalid_range";
    case ErrorCode::InvalidLocation: return "invalid_location";
    case ErrorCode::InvalidCoordinate: return "invalid_coordinate";
    case ErrorCode::Shape: return "shape";
    case ErrorCode::Resolution: return "resolution";
    case ErrorCode::SpanTooNarrow: return "span_too_narrow";
    case ErrorCode::Rank: return "rank";
    case ErrorCode::EmptyContour: return "empty_contour";
    case ErrorCode::Validity: return "validity";
    case ErrorCode::OverResolved: return "over_resolved";
    case ErrorCode::Stencil: return "stencil";
    case ErrorCode::NumericDomain: return "numeric_domain";
    case ErrorCode::DuplicateAtom: return "duplicate_atom";
    case ErrorCode::UndefinedReference: return "undefined_reference";
    case ErrorCode::Configuration: return "configuration";
    }
    return "unknown";
}

// Every failure raised by the library carries a machine-readable code.
class Error : public std::runtime_error {
public:
    Error(ErrorCode code, const std::string& what)
        : std::runtime_error(what), code_(code) {}

    ErrorCode code() const noexcept { return code_; }

private:
    ErrorCode code_;
};

} // namespace nfb
