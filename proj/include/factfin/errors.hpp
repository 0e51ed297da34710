#pragma once

#include <stdexcept>
#include <string>

namespace factfin {

struct ParseError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct ValidationError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct ConfigError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct RangeError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct InsufficientDataError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// sigma_R == 0; callers that need a number must handle this explicitly.
struct DegenerateVolatilityError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct UndefinedBaselineError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct EmptyTargetError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct ScoringError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct TemplateError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct GenerationError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct TransportError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

} // namespace factfin
