#pragma once

#include <stdexcept>

namespace dpar {

// Input files that fail to parse; message carries file/line context.
struct ParseError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Structurally inconsistent inputs: row-count mismatches, ids out of range,
// incompatible shapes.
struct DimensionError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Invalid or infeasible configuration values.
struct ConfigError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Pipeline stages invoked out of order or with missing upstream outputs.
struct StageError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Noise calibration cannot reach the requested privacy budget.
struct CalibrationError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

}  // namespace dpar
