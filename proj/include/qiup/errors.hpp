#pragma once

#include <stdexcept>
#include <string>

namespace qiup {

/// Rejected input values (non-positive lengths, out-of-range ratios, ...).
struct invalid_parameter : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

/// Numerical refusal or failure: unresolvable quadrature, bracket failure,
/// degenerate normalization. The message states what was required.
struct numeric_error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Malformed configuration or data file; message carries file/line context.
struct config_error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

} // namespace qiup
