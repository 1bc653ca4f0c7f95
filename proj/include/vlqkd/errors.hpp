#pragma once

#include <stdexcept>
#include <string>

namespace vlqkd {

// Bad or inconsistent user-supplied configuration. CLI maps this to exit 2.
struct config_error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// The affine + 1-norm-ball system admits no PSD solution. CLI exit 3.
struct infeasible_error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// relative entropy requested with significant mass outside the support
// of the second argument.
struct support_violation : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Anything numerically unacceptable (eigenvalue below tolerance floor,
// non-hermitian input, solver breakdown, ...). CLI exit 4.
struct numeric_error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

} // namespace vlqkd
