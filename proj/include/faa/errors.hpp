#pragma once

#include <stdexcept>
#include <string>

namespace faa {

/// Base class for failures raised by the numerical kernels.
struct NumericalError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// A column vanished where a nonzero direction was required.
struct NumericalBreakdown : NumericalError {
    using NumericalError::NumericalError;
};

/// Triangular factor has an effectively zero diagonal entry.
struct SingularR : NumericalError {
    using NumericalError::NumericalError;
};

/// An iterative kernel exhausted its sweep budget.
struct NoConvergence : NumericalError {
    using NumericalError::NumericalError;
};

/// Optimization gain is undefined for a zero residual.
struct ZeroResidual : NumericalError {
    using NumericalError::NumericalError;
};

/// An inner linear system could not be solved.
struct SingularSystem : NumericalError {
    using NumericalError::NumericalError;
};

/// Rejected run configuration. The message names the offending field.
struct ConfigError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

}  // namespace faa
