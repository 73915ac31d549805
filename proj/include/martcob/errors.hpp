#pragma once

#include <stdexcept>
#include <string>

namespace martcob {

/// Base class for everything this library throws on purpose.
struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Construction / input validation.
struct ParseError : Error { using Error::Error; };
struct NegativeProbability : Error { using Error::Error; };
struct NonStochasticMatrix : Error { using Error::Error; };
struct NoStationaryDistribution : Error { using Error::Error; };
struct SizeCapExceeded : Error { using Error::Error; };
struct SystemMismatch : Error { using Error::Error; };
struct BadDirection : Error { using Error::Error; };
struct SameDirection : Error { using Error::Error; };
struct DimensionNotOne : Error { using Error::Error; };

// Solver preconditions and outcomes.
struct PeriodicChainUnsupported : Error { using Error::Error; };
struct NotNormal : Error { using Error::Error; };
struct NotStrictlyNormal : Error { using Error::Error; };
struct Unsolvable : Error { using Error::Error; };
struct NotSolvable : Error { using Error::Error; };
struct NoConvergence : Error { using Error::Error; };
struct SumsDiffer : Error { using Error::Error; };
struct ResidualNonzero : Error { using Error::Error; };

/// An identity the engine itself guarantees failed to hold; indicates a bug,
/// never bad user input.
struct InternalIdentityViolation : Error { using Error::Error; };

} // namespace martcob
