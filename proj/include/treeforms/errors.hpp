#pragma once

// Exception taxonomy. Every throwing operation documents which of these it
// can raise; callers match on the specific type, tests assert on it.

#include <stdexcept>
#include <string>

namespace treeforms {

struct Error : std::runtime_error {
    explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

struct DivisionByZero : Error { using Error::Error; };
struct PrecisionLoss : Error { using Error::Error; };
struct NoSquareRoot : Error { using Error::Error; };
struct ExpDivergence : Error { using Error::Error; };
struct SingularMatrix : Error { using Error::Error; };
struct UnsupportedDiscriminant : Error { using Error::Error; };
struct RadiusExceeded : Error { using Error::Error; };
struct CosetCountMismatch : Error { using Error::Error; };
struct NonTraceless : Error { using Error::Error; };
struct WeightMismatch : Error { using Error::Error; };
struct BadPrime : Error { using Error::Error; };
struct IndexOutOfRange : Error { using Error::Error; };
struct UnreducedEdge : Error { using Error::Error; };
struct BoundaryPoint : Error { using Error::Error; };
struct HypothesisViolation : Error { using Error::Error; };
struct NotFound : Error { using Error::Error; };
struct NormNotOne : Error { using Error::Error; };
struct ConfigError : Error { using Error::Error; };
struct ParseError : Error { using Error::Error; };

} // namespace treeforms
