#pragma once

#include <stdexcept>
#include <string>

namespace ofusim {

// Error taxonomy shared by all modules. Everything derives from Error so
// callers can catch the whole family at the CLI boundary.
struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct DimensionMismatch : Error {
    using Error::Error;
};
struct NonConvergent : Error {
    using Error::Error;
};
struct NonPositiveDefinite : Error {
    using Error::Error;
};
struct NoFeasiblePoint : Error {
    using Error::Error;
};
struct Inadmissible : Error {
    using Error::Error;
};
struct EmptyDatabase : Error {
    using Error::Error;
};
struct BudgetViolation : Error {
    using Error::Error;
};
struct MissingSnapshot : Error {
    using Error::Error;
};
struct LengthMismatch : Error {
    using Error::Error;
};
struct DegenerateCurve : Error {
    using Error::Error;
};
struct InvalidConstants : Error {
    using Error::Error;
};
struct ConfigInvalid : Error {
    using Error::Error;
};
struct IoError : Error {
    using Error::Error;
};

} // namespace ofusim
