#pragma once

#include <stdexcept>
#include <string>

namespace sqz {

/// Base class for failures that carry domain context; callers can catch this
/// to map any library failure onto a nonzero exit status.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Malformed or inconsistent job configuration.
class ConfigError : public Error {
public:
    using Error::Error;
};

/// Calibration input could not be parsed or fails row-level validation.
/// The message carries the source name and row number.
class IngestionError : public Error {
public:
    using Error::Error;
};

/// Calibration data cannot be monotonized within tolerance.
class FitError : public Error {
public:
    FitError(const std::string& msg, double residual_db)
        : Error(msg), residual_db(residual_db) {}
    double residual_db;
};

/// Requested noise level lies outside what the fitted transfer curve can
/// reach on the chosen branch.
class UnreachableTargetError : public Error {
public:
    UnreachableTargetError(const std::string& msg, double lo_db, double hi_db)
        : Error(msg), reachable_lo_db(lo_db), reachable_hi_db(hi_db) {}
    double reachable_lo_db;
    double reachable_hi_db;
};

/// Detected variance is below the vacuum floor implied by the loss budget,
/// so no physical source variance can explain it.
class InfeasibleDetectionError : public Error {
public:
    using Error::Error;
};

/// Pre-compensation cannot meet the residual bound under the configured
/// drive limits.
class CompensationError : public Error {
public:
    CompensationError(const std::string& msg, double residual)
        : Error(msg), achievable_residual(residual) {}
    double achievable_residual;
};

/// Simulation step size too coarse for the requested dynamics.
class DiscretizationError : public Error {
public:
    using Error::Error;
};

} // namespace sqz
