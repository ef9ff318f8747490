#pragma once

#include <stdexcept>
#include <string>

namespace fairbayes {

// Base of every error thrown by the library. The CLI maps these to exit code 1,
// except ConditionFailedError which maps to exit code 2.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class SchemaError : public Error { using Error::Error; };
class DataError : public Error { using Error::Error; };
class ConfigError : public Error { using Error::Error; };
class ShapeError : public Error { using Error::Error; };
class PreconditionError : public Error { using Error::Error; };
class DomainError : public Error { using Error::Error; };
class LookupError : public Error { using Error::Error; };
class IoError : public Error { using Error::Error; };

// A group required for calibration has no rows.
class CalibrationInputError : public Error { using Error::Error; };
// Empirical PPV evaluated at a threshold that selects no rows.
class UndefinedPpvError : public Error { using Error::Error; };
// Requested PPV lies below what any threshold can reach (the base rate).
class UnreachableTargetError : public Error { using Error::Error; };
// The anchor group's empirical PPV never reaches the largest base rate.
class CalibrationInfeasibleError : public Error { using Error::Error; };
class DivergenceError : public Error { using Error::Error; };
class DegenerateTestError : public Error { using Error::Error; };
// The population model violates the sufficient condition.
class OracleInfeasibleError : public Error { using Error::Error; };

// Predictive parity is not a sensible target for this data; callers should
// consider other fairness measures.
class ConditionFailedError : public Error { using Error::Error; };

}  // namespace fairbayes
