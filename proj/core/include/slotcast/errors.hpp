#pragma once

#include <stdexcept>
#include <string>

namespace slotcast {

// Base class for every error this library throws on purpose.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

struct MalformedRow : Error { using Error::Error; };
struct DuplicateTimestamp : Error { using Error::Error; };
struct InvariantViolation : Error { using Error::Error; };
struct BadParams : Error { using Error::Error; };
struct EmptySeries : Error { using Error::Error; };
struct EmptyTrain : Error { using Error::Error; };
struct TooFewRows : Error { using Error::Error; };
struct RankDeficient : Error { using Error::Error; };
struct SingleClass : Error { using Error::Error; };
struct LengthMismatch : Error { using Error::Error; };
struct ShapeMismatch : Error { using Error::Error; };
struct TooFewWeeks : Error { using Error::Error; };
struct AllZeroResiduals : Error { using Error::Error; };
struct ConfigError : Error { using Error::Error; };
struct IoError : Error { using Error::Error; };

} // namespace slotcast
