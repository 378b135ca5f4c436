#pragma once

#include <cmath>
#include <stdexcept>
#include <string>

namespace softscreen {

/// Base of every error raised by the simulator.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// A parameter or input violates its documented invariant.
class InvalidArgument : public Error {
public:
    using Error::Error;
};

inline void require(bool condition, const std::string& what) {
    if (!condition) throw InvalidArgument(what);
}

inline void require_finite(double value, const std::string& what) {
    if (!std::isfinite(value)) throw InvalidArgument(what + " must be finite");
}

inline void require_positive(double value, const std::string& what) {
    require_finite(value, what);
    if (!(value > 0.0)) throw InvalidArgument(what + " must be > 0");
}

inline void require_nonneg(double value, const std::string& what) {
    require_finite(value, what);
    if (!(value >= 0.0)) throw InvalidArgument(what + " must be >= 0");
}

}  // namespace softscreen
