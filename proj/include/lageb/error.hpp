#pragma once

#include <stdexcept>
#include <string>

namespace lageb {

/// Malformed or out-of-domain input (bad arguments, config, data files).
class InputError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// A numerical procedure could not deliver a result at the requested accuracy.
class NumericalError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class QuadratureError : public NumericalError {
public:
    using NumericalError::NumericalError;
};

} // namespace lageb
