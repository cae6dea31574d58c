#pragma once

#include <stdexcept>
#include <string>

namespace epcluster {

/// Invalid input: bad dimensions, out-of-range parameters, malformed configuration.
/// The CLI maps this family to exit code 2.
class InvalidArgument : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// Numerical failure: QR non-convergence, defective eigenbasis, overflow guards.
/// The CLI maps this family to exit code 3.
class NumericalError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

} // namespace epcluster
