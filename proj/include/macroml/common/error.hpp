#pragma once

#include <stdexcept>
#include <string>

namespace macroml {

/// Malformed or inconsistent input data (CSV content, manifests, panels).
/// The CLI maps this to exit code 2.
class DataError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// An iterative solver ran out of iterations.
class ConvergenceError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

}  // namespace macroml
