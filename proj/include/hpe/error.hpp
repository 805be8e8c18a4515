#ifndef HPE_ERROR_HPP
#define HPE_ERROR_HPP

#include <stdexcept>
#include <string>

namespace hpe {

/// Bad input data or configuration. The CLI maps this to exit code 2.
class ValidationError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A numerical routine failed (solver, chain, empty denominator).
/// The CLI maps this to exit code 3.
class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace hpe

#endif
