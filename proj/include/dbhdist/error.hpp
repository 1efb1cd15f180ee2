#ifndef DBHDIST_ERROR_HPP
#define DBHDIST_ERROR_HPP

#include <stdexcept>
#include <string>

namespace dbhdist {

// Invalid argument to a distribution or link function.
class DomainError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

// Malformed input data, configuration, or model specification. Maps to CLI
// exit code 1.
class ValidationError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// A computation that could not produce a finite result (for example a
// non-finite log-posterior at initialization). Maps to CLI exit code 2.
class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace dbhdist

#endif  // DBHDIST_ERROR_HPP
