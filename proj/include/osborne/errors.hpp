#ifndef OSBORNE_ERRORS_HPP
#define OSBORNE_ERRORS_HPP

#include <stdexcept>
#include <string>

namespace osborne {

// Bad arguments: out-of-range index, negative value, malformed config.
class InvalidInput : public std::invalid_argument {
public:
  using std::invalid_argument::invalid_argument;
};

// A scaled entry or a sum left the finite positive range of double.
class NumericRangeError : public std::overflow_error {
public:
  using std::overflow_error::overflow_error;
};

// Row or column without entries; the matrix cannot be balanced directly.
// Callers should split it with scc_decompose() first.
class NotBalanceableError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

} // namespace osborne

#endif
