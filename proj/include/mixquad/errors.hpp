#ifndef MIXQUAD_ERRORS_HPP
#define MIXQUAD_ERRORS_HPP

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace mixquad {

// Base class for everything thrown by this library.
class Error : public std::runtime_error {
public:
  explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

// Caller handed us something malformed (dimension mismatch, negative
// exponent, bad config value, ...).
class InputError : public Error {
public:
  explicit InputError(const std::string& msg) : Error(msg) {}
};

// A computation produced non-finite values or failed a hard numerical
// contract.
class NumericalError : public Error {
public:
  explicit NumericalError(const std::string& msg) : Error(msg) {}
};

// The density's support does not determine the requested polynomial
// family uniquely (near-zero norm during orthogonalization).
class DegenerateDensityError : public NumericalError {
public:
  explicit DegenerateDensityError(const std::string& msg) : NumericalError(msg) {}
};

// A moment table of higher order is required for the requested operation.
class InsufficientMomentOrderError : public InputError {
public:
  InsufficientMomentOrderError(const std::string& msg, int required, int available)
      : InputError(msg), required_order(required), available_order(available) {}
  int required_order;
  int available_order;
};

class IoError : public Error {
public:
  explicit IoError(const std::string& msg) : Error(msg) {}
};

// Parse failure in a text file; line is 1-based.
class ParseError : public IoError {
public:
  ParseError(const std::string& msg, std::size_t line_number)
      : IoError(msg + " (line " + std::to_string(line_number) + ")"), line(line_number) {}
  std::size_t line;
};

// A results file does not cover every node of the rule.
class IncompleteBatchError : public IoError {
public:
  IncompleteBatchError(const std::string& msg, std::vector<std::int64_t> ids)
      : IoError(msg), missing_ids(std::move(ids)) {}
  std::vector<std::int64_t> missing_ids;
};

// A results file was produced for a different quadrature rule.
class StaleRuleError : public IoError {
public:
  StaleRuleError(const std::string& msg, std::uint64_t expected, std::uint64_t found)
      : IoError(msg), expected_hash(expected), found_hash(found) {}
  std::uint64_t expected_hash;
  std::uint64_t found_hash;
};

}  // namespace mixquad

#endif  // MIXQUAD_ERRORS_HPP
