#pragma once

#include <stdexcept>
#include <string>

namespace slowent {

// Argument outside the domain of a map or function (e.g. x outside [0,1]).
class DomainError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

// Point and system (or two points) belong to different phase spaces.
class KindMismatch : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// A symbolic position lies outside the materialized Toeplitz levels.
class DepthExceeded : public std::out_of_range {
 public:
  using std::out_of_range::out_of_range;
};

// Malformed input data: asymmetric matrices, mismatched word lengths, bad schedules.
class InvalidInput : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

class SizeLimitExceeded : public std::length_error {
 public:
  using std::length_error::length_error;
};

// A search (bisection bracket, witness horizon) ran out of budget.
class SearchExhausted : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace slowent
