#pragma once

#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace mloc {

// Error families map to CLI exit codes: validation -> 2, numerical -> 3, io -> 4.

class ValidationError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class OutOfDomainError : public ValidationError {
 public:
  using ValidationError::ValidationError;
};

class InsufficientSampleError : public ValidationError {
 public:
  using ValidationError::ValidationError;
};

class DegenerateNeighborhoodError : public NumericalError {
 public:
  DegenerateNeighborhoodError(const std::string& what, int rank)
      : NumericalError(what), achieved_rank(rank) {}
  int achieved_rank;
};

class DisconnectedGraphError : public NumericalError {
 public:
  DisconnectedGraphError(const std::string& what, std::vector<int> sizes)
      : NumericalError(what), component_sizes(std::move(sizes)) {}
  std::vector<int> component_sizes;
};

// Query fell outside the region where kernel weights carry information.
class OutOfSupportError : public NumericalError {
 public:
  OutOfSupportError(const std::string& what, double nearest)
      : NumericalError(what), nearest_distance(nearest) {}
  double nearest_distance;
};

// Query beyond the fitted model's cutoff radius.
class ExtrapolationError : public OutOfSupportError {
 public:
  using OutOfSupportError::OutOfSupportError;
};

class DegenerateDistanceError : public NumericalError {
 public:
  DegenerateDistanceError(const std::string& what, int a, int b)
      : NumericalError(what), first(a), second(b) {}
  int first;
  int second;
};

class InsufficientScaleError : public NumericalError {
 public:
  using NumericalError::NumericalError;
};

class ConditioningError : public NumericalError {
 public:
  using NumericalError::NumericalError;
};

}  // namespace mloc
