#pragma once

#include <stdexcept>
#include <string>
#include <vector>

namespace vau {

/// Malformed input: bad intervals, misaligned corpora, invalid records.
/// Maps to CLI exit code 2.
class ValidationError : public std::runtime_error {
 public:
  explicit ValidationError(const std::string& what) : std::runtime_error(what) {}
  ValidationError(const std::string& what, std::vector<std::string> violations)
      : std::runtime_error(what), violations_(std::move(violations)) {}

  const std::vector<std::string>& violations() const noexcept { return violations_; }

 private:
  std::vector<std::string> violations_;
};

/// Out-of-domain parameter (tau < 0, budget > T, ...).
class ParameterError : public ValidationError {
 public:
  using ValidationError::ValidationError;
};

/// Dimension mismatch between a model and its input.
class ShapeError : public ValidationError {
 public:
  using ValidationError::ValidationError;
};

/// Metric undefined for the given input (single-class AUC, no positives for AP, ...).
class UndefinedMetricError : public ValidationError {
 public:
  using ValidationError::ValidationError;
};

/// External summarization service failed after retries. Exit code 3.
class ServiceError : public std::runtime_error {
 public:
  ServiceError(const std::string& what, std::string request_id)
      : std::runtime_error(what), request_id_(std::move(request_id)) {}
  const std::string& request_id() const noexcept { return request_id_; }

 private:
  std::string request_id_;
};

/// Service answered but the completion is unusable (empty text). Exit code 3.
class ContentError : public ServiceError {
 public:
  using ServiceError::ServiceError;
};

/// Transport-level failure of a single attempt; retried by summarize().
class TransportError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace vau
