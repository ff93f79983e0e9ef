#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>

namespace mcperm {

// Argument outside the mathematical domain of an operation (k > n, alpha not in (0,1), ...).
class DomainError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

// An iterative numeric routine failed to converge; the message carries the diagnostics.
class NumericError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Enumeration requested on a group that is too large to walk exhaustively.
class CapacityError : public std::length_error {
 public:
  using std::length_error::length_error;
};

// Malformed input data, scenario parameters, or configuration.
class ValidationError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// Operation called outside its stated precondition (e.g. a decrease on a jump step).
class PreconditionError : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

// Budget beyond the range the closed-form evaluation supports.
class UnsupportedRangeError : public std::out_of_range {
 public:
  using std::out_of_range::out_of_range;
};

// A simulation replication failed; carries the replication index.
class ReplicationError : public std::runtime_error {
 public:
  ReplicationError(std::int64_t replication, const std::string& what)
      : std::runtime_error("replication " + std::to_string(replication) + ": " + what),
        replication_(replication) {}
  std::int64_t replication() const { return replication_; }

 private:
  std::int64_t replication_;
};

}  // namespace mcperm
