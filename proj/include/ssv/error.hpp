#pragma once

#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace ssv {

enum class ErrorCode {
  MalformedJson,
  RuleViolation,
  EmptyDataset,
  InvalidBudget,
  SchemaMismatch,
  EmptyIndex,
  IoError,
  SchemaError,
  UnknownLevel,
  NotLoaded,
  PartitionFailure,
  InvalidArgument,
};

constexpr std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::MalformedJson: return "MalformedJson";
    case ErrorCode::RuleViolation: return "RuleViolation";
    case ErrorCode::EmptyDataset: return "EmptyDataset";
    case ErrorCode::InvalidBudget: return "InvalidBudget";
    case ErrorCode::SchemaMismatch: return "SchemaMismatch";
    case ErrorCode::EmptyIndex: return "EmptyIndex";
    case ErrorCode::IoError: return "IoError";
    case ErrorCode::SchemaError: return "SchemaError";
    case ErrorCode::UnknownLevel: return "UnknownLevel";
    case ErrorCode::NotLoaded: return "NotLoaded";
    case ErrorCode::PartitionFailure: return "PartitionFailure";
    case ErrorCode::InvalidArgument: return "InvalidArgument";
  }
  return "Unknown";
}

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(std::string(to_string(code)) + ": " + message), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

/// One failed grammar constraint. `rule` is the production number (1-24)
/// of the grammar that the offending component violates; `path` is a JSON
/// pointer into the spec document.
struct RuleViolation {
  int rule = 0;
  std::string path;
  std::string message;

  bool operator==(const RuleViolation&) const = default;
};

class SpecError : public Error {
 public:
  explicit SpecError(std::vector<RuleViolation> violations)
      : Error(ErrorCode::RuleViolation, summarize(violations)), violations_(std::move(violations)) {}

  const std::vector<RuleViolation>& violations() const noexcept { return violations_; }

 private:
  static std::string summarize(const std::vector<RuleViolation>& v) {
    std::string out = std::to_string(v.size()) + " violation(s)";
    for (const auto& e : v) out += "; rule " + std::to_string(e.rule) + " at " + e.path + ": " + e.message;
    return out;
  }

  std::vector<RuleViolation> violations_;
};

/// Raised by the distributed driver when a partition task throws.
class PartitionError : public Error {
 public:
  PartitionError(int partitionId, const std::string& what)
      : Error(ErrorCode::PartitionFailure, "partition " + std::to_string(partitionId) + ": " + what),
        partitionId_(partitionId) {}

  int partitionId() const noexcept { return partitionId_; }

 private:
  int partitionId_;
};

}  // namespace ssv
