#pragma once

#include <stdexcept>
#include <string>

namespace varorder {

/// Numerical domain violation (non-SPD input, non-stationary model, ...).
/// Maps to process exit code 3 in the CLI.
class DomainError : public std::runtime_error {
 public:
  explicit DomainError(const std::string& what) : std::runtime_error(what) {}
};

/// Caller misuse (bad config, malformed CSV, out-of-range argument).
/// Maps to process exit code 2 in the CLI.
class UsageError : public std::runtime_error {
 public:
  explicit UsageError(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace varorder
