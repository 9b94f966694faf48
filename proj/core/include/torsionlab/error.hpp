#pragma once

#include <stdexcept>
#include <string>

namespace tlab {

/// Failure categories. Each maps to a distinct process exit code in the CLI.
enum class ErrorCategory {
  kConfig,
  kDomain,
  kMesh,
  kSolver,
  kResource,
  kInternal,
};

const char* to_string(ErrorCategory category) noexcept;

class Error : public std::runtime_error {
 public:
  Error(ErrorCategory category, const std::string& what)
      : std::runtime_error(what), category_(category) {}

  ErrorCategory category() const noexcept { return category_; }

 private:
  ErrorCategory category_;
};

class ConfigError : public Error {
 public:
  explicit ConfigError(const std::string& what) : Error(ErrorCategory::kConfig, what) {}
};

class DomainError : public Error {
 public:
  explicit DomainError(const std::string& what) : Error(ErrorCategory::kDomain, what) {}
};

class MeshError : public Error {
 public:
  explicit MeshError(const std::string& what) : Error(ErrorCategory::kMesh, what) {}
};

class SolverError : public Error {
 public:
  SolverError(const std::string& what, double residual, long iterations)
      : Error(ErrorCategory::kSolver, what), residual_(residual), iterations_(iterations) {}

  double residual() const noexcept { return residual_; }
  long iterations() const noexcept { return iterations_; }

 private:
  double residual_;
  long iterations_;
};

class ResourceError : public Error {
 public:
  explicit ResourceError(const std::string& what) : Error(ErrorCategory::kResource, what) {}
};

/// Throws an error of the same type as `e` with `context` prepended.
[[noreturn]] void rethrow_with_context(const Error& e, const std::string& context);

}  // namespace tlab
