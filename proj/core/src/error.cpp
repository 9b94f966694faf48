#include "torsionlab/error.hpp"

namespace tlab {

const char* to_string(ErrorCategory category) noexcept {
  switch (category) {
    case ErrorCategory::kConfig:
      return "config";
    case ErrorCategory::kDomain:
      return "domain";
    case ErrorCategory::kMesh:
      return "mesh";
    case ErrorCategory::kSolver:
      return "solver";
    case ErrorCategory::kResource:
      return "resource";
    case ErrorCategory::kInternal:
      return "internal";
  }
  return "internal";
}

void rethrow_with_context(const Error& e, const std::string& context) {
  const std::string what = context + ": " + e.what();
  if (const auto* s = dynamic_cast<const SolverError*>(&e)) throw SolverError(what, s->residual(), s->iterations());
  switch (e.category()) {
    case ErrorCategory::kConfig: throw ConfigError(what);
    case ErrorCategory::kDomain: throw DomainError(what);
    case ErrorCategory::kMesh: throw MeshError(what);
    case ErrorCategory::kResource: throw ResourceError(what);
    default: throw Error(e.category(), what);
  }
}

}  // namespace tlab
