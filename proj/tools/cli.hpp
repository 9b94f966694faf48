#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "torsionlab/error.hpp"

namespace tlab::cli {

enum class Subcommand { kSolve, kVerify, kStability, kFlow, kReport };

struct RunConfig {
  Subcommand subcommand = Subcommand::kSolve;
  std::filesystem::path domain;  // solve, verify, flow
  std::filesystem::path family;  // stability
  std::optional<std::uint64_t> seed;  // random domain instead of a file
  int level = 5;
  std::vector<int> levels{2, 3, 4, 5};
  std::filesystem::path output = "out";
  bool plots = false;
  bool dump_mesh = false;
  int samples = 2048;
  int threads = 1;
  // flow
  double dt = 0.05;
  int max_steps = 500;
  bool freeze_R = true;
  std::string orientation = "descent";
};

/// Process exit status for an error category.
int exit_code(ErrorCategory category) noexcept;

/// "a..b" or "a,b,c" -> levels; throws ConfigError.
std::vector<int> parse_levels(const std::string& text);

/// Thread count from TORSIONLAB_THREADS, else the hardware concurrency.
int default_threads();

/// Checks ranges and input paths and creates the output directory.
void validate(const RunConfig& config);

/// Runs one subcommand; throws tlab::Error.
void run(const RunConfig& config, std::ostream& log);

/// Full entry point: parses argv, runs, maps errors to exit codes.
int main_entry(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace tlab::cli
