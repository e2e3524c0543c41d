#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace subma {

/// One CLI invocation. `spec_path` holds a problem file path or a builtin
/// problem name (for validate-frame, a frame file path or builtin frame
/// name).
struct RunConfig {
  std::string command;  // solve | certify | compare | sweep | validate-frame
  std::string spec_path;
  std::string output_dir = "out";
  std::optional<std::uint64_t> seed;    // overrides the spec's seed
  std::vector<std::string> overrides;   // key=value, applied in order
};

/// Executes the pipeline and writes all artifacts under output_dir
/// (solution grid CSV/JSON, residual log CSV, report JSON, plot series).
/// Returns the process exit status: 0 success, 2 certified failure
/// (non-convergence, failed certification), 1 usage error. Every failure
/// also writes error.json. Verbosity via SUBMA_LOG=quiet|info|debug.
int run(const RunConfig& config);

}  // namespace subma
