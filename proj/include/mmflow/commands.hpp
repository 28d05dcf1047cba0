#pragma once

#include "mmflow/config.hpp"
#include "mmflow/verify.hpp"

#include <iosfwd>

namespace mmflow {

/// Process exit codes shared by every subcommand.
enum ExitCode : int { kExitPass = 0, kExitAudit = 1, kExitFail = 2, kExitNonConverged = 3 };

struct CommandOverrides {
  std::optional<std::filesystem::path> out;
  std::optional<int> threads;
  std::optional<std::uint64_t> seed;
};

void apply_overrides(RunConfig& cfg, const CommandOverrides& o);

/// One line of a diagnostics report.
struct CheckLine {
  std::string trace;
  std::string check;
  double value = 0;
  double threshold = 0;
  Outcome outcome = Outcome::Pass;
  std::string detail;
};

/// worst outcome over the lines; Pass when empty.
Outcome worst(const std::vector<CheckLine>& lines);
int exit_code(Outcome o);

std::string diagnostics_csv(const std::vector<CheckLine>& lines, std::optional<std::uint64_t> config_hash = {});

/// Checks one trace: monotonicity, confinement, density ratios, the
/// volume-distance inequality on consecutive stored frames, a Hoelder fit and
/// the extinction time.
std::vector<CheckLine> diagnose_trace(const FlowTrace& trace, const RunConfig& cfg, const std::string& name);

/// Regression of per-trace displacement maxima against lambda (N = 1 only).
std::vector<CheckLine> diagnose_displacement(const std::vector<FlowTrace>& traces, const RunConfig& cfg);

/// Inclusion series of a paired run.
std::vector<CheckLine> diagnose_comparison(const ComparisonResult& run, const RunConfig& cfg);

/// Directories under `root` (itself included) holding t*.mmlf checkpoints.
std::vector<std::filesystem::path> find_traces(const std::filesystem::path& root);

/// Shared output helpers: traces land in <out>/<lambda>/.
std::filesystem::path lambda_dir(const RunConfig& cfg, double lambda);
void write_manifest(const RunConfig& cfg, const std::string& command, const std::vector<std::string>& files);

int cmd_step(const RunConfig& cfg, std::ostream& log);
int cmd_flow(const RunConfig& cfg, std::ostream& log);
int cmd_gmm(const RunConfig& cfg, std::ostream& log);
int cmd_compare(const RunConfig& cfg, std::ostream& log);
int cmd_diagnose(const RunConfig& cfg, const std::filesystem::path& trace_root, std::ostream& log);
int cmd_verify(const RunConfig& cfg, std::ostream& log);

}  // namespace mmflow
