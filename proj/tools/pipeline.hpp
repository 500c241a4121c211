#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <vector>

#include "config.hpp"

namespace cmcnoid::cli {

/// Process exit codes.
enum ExitCode : int { kSuccess = 0, kCheckFailed = 1, kComputeError = 2 };

struct CheckResult {
  std::string stage;
  std::string name;       // inequality id, residual name or property
  double value = 0.0;
  double threshold = 0.0;
  bool holds = false;     // value < threshold unless stated otherwise in detail
  std::optional<std::size_t> sample;
  std::string detail;
};

struct RunOutcome {
  int exit_code = kSuccess;
  std::vector<CheckResult> checks;
  std::vector<std::string> stages_run;
  bool surface_integrated = false;
  std::optional<CheckResult> first_failure;
  std::optional<std::string> error;  // "<ErrorKind>: message" for compute errors
};

/// Runs the stages up to cfg.stage, writing artifacts into cfg.out:
/// traces.csv, goldman.csv, hypotheses.json (checks-only); residuals.csv
/// (unitarize); mesh.obj, mesh_diagnostics.csv (full-surface); summary.json
/// always; failure.json when a check fails or the computation throws. A
/// failed check ends the run after its stage.
RunOutcome run(const RunConfig& cfg);

}  // namespace cmcnoid::cli
