#pragma once

#include <filesystem>
#include <string>
#include <utility>
#include <vector>

#include "bcid/config.hpp"

namespace bcid {

/// L2 errors from a comparison table reported for other solvers on the
/// Laplace benchmark; echoed into reports as context, never recomputed.
struct ContextRow {
  std::string method;
  double medium_l2;
  double solution_l2;
};
const std::vector<ContextRow>& laplace_context_table();

struct ExperimentResult {
  std::string status = "ok";  ///< ok | aborted
  RunMetrics metrics;
  std::vector<std::pair<std::string, double>> region_estimates;
  double final_loss = 0.0;  ///< Loss1 + Loss2 at the last epoch
};

/// Build, precompute, train, recover and evaluate. When `out_dir` is
/// non-empty, writes metrics.csv, field CSVs, plots and manifest.json there.
/// TrainingAborted is rethrown after the partial metrics are written.
ExperimentResult run_experiment(const ExperimentConfig& cfg, const std::filesystem::path& out_dir);

struct SlopeFit {
  double slope = 0.0;
  double intercept = 0.0;
  double std_error = 0.0;
  bool flagged = false;  ///< slope not significantly negative
};

/// Least-squares fit of log y against log x.
SlopeFit fit_loglog(const std::vector<double>& x, const std::vector<double>& y);

/// Interior count paired with m_b total boundary sources: 100 (m_b / 40)^(d/(d-1)).
int interior_count_for(int m_b, int dim);

struct ConvergenceRow {
  int m_b = 0;
  int m_i = 0;
  double loss = 0.0;
  double l2_u = 0.0;
  double l2_eps = 0.0;
  std::vector<double> trial_l2_u;
};

struct ConvergenceResult {
  std::vector<ConvergenceRow> rows;
  SlopeFit fit;
};

/// Throws ConfigurationError with fewer than 3 rungs.
ConvergenceResult run_convergence_study(const ExperimentConfig& cfg, const std::filesystem::path& out_dir);

/// Solves the forward problem and writes boundary.csv (x,y[,z],u,q,segment)
/// at the boundary integration nodes plus the grid solution.
void run_forward(const ExperimentConfig& cfg, const std::filesystem::path& out_dir);

struct CheckResult {
  std::string name;
  bool passed = false;
  std::string detail;
};

/// Fast invariant suite used by the `check` verb.
std::vector<CheckResult> run_checks();

}  // namespace bcid
