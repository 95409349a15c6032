#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "bcid/collocation.hpp"
#include "bcid/problem.hpp"
#include "bcid/recovery.hpp"
#include "bcid/trainer.hpp"

namespace bcid {

struct RecoverySettings {
  std::string mode = "auto";      ///< auto | smooth | piecewise | none
  std::string anchor = "boundary";  ///< boundary | point
  std::optional<Point> anchor_point;
  std::optional<double> anchor_value;
  int nodes = 0;  ///< 0: the training integration nodes; else a lattice of about this many
  RecoveryConfig train;
};

struct OutputSettings {
  std::string dir = "out";
  bool plots = true;
  bool checkpoint = false;
};

struct ConvergenceSettings {
  std::vector<int> ladder{16, 32, 64, 128};  ///< total boundary source counts
  int trials = 3;
  double holder_exponent = 1.0;
  double reference_slope = -1.5;
  bool recover = true;
};

/// One experiment: INI sections [problem] [collocation] [train] [recovery]
/// [output] [convergence]. Every key is optional; defaults reproduce the
/// Laplace benchmark setup.
struct ExperimentConfig {
  std::string problem = "laplace_2d";
  std::optional<DataSource> source;
  std::string data_file;
  std::optional<double> fdm_h;
  std::optional<int> eval_resolution;
  CollocationConfig collocation;
  TrainConfig train;
  RecoverySettings recovery;
  OutputSettings output;
  ConvergenceSettings convergence;

  /// Sets the training seed, which also drives sampling and recovery.
  void set_seed(std::uint64_t seed);
  void validate() const;
  /// The problem preset with the [problem] overrides applied.
  ProblemSpec problem_spec() const;
};

/// Throws ConfigurationError naming the section and key at fault.
ExperimentConfig parse_config(const std::string& text);
ExperimentConfig load_config(const std::string& path);

/// Fully resolved configuration in INI form (stable key order).
std::string canonical_text(const ExperimentConfig& cfg);
std::uint64_t fnv1a(std::string_view bytes);

}  // namespace bcid
